"""Generate the synthetic MIEC selector table shipped as package data.

The table is SYNTHETIC: an odd, exponential-like I-V curve
I(V) = sign(V) * I_s * (exp(|V| / V0) - 1), pinned so that the read
point (0.45 V, 2.02 nA) and write point (0.47 V, 5.25 nA) are knots.
It spans about eleven decades between 0.05 V and 0.6 V.

    python scripts/make_selector_table.py [out.csv]
"""
import sys
from pathlib import Path

import numpy as np

V_READ, I_READ = 0.45, 2.02e-9
V_WRITE, I_WRITE = 0.47, 5.25e-9
V_SPAN, STEP = 0.6, 0.01

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "cryocim" / "data" / "miec_synthetic.csv"


def table():
    v0 = (V_WRITE - V_READ) / np.log(I_WRITE / I_READ)
    i_s = I_READ / np.expm1(V_READ / v0)
    n = int(round(V_SPAN / STEP))
    volts = np.round(np.arange(-n, n + 1) * STEP, 10)
    amps = np.sign(volts) * i_s * np.expm1(np.abs(volts) / v0)
    # pin the operating knots exactly
    for v, i in ((V_READ, I_READ), (V_WRITE, I_WRITE)):
        amps[np.isclose(volts, v)] = i
        amps[np.isclose(volts, -v)] = -i
    return volts, amps


def main(argv):
    out = Path(argv[1]) if len(argv) > 1 else DEFAULT_OUT
    volts, amps = table()
    with open(out, "w") as fh:
        fh.write("voltage_v,current_a\n")
        for v, i in zip(volts, amps):
            fh.write(f"{v:.2f},{i:.9e}\n")
    print(f"wrote {len(volts)} rows to {out}")


if __name__ == "__main__":
    main(sys.argv)
