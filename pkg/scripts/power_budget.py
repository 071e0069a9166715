"""Per-cell read/program power and logic power per bit as a function of the
switching threshold, using the bundled selector table.

Writes are biased at 1.5x the threshold and reads at -2.02 nA. Shows where
the program-power band (0.9-3.5 nW/cell) closes.

    python scripts/power_budget.py [--thresholds 2e-9 3.5e-9 ...]
"""
import argparse

from cryocim.array import ArrayState, DisturbError, WriteVerifyError
from cryocim.controller import bias_for_thresholds, parallel_logic, read_bit, truth_table_array, write_bit
from cryocim.device import QaheParams


def budget(i_c: float) -> dict:
    params = QaheParams(i_c_plus=i_c, i_c_minus=-i_c)
    bias = bias_for_thresholds(params)
    arr = ArrayState.blank(4, 4, cell_params=params)
    _, tw = write_bit(arr, 0, 0, 1, bias=bias)
    _, tr = read_bit(arr, 0, 0, bias=bias)
    logic_arr = truth_table_array(cell_params=params)
    _, tl = parallel_logic(logic_arr, range(4), 0, 1, "NAND", bias=bias)
    return {
        "v_read": bias.v_read,
        "v_write": bias.v_write,
        "read_nW": tr.power.per_cell_selected * 1e9,
        "program_nW": tw.power.per_cell_selected * 1e9,
        "logic_nW_per_bit": tl.power_per_output_bit * 1e9,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--thresholds", type=float, nargs="+",
                    default=[1e-9, 2e-9, 3.5e-9, 5e-9, 7.5e-9, 10e-9, 25e-9])
    args = ap.parse_args()
    print(f"{'i_c (nA)':>9} {'v_read':>9} {'v_write':>9} {'read':>8} {'program':>8} {'logic/bit':>9}")
    for ic in args.thresholds:
        try:
            b = budget(ic)
        except (DisturbError, WriteVerifyError) as exc:
            print(f"{ic * 1e9:9.2f}  not operable: {type(exc).__name__}")
            continue
        print(f"{ic * 1e9:9.2f} {b['v_read']:9.4f} {b['v_write']:9.4f} "
              f"{b['read_nW']:8.3f} {b['program_nW']:8.3f} {b['logic_nW_per_bit']:9.3f}")


if __name__ == "__main__":
    main()
