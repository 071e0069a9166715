"""Cell constituents: the hysteretic QAHE memory element and the MIEC selector.

Sign conventions used throughout the package:

* bit 0 <-> Hall resistance -R_K, bit 1 <-> +R_K
* a cell's bias is V(BL) - V(WL); positive current flows BL -> WL
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

#: von Klitzing constant h/e^2 in ohms
R_K = 25812.807

#: bisection stops once |KVL residual| <= SOLVE_RTOL * max(1, |v_applied|)
SOLVE_RTOL = 1e-12
SOLVE_MAXITER = 200

DEFAULT_SELECTOR = "default-synthetic"


class SelectorTableError(ValueError):
    """Malformed or non-monotone selector table."""


class SelectorRangeError(ValueError):
    """Query voltage outside the selector table span."""


class UnsolvableBiasError(ValueError):
    """No operating point of the series cell inside the selector table span."""


@dataclass(frozen=True)
class QaheParams:
    i_c_plus: float = 3.5e-9
    i_c_minus: float = -3.5e-9
    r_quantum: float = R_K
    r_series: float = R_K

    def __post_init__(self):
        if not (self.i_c_minus < 0 < self.i_c_plus):
            raise ValueError(
                f"thresholds must satisfy i_c_minus < 0 < i_c_plus, "
                f"got {self.i_c_minus!r}, {self.i_c_plus!r}"
            )
        if not self.r_quantum > 0:
            raise ValueError(f"r_quantum must be positive, got {self.r_quantum!r}")
        if not self.r_series >= 0:
            raise ValueError(f"r_series must be non-negative, got {self.r_series!r}")


@dataclass(frozen=True)
class QaheCellState:
    stored_bit: int = 0

    def __post_init__(self):
        if self.stored_bit not in (0, 1):
            raise ValueError(f"stored_bit must be 0 or 1, got {self.stored_bit!r}")


def hall_resistance(state: QaheCellState, params: QaheParams) -> float:
    return params.r_quantum if state.stored_bit else -params.r_quantum


def qahe_step(state: QaheCellState, i_bias: float, params: QaheParams) -> QaheCellState:
    """Advance one cell by one bias cycle.

    Write-0 for ``i_bias <= i_c_minus``, write-1 for ``i_bias >= i_c_plus``,
    otherwise the state is held (read region). Both boundaries are inclusive.
    """
    if i_bias <= params.i_c_minus:
        return QaheCellState(0)
    if i_bias >= params.i_c_plus:
        return QaheCellState(1)
    return state


def hall_voltage(state: QaheCellState, i_bias: float, params: QaheParams) -> float:
    return i_bias * hall_resistance(state, params)


# Vectorised forms used by the array engine. They must agree elementwise
# with the scalar functions above.

def hall_resistances(bits: np.ndarray, params: QaheParams) -> np.ndarray:
    return np.where(np.asarray(bits) == 1, params.r_quantum, -params.r_quantum)


def step_bits(bits: np.ndarray, currents: np.ndarray, params: QaheParams) -> np.ndarray:
    bits = np.asarray(bits)
    currents = np.asarray(currents)
    out = np.where(currents <= params.i_c_minus, 0, bits)
    return np.where(currents >= params.i_c_plus, 1, out).astype(bits.dtype)


def sweep_hysteresis(currents: Sequence[float], params: QaheParams, initial_bit: int = 0):
    """Drive one cell through a bias-current sequence.

    Returns ``(bits, r_xy, v_xy)`` arrays, each recorded after the step at
    the corresponding current.
    """
    state = QaheCellState(initial_bit)
    bits, r_xy, v_xy = [], [], []
    for i in currents:
        state = qahe_step(state, float(i), params)
        bits.append(state.stored_bit)
        r_xy.append(hall_resistance(state, params))
        v_xy.append(hall_voltage(state, float(i), params))
    return np.array(bits, dtype=np.int8), np.array(r_xy), np.array(v_xy)


@dataclass(frozen=True, eq=False)
class SelectorModel:
    """Tabulated I-V characteristic of the MIEC selector.

    With ``interpolation="loglinear"`` (default) the current between knots is
    interpolated linearly in log|I| with the sign preserved. Segments touching
    a zero sample, or changing sign, fall back to plain linear interpolation.
    ``interpolation="linear"`` uses linear segments everywhere.
    """

    voltages: np.ndarray
    currents: np.ndarray
    source: str = ""
    interpolation: str = "loglinear"

    def __post_init__(self):
        if self.interpolation not in ("loglinear", "linear"):
            raise SelectorTableError(f"unknown interpolation {self.interpolation!r}")
        v = np.array(self.voltages, dtype=float)
        i = np.array(self.currents, dtype=float)
        _check_table(v, i)
        v.flags.writeable = False
        i.flags.writeable = False
        object.__setattr__(self, "voltages", v)
        object.__setattr__(self, "currents", i)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, float]], source: str = "",
                     interpolation: str = "loglinear") -> "SelectorModel":
        if len(samples) == 0:
            raise SelectorTableError("selector table has no samples")
        v, i = zip(*samples)
        return cls(np.array(v), np.array(i), source, interpolation)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.voltages.tolist(), self.currents.tolist()))

    @property
    def span(self) -> tuple[float, float]:
        return float(self.voltages[0]), float(self.voltages[-1])

    def __len__(self):
        return len(self.voltages)

    def __repr__(self):
        lo, hi = self.span
        return f"SelectorModel({len(self)} samples, {lo:g}..{hi:g} V, source={self.source!r})"


def _check_table(v: np.ndarray, i: np.ndarray) -> None:
    if v.ndim != 1 or v.shape != i.shape:
        raise SelectorTableError("voltage and current columns must be 1-D and equal length")
    if len(v) < 2:
        raise SelectorTableError(f"selector table needs at least 2 samples, got {len(v)}")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(i))):
        raise SelectorTableError("selector table contains non-finite values")
    dv = np.diff(v)
    if np.any(dv <= 0):
        k = int(np.argmax(dv <= 0)) + 1
        raise SelectorTableError(f"voltages must be strictly increasing (row {k + 1}: {v[k]!r} after {v[k - 1]!r})")
    di = np.diff(i)
    if np.any(di < 0):
        k = int(np.argmax(di < 0)) + 1
        raise SelectorTableError(f"currents must be non-decreasing (row {k + 1}: {i[k]!r} after {i[k - 1]!r})")


def selector_current(model: SelectorModel, v: float) -> float:
    """Interpolated selector current at voltage ``v``; knots are returned exactly."""
    vs, cs = model.voltages, model.currents
    lo, hi = model.span
    if not (lo <= v <= hi):
        raise SelectorRangeError(f"voltage {v!r} V outside selector table span [{lo!r}, {hi!r}] V")
    k = int(np.searchsorted(vs, v, side="right")) - 1
    if k >= len(vs) - 1:
        return float(cs[-1])
    v0, v1 = float(vs[k]), float(vs[k + 1])
    i0, i1 = float(cs[k]), float(cs[k + 1])
    if v == v0:
        return i0
    t = (v - v0) / (v1 - v0)
    if i0 * i1 > 0 and model.interpolation == "loglinear":
        # both same sign and nonzero
        a0, a1 = math.log(abs(i0)), math.log(abs(i1))
        i = math.copysign(math.exp(a0 + t * (a1 - a0)), i0)
    else:
        i = i0 + t * (i1 - i0)
    # rounding must not leave the segment, or monotonicity breaks at knots
    return min(max(i, i0), i1)


def load_selector_table(path: str | Path, interpolation: str = "loglinear") -> SelectorModel:
    """Read a ``voltage_v,current_a`` CSV into a validated :class:`SelectorModel`."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise SelectorTableError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if header != ["voltage_v", "current_a"]:
        raise SelectorTableError(f"{path}: expected header 'voltage_v,current_a', got {','.join(header)!r}")
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise SelectorTableError(f"{path}: line {lineno}: expected 2 columns, got {len(row)}")
        try:
            samples.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise SelectorTableError(f"{path}: line {lineno}: {exc}") from None
    if not samples:
        raise SelectorTableError(f"{path}: no data rows")
    v = np.array([s[0] for s in samples])
    i = np.array([s[1] for s in samples])
    dv = np.diff(v)
    if np.any(dv <= 0):
        k = int(np.argmax(dv <= 0)) + 1
        raise SelectorTableError(f"{path}: line {k + 2}: voltage {v[k]!r} not above previous {v[k - 1]!r}")
    di = np.diff(i)
    if np.any(di < 0):
        k = int(np.argmax(di < 0)) + 1
        raise SelectorTableError(f"{path}: line {k + 2}: current {i[k]!r} below previous {i[k - 1]!r}")
    return SelectorModel(v, i, str(path), interpolation)


_default_selector = None


def default_selector() -> SelectorModel:
    """The bundled SYNTHETIC selector table (not fitted to measured data)."""
    global _default_selector
    if _default_selector is None:
        ref = resources.files("cryocim") / "data" / "miec_synthetic.csv"
        with resources.as_file(ref) as p:
            model = load_selector_table(p)
        _default_selector = SelectorModel(model.voltages, model.currents, DEFAULT_SELECTOR)
    return _default_selector


def resolve_selector(spec: str | Path | SelectorModel | None, base: Path | None = None) -> SelectorModel:
    if isinstance(spec, SelectorModel):
        return spec
    if spec is None or str(spec) == DEFAULT_SELECTOR:
        return default_selector()
    p = Path(spec)
    if base is not None and not p.is_absolute():
        p = base / p
    return load_selector_table(p)


def cell_voltage(selector: SelectorModel, params: QaheParams, v_sel: float) -> float:
    """Terminal voltage of the series cell when the selector drops ``v_sel``."""
    return v_sel + selector_current(selector, v_sel) * params.r_series


def solve_cell_current(v_applied: float, selector: SelectorModel, params: QaheParams) -> float:
    """Current through selector + device for a terminal voltage ``v_applied``."""
    return solve_cell(v_applied, selector, params)[1]


def solve_cell(v_applied: float, selector: SelectorModel, params: QaheParams) -> tuple[float, float]:
    """Operating point ``(v_sel, current)`` of the series cell.

    Solves ``v_applied = v_sel + I_sel(v_sel) * r_series`` by bisection on
    the selector drop; the left side is strictly increasing in ``v_sel``, so
    the bracket over the table span always converges when it exists.
    """
    v_applied = float(v_applied)
    lo, hi = selector.span
    if v_applied == 0 and lo <= 0 <= hi and selector_current(selector, 0.0) == 0:
        return 0.0, 0.0
    if params.r_series == 0:
        try:
            return v_applied, selector_current(selector, v_applied)
        except SelectorRangeError as exc:
            raise UnsolvableBiasError(str(exc)) from None

    f_lo = cell_voltage(selector, params, lo) - v_applied
    f_hi = cell_voltage(selector, params, hi) - v_applied
    if f_lo > 0 or f_hi < 0:
        raise UnsolvableBiasError(
            f"bias {v_applied!r} V outside solvable range "
            f"[{f_lo + v_applied!r}, {f_hi + v_applied!r}] V of the cell"
        )
    if f_lo == 0:
        return lo, selector_current(selector, lo)
    if f_hi == 0:
        return hi, selector_current(selector, hi)

    tol = SOLVE_RTOL * max(1.0, abs(v_applied))
    best_v, best_f = (lo, f_lo) if -f_lo < f_hi else (hi, f_hi)
    for _ in range(SOLVE_MAXITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = cell_voltage(selector, params, mid) - v_applied
        if abs(f_mid) < abs(best_f):
            best_v, best_f = mid, f_mid
        if abs(f_mid) <= tol:
            break
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    return best_v, selector_current(selector, best_v)


def kvl_residual(v_applied: float, v_sel: float, current: float, params: QaheParams) -> float:
    return abs(v_applied - v_sel - current * params.r_series)


def invert_selector(selector: SelectorModel, current: float) -> float:
    """Selector voltage producing ``current`` (inverse interpolation)."""
    cs, vs = selector.currents, selector.voltages
    if not (cs[0] <= current <= cs[-1]):
        raise SelectorRangeError(f"current {current!r} A outside table range [{cs[0]!r}, {cs[-1]!r}] A")
    k = int(np.searchsorted(cs, current, side="right")) - 1
    k = min(max(k, 0), len(cs) - 2)
    i0, i1 = float(cs[k]), float(cs[k + 1])
    v0, v1 = float(vs[k]), float(vs[k + 1])
    if current == i0:
        return v0
    if i1 == i0:
        return v0
    if i0 * i1 > 0 and selector.interpolation == "loglinear":
        a0, a1 = math.log(abs(i0)), math.log(abs(i1))
        t = (math.log(abs(current)) - a0) / (a1 - a0)
    else:
        t = (current - i0) / (i1 - i0)
    return v0 + t * (v1 - v0)
