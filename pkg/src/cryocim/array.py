"""Crosspoint array of selector + QAHE cells under a V/2 biasing scheme.

Lines are ideal voltage sources (no wire resistance), so every cell sees
exactly V(BL[col]) - V(WL[row]) and is solved independently.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .device import (
    QaheCellState,
    QaheParams,
    SelectorModel,
    UnsolvableBiasError,
    default_selector,
    hall_resistances,
    solve_cell_current,
    step_bits,
)


class Mode(str, enum.Enum):
    WRITE0 = "WRITE0"
    WRITE1 = "WRITE1"
    READ = "READ"
    LOGIC = "LOGIC"


class Tag(enum.IntEnum):
    UNSELECTED = 0
    HALF = 1
    SELECTED = 2


class WriteVerifyError(RuntimeError):
    """A selected cell did not reach the target state."""


class DisturbError(RuntimeError):
    """A cell outside the selected set changed state."""


@dataclass(frozen=True, eq=False)
class ArrayState:
    bits: np.ndarray
    cell_params: QaheParams = field(default_factory=QaheParams)
    selector: SelectorModel = field(default_factory=default_selector)

    def __post_init__(self):
        b = np.array(self.bits, dtype=np.int8)
        if b.ndim != 2 or b.size == 0:
            raise ValueError(f"bits must be a non-empty 2-D matrix, got shape {b.shape}")
        if not np.all((b == 0) | (b == 1)):
            raise ValueError("bits must be 0 or 1")
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @classmethod
    def blank(cls, rows: int, cols: int, **kw) -> "ArrayState":
        return cls(np.zeros((rows, cols), dtype=np.int8), **kw)

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def cell(self, row: int, col: int) -> QaheCellState:
        return QaheCellState(int(self.bits[row, col]))

    def with_bits(self, bits) -> "ArrayState":
        return ArrayState(bits, self.cell_params, self.selector)

    def same_bits(self, other: "ArrayState") -> bool:
        return self.shape == other.shape and bool(np.array_equal(self.bits, other.bits))

    def to_snapshot(self, canonical: bool = True) -> str:
        doc = {"rows": self.rows, "cols": self.cols, "bits": self.bits.ravel().tolist()}
        if canonical:
            return json.dumps(doc, separators=(",", ":"), sort_keys=True)
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_snapshot(cls, text: str, **kw) -> "ArrayState":
        doc = json.loads(text)
        rows, cols, flat = doc["rows"], doc["cols"], doc["bits"]
        if len(flat) != rows * cols:
            raise ValueError(f"snapshot has {len(flat)} bits for a {rows}x{cols} array")
        return cls(np.array(flat, dtype=np.int8).reshape(rows, cols), **kw)


@dataclass(frozen=True)
class BiasScheme:
    """Line voltages for one operation cycle.

    ``v_access`` is the full bias seen by accessed cells (the read voltage
    for READ/LOGIC, the signed write voltage for WRITE0/WRITE1).
    """

    bl_voltages: tuple[float, ...]
    wl_voltages: tuple[float, ...]
    v_access: float
    mode: Mode
    rows: tuple[int, ...] = ()
    cols: tuple[int, ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.wl_voltages), len(self.bl_voltages)

    def cell_bias(self) -> np.ndarray:
        """Matrix of BL[col] - WL[row]."""
        return np.array(self.bl_voltages)[None, :] - np.array(self.wl_voltages)[:, None]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "v_access": self.v_access,
            "bl_voltages": list(self.bl_voltages),
            "wl_voltages": list(self.wl_voltages),
            "rows": list(self.rows),
            "cols": list(self.cols),
        }


def build_bias_scheme(
    mode: Mode,
    shape: tuple[int, int],
    rows: Iterable[int],
    cols: Iterable[int],
    v: float,
) -> BiasScheme:
    """Half-select scheme: accessed BLs at ``v``, accessed WLs at 0, all else at ``v/2``.

    Accessed cells see ``v``, cells sharing one accessed line see ``v/2`` and
    the rest see 0. LOGIC needs exactly two distinct operand columns.
    """
    mode = Mode(mode)
    n_rows, n_cols = shape
    rows = tuple(sorted(set(int(r) for r in rows)))
    cols = tuple(sorted(set(int(c) for c in cols)))
    if not rows or not cols:
        raise ValueError("at least one row and one column must be accessed")
    bad_rows = [r for r in rows if not 0 <= r < n_rows]
    bad_cols = [c for c in cols if not 0 <= c < n_cols]
    if bad_rows:
        raise IndexError(f"row index out of bounds for {n_rows} rows: {bad_rows}")
    if bad_cols:
        raise IndexError(f"column index out of bounds for {n_cols} columns: {bad_cols}")
    if mode is Mode.LOGIC and len(cols) != 2:
        raise ValueError(f"LOGIC needs exactly 2 distinct operand columns, got {list(cols)}")
    half = 0.5 * v
    bl = tuple(v if c in cols else half for c in range(n_cols))
    wl = tuple(0.0 if r in rows else half for r in range(n_rows))
    return BiasScheme(bl, wl, float(v), mode, rows, cols)


@dataclass(frozen=True, eq=False)
class CellCurrentMap:
    bias: np.ndarray
    currents: np.ndarray
    tags: np.ndarray

    @property
    def selected(self) -> np.ndarray:
        return self.tags == Tag.SELECTED

    @property
    def half_selected(self) -> np.ndarray:
        return self.tags == Tag.HALF


def _tags(bias: np.ndarray, v_access: float) -> np.ndarray:
    tags = np.full(bias.shape, Tag.UNSELECTED, dtype=np.int8)
    if v_access == 0:
        return tags
    full = np.isclose(bias, v_access, rtol=1e-12, atol=0)
    tags[bias != 0] = Tag.HALF
    tags[full] = Tag.SELECTED
    return tags


def compute_cell_currents(array: ArrayState, scheme: BiasScheme) -> CellCurrentMap:
    if scheme.shape != array.shape:
        raise ValueError(f"scheme shape {scheme.shape} does not match array shape {array.shape}")
    bias = scheme.cell_bias()
    currents = np.zeros(array.shape)
    solved: dict[float, float] = {}
    for (r, c), v in np.ndenumerate(bias):
        v = float(v)
        if v not in solved:
            try:
                solved[v] = solve_cell_current(v, array.selector, array.cell_params)
            except UnsolvableBiasError as exc:
                raise UnsolvableBiasError(f"cell ({r}, {c}): {exc}") from None
        currents[r, c] = solved[v]
    bias.flags.writeable = False
    currents.flags.writeable = False
    return CellCurrentMap(bias, currents, _tags(bias, scheme.v_access))


def cell_hall_voltages(array: ArrayState, currents: CellCurrentMap) -> np.ndarray:
    return currents.currents * hall_resistances(array.bits, array.cell_params)


def row_hall_sum(array: ArrayState, currents: CellCurrentMap, row: int) -> float:
    """Sum of Hall voltages along one row (all cells, including half-selected)."""
    if not 0 <= row < array.rows:
        raise IndexError(f"row {row} out of bounds for {array.rows} rows")
    return math.fsum(cell_hall_voltages(array, currents)[row].tolist())


def row_hall_sums(array: ArrayState, currents: CellCurrentMap) -> list[float]:
    vxy = cell_hall_voltages(array, currents)
    return [math.fsum(vxy[r].tolist()) for r in range(array.rows)]


@dataclass(frozen=True)
class PowerReport:
    selected_power: float
    leakage_power: float
    per_cell_selected: float
    per_cell_leakage: float
    n_selected: int
    n_half_selected: int
    cycle_time: float
    cycle_energy: float

    @property
    def total_power(self) -> float:
        return self.selected_power + self.leakage_power

    def to_dict(self) -> dict:
        return {
            "selected_power": self.selected_power,
            "leakage_power": self.leakage_power,
            "per_cell_selected": self.per_cell_selected,
            "per_cell_leakage": self.per_cell_leakage,
            "n_selected": self.n_selected,
            "n_half_selected": self.n_half_selected,
            "cycle_time": self.cycle_time,
            "cycle_energy": self.cycle_energy,
        }


def power_report(array: ArrayState, scheme: BiasScheme, currents: CellCurrentMap, cycle_time: float = 10e-9) -> PowerReport:
    if scheme.shape != array.shape or currents.currents.shape != array.shape:
        raise ValueError("scheme, currents and array dimensions differ")
    p = np.abs(currents.bias * currents.currents)
    sel, half = currents.selected, currents.half_selected
    n_sel, n_half = int(sel.sum()), int(half.sum())
    p_sel = math.fsum(p[sel].tolist())
    p_half = math.fsum(p[half].tolist())
    return PowerReport(
        selected_power=p_sel,
        leakage_power=p_half,
        per_cell_selected=p_sel / n_sel if n_sel else 0.0,
        per_cell_leakage=p_half / n_half if n_half else 0.0,
        n_selected=n_sel,
        n_half_selected=n_half,
        cycle_time=cycle_time,
        cycle_energy=(p_sel + p_half) * cycle_time,
    )


def step_array(array: ArrayState, currents: CellCurrentMap) -> ArrayState:
    """Step every cell once with its solved current."""
    return array.with_bits(step_bits(array.bits, currents.currents, array.cell_params))


def apply_write(array: ArrayState, scheme: BiasScheme, currents: CellCurrentMap | None = None) -> ArrayState:
    """Step all cells under a write scheme, then verify target and bystanders.

    Raises :class:`WriteVerifyError` if a selected cell misses its target and
    :class:`DisturbError` if any other cell changed.
    """
    if scheme.mode not in (Mode.WRITE0, Mode.WRITE1):
        raise ValueError(f"apply_write needs a WRITE0/WRITE1 scheme, got {scheme.mode.value}")
    if currents is None:
        currents = compute_cell_currents(array, scheme)
    after = step_array(array, currents)
    target = 1 if scheme.mode is Mode.WRITE1 else 0
    sel = currents.selected
    missed = np.argwhere(sel & (after.bits != target))
    if len(missed):
        p = array.cell_params
        raise WriteVerifyError(
            f"{scheme.mode.value} failed at cells {[tuple(map(int, rc)) for rc in missed]}: "
            f"write current {currents.currents[tuple(missed[0])]!r} A does not cross "
            f"threshold {p.i_c_plus if target else p.i_c_minus!r} A"
        )
    flipped = np.argwhere(~sel & (after.bits != array.bits))
    if len(flipped):
        raise DisturbError(f"half-select disturb at cells {[tuple(map(int, rc)) for rc in flipped]}")
    return after
