"""Full operation cycles: bias -> solve -> step -> row sums -> amplify -> sense."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .array import (
    ArrayState,
    BiasScheme,
    CellCurrentMap,
    DisturbError,
    Mode,
    PowerReport,
    apply_write,
    build_bias_scheme,
    compute_cell_currents,
    power_report,
    row_hall_sums,
    step_array,
)
from .device import R_K, QaheParams, SelectorModel, cell_voltage, default_selector, invert_selector
from .sense import Opcode, SenseConfig, amplify, is_invalid_read, read_decode, sense

# Cell voltages that put 2.02 nA (read) and 5.25 nA = 1.5 * i_c_plus (write)
# through the bundled synthetic selector in series with r_series = h/e^2.
V_READ_DEFAULT = -(0.45 + 2.02e-9 * R_K)
V_WRITE_DEFAULT = 0.47 + 5.25e-9 * R_K


@dataclass(frozen=True)
class BiasConfig:
    v_read: float = V_READ_DEFAULT
    v_write: float = V_WRITE_DEFAULT
    cycle_time: float = 10e-9

    def __post_init__(self):
        if self.v_write <= 0:
            raise ValueError(f"v_write is a magnitude and must be positive, got {self.v_write!r}")
        if self.cycle_time <= 0:
            raise ValueError(f"cycle_time must be positive, got {self.cycle_time!r}")


def bias_for_current(current: float, selector: SelectorModel | None = None,
                     params: QaheParams = QaheParams()) -> float:
    """Terminal voltage that drives ``current`` through selector + device."""
    selector = selector or default_selector()
    return cell_voltage(selector, params, invert_selector(selector, current))


def bias_for_thresholds(params: QaheParams, selector: SelectorModel | None = None,
                        read_current: float = -2.02e-9, write_margin: float = 1.5,
                        cycle_time: float = 10e-9) -> BiasConfig:
    """Read at ``read_current`` and write at ``write_margin`` times the larger threshold."""
    i_w = write_margin * max(params.i_c_plus, -params.i_c_minus)
    return BiasConfig(
        v_read=bias_for_current(read_current, selector, params),
        v_write=bias_for_current(i_w, selector, params),
        cycle_time=cycle_time,
    )


@dataclass(frozen=True, eq=False)
class OperationTrace:
    op: str
    cycle_index: int
    scheme: BiasScheme
    currents: CellCurrentMap
    row_sums: list[float]
    amplified: list[float]
    sen: list[bool]
    outputs: list[int]
    power: PowerReport
    opcode: str | None = None
    bits_after: np.ndarray | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_output_bits(self) -> int:
        return sum(self.sen)

    @property
    def power_per_output_bit(self) -> float:
        """Array power (selected + half-select leakage) per sensed bit, peripherals excluded."""
        n = self.n_output_bits
        return self.power.total_power / n if n else 0.0

    def to_dict(self) -> dict:
        return {
            "cycle_index": self.cycle_index,
            "op": self.op,
            "opcode": self.opcode,
            "scheme": self.scheme.to_dict(),
            "cell_bias": self.currents.bias.tolist(),
            "currents": self.currents.currents.tolist(),
            "tags": self.currents.tags.tolist(),
            "row_sums": list(self.row_sums),
            "amplified": list(self.amplified),
            "sen": [bool(s) for s in self.sen],
            "outputs": list(self.outputs),
            "power": self.power.to_dict(),
            "bits_after": None if self.bits_after is None else self.bits_after.tolist(),
            "diagnostics": list(self.diagnostics),
        }


def _trace(op, array, scheme, currents, active_rows, decide, bias, sense_cfg, cycle_index, opcode=None):
    """Common tail of every cycle: row sums, amplifier, gated sense, power."""
    sums = row_hall_sums(array, currents)
    amp = [amplify(v, sense_cfg) for v in sums]
    sen = [r in active_rows for r in range(array.rows)]
    outputs = [decide(amp[r]) if sen[r] else 0 for r in range(array.rows)]
    diagnostics = []
    if op == "read":
        diagnostics = [f"invalid-read row {r}: amplified voltage is exactly 0" for r in active_rows if is_invalid_read(amp[r])]
    return OperationTrace(
        op=op,
        cycle_index=cycle_index,
        scheme=scheme,
        currents=currents,
        row_sums=sums,
        amplified=amp,
        sen=sen,
        outputs=outputs,
        power=power_report(array, scheme, currents, bias.cycle_time),
        opcode=opcode,
        bits_after=array.bits,
        diagnostics=diagnostics,
    )


def _nondestructive(array: ArrayState, currents: CellCurrentMap, what: str) -> None:
    after = step_array(array, currents)
    if not after.same_bits(array):
        flipped = [tuple(map(int, rc)) for rc in np.argwhere(after.bits != array.bits)]
        raise DisturbError(f"{what} disturbed cells {flipped}")


def write_bit(array: ArrayState, row: int, col: int, bit: int, *,
              bias: BiasConfig = BiasConfig(), sense_cfg: SenseConfig = SenseConfig(),
              cycle_index: int = 0) -> tuple[ArrayState, OperationTrace]:
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    mode = Mode.WRITE1 if bit else Mode.WRITE0
    v = bias.v_write if bit else -bias.v_write
    scheme = build_bias_scheme(mode, array.shape, [row], [col], v)
    currents = compute_cell_currents(array, scheme)
    after = apply_write(array, scheme, currents)
    trace = _trace("write", after, scheme, currents, (), None, bias, sense_cfg, cycle_index)
    return after, trace


def read_bit(array: ArrayState, row: int, col: int, *,
             bias: BiasConfig = BiasConfig(), sense_cfg: SenseConfig = SenseConfig(),
             cycle_index: int = 0) -> tuple[int, OperationTrace]:
    bits, trace = read_column(array, col, rows=[row], bias=bias, sense_cfg=sense_cfg, cycle_index=cycle_index)
    return bits[row], trace


def read_column(array: ArrayState, col: int, rows: Iterable[int] | None = None, *,
                bias: BiasConfig = BiasConfig(), sense_cfg: SenseConfig = SenseConfig(),
                cycle_index: int = 0) -> tuple[dict[int, int], OperationTrace]:
    """Read one column on the given rows (all rows by default) in a single cycle."""
    rows = list(range(array.rows)) if rows is None else list(rows)
    scheme = build_bias_scheme(Mode.READ, array.shape, rows, [col], bias.v_read)
    currents = compute_cell_currents(array, scheme)
    _nondestructive(array, currents, "read")
    trace = _trace("read", array, scheme, currents, scheme.rows,
                   lambda v: read_decode(v, sense_cfg), bias, sense_cfg, cycle_index, Opcode.READ.value)
    return {r: trace.outputs[r] for r in scheme.rows}, trace


def parallel_logic(array: ArrayState, rows: Iterable[int], col_a: int, col_b: int, op: Opcode, *,
                   bias: BiasConfig = BiasConfig(), sense_cfg: SenseConfig = SenseConfig(),
                   cycle_index: int = 0) -> tuple[dict[int, int], OperationTrace]:
    """One logic cycle evaluating every row in ``rows`` at once (all rows or any subset)."""
    op = Opcode.parse(op)
    if op is Opcode.READ:
        raise ValueError("logic operations need NAND, NOR or XOR; use read_bit for READ")
    if col_a == col_b:
        raise ValueError(f"logic operands must be in different columns, got {col_a} twice")
    rows = list(rows)
    if not rows:
        raise ValueError("parallel_logic needs at least one active row")
    scheme = build_bias_scheme(Mode.LOGIC, array.shape, rows, [col_a, col_b], bias.v_read)
    currents = compute_cell_currents(array, scheme)
    _nondestructive(array, currents, f"{op.value}")
    trace = _trace("logic", array, scheme, currents, scheme.rows,
                   lambda v: sense(v, op, True, sense_cfg), bias, sense_cfg, cycle_index, op.value)
    return {r: trace.outputs[r] for r in scheme.rows}, trace


def logic_op(array: ArrayState, row: int, col_a: int, col_b: int, op: Opcode, **kw) -> tuple[int, OperationTrace]:
    bits, trace = parallel_logic(array, [row], col_a, col_b, op, **kw)
    return bits[row], trace


def store_pattern(array: ArrayState, pattern: Sequence[Sequence[int]], **kw) -> tuple[ArrayState, list[OperationTrace]]:
    """Write every cell of ``pattern`` one at a time (row-major)."""
    traces = []
    start = kw.pop("cycle_index", 0)
    for r, row in enumerate(pattern):
        for c, b in enumerate(row):
            array, t = write_bit(array, r, c, int(b), cycle_index=start + len(traces), **kw)
            traces.append(t)
    return array, traces


def truth_table_array(cols: int = 4, **kw) -> ArrayState:
    """4-row array with rows storing '00', '01', '10', '11', tiled across ``cols``."""
    pairs = [(0, 0), (0, 1), (1, 0), (1, 1)]
    bits = [[pair[c % 2] for c in range(cols)] for pair in pairs]
    return ArrayState(np.array(bits, dtype=np.int8), **kw)


class Session:
    """Threads one array through a sequence of cycles and keeps the traces."""

    def __init__(self, array: ArrayState, bias: BiasConfig = BiasConfig(), sense_cfg: SenseConfig = SenseConfig()):
        self.array = array
        self.bias = bias
        self.sense_cfg = sense_cfg
        self.traces: list[OperationTrace] = []

    @property
    def _kw(self):
        return {"bias": self.bias, "sense_cfg": self.sense_cfg, "cycle_index": len(self.traces)}

    def write(self, row, col, bit):
        self.array, t = write_bit(self.array, row, col, bit, **self._kw)
        self.traces.append(t)
        return t

    def read(self, row, col):
        bit, t = read_bit(self.array, row, col, **self._kw)
        self.traces.append(t)
        return bit

    def read_column(self, col, rows=None):
        bits, t = read_column(self.array, col, rows, **self._kw)
        self.traces.append(t)
        return bits

    def logic(self, rows, col_a, col_b, op):
        bits, t = parallel_logic(self.array, rows, col_a, col_b, op, **self._kw)
        self.traces.append(t)
        return bits
