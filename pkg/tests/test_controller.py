import itertools
import json

import numpy as np
import pytest

from cryocim.array import ArrayState, DisturbError
from cryocim.controller import (
    V_READ_DEFAULT,
    V_WRITE_DEFAULT,
    BiasConfig,
    Session,
    logic_op,
    truth_table_array,
    parallel_logic,
    read_bit,
    read_column,
    store_pattern,
    write_bit,
)
from cryocim.device import QaheParams
from cryocim.sense import Opcode

BOOL = {
    "NAND": lambda a, b: int(not (a and b)),
    "NOR": lambda a, b: int(not (a or b)),
    "XOR": lambda a, b: a ^ b,
}


@pytest.fixture
def demo():
    arr = ArrayState.blank(4, 4)
    arr, _ = write_bit(arr, 0, 0, 0)
    arr, _ = write_bit(arr, 1, 0, 1)
    return arr


def test_demo_writes(demo):
    expected = np.zeros((4, 4), dtype=np.int8)
    expected[1, 0] = 1
    np.testing.assert_array_equal(demo.bits, expected)


def test_demo_reads(demo):
    b0, t0 = read_bit(demo, 0, 0)
    b1, t1 = read_bit(demo, 1, 0)
    assert (b0, b1) == (0, 1)
    # half-selected neighbours on the row add a few uV after gain
    assert t0.amplified[0] == pytest.approx(1000 * 5.214187014e-5, rel=1e-3)
    assert t1.amplified[1] == pytest.approx(-1000 * 5.214187014e-5, rel=1e-3)
    assert t0.outputs == [0, 0, 0, 0] and t1.outputs == [0, 1, 0, 0]
    assert t0.sen == [True, False, False, False]


def test_read_twice_identical(demo):
    b1, t1 = read_bit(demo, 1, 0)
    b2, t2 = read_bit(demo, 1, 0)
    assert b1 == b2
    assert np.array_equal(t1.bits_after, demo.bits) and np.array_equal(t2.bits_after, demo.bits)
    assert t1.to_dict() == t2.to_dict()


def test_read_column(demo):
    bits, trace = read_column(demo, 0)
    assert bits == {0: 0, 1: 1, 2: 0, 3: 0}
    assert trace.diagnostics == []


def test_invalid_read_is_flagged():
    # a zero read bias gives a row sum of exactly 0
    arr = ArrayState.blank(2, 2)
    bias = BiasConfig(v_read=0.0)
    bit, trace = read_bit(arr, 0, 0, bias=bias)
    assert bit == 0
    assert any("invalid-read" in d for d in trace.diagnostics)


def test_write_same_value_no_change(demo):
    after, t1 = write_bit(demo, 1, 0, 1)
    _, t2 = write_bit(after, 1, 0, 1)
    assert after.same_bits(demo)
    assert t1.power.selected_power == t2.power.selected_power


def test_write_rejects_bad_bit(demo):
    with pytest.raises(ValueError):
        write_bit(demo, 0, 0, 2)


def test_program_and_read_power():
    arr = ArrayState.blank(4, 4)
    _, tw = write_bit(arr, 0, 0, 1)
    _, tr = read_bit(arr, 0, 0)
    # |V| * I at the frozen operating points
    assert tw.power.per_cell_selected == pytest.approx(V_WRITE_DEFAULT * 5.25e-9, rel=1e-8)
    assert tr.power.per_cell_selected == pytest.approx(abs(V_READ_DEFAULT) * 2.02e-9, rel=1e-8)
    assert 0.9e-9 <= tw.power.per_cell_selected <= 3.5e-9
    assert 0.5e-9 <= tr.power.per_cell_selected <= 2e-9


def test_store_pattern_mean_program_power():
    pattern = [[1, 0, 1, 1], [0, 1, 0, 0], [1, 1, 0, 1], [0, 0, 1, 0]]
    arr, traces = store_pattern(ArrayState.blank(4, 4), pattern)
    np.testing.assert_array_equal(arr.bits, pattern)
    assert [t.cycle_index for t in traces] == list(range(16))
    mean = np.mean([t.power.per_cell_selected for t in traces])
    assert 1.75e-9 / 2 <= mean <= 1.75e-9 * 2


@pytest.mark.parametrize("op,expected", [("NAND", [1, 1, 1, 0]), ("NOR", [1, 0, 0, 0]), ("XOR", [0, 1, 1, 0])])
def test_all_rows_truth_tables(op, expected):
    arr = truth_table_array()
    out, trace = parallel_logic(arr, range(4), 0, 1, op)
    assert [out[r] for r in range(4)] == expected
    for r in range(4):
        assert trace.amplified[r] == 1000 * trace.row_sums[r]
    assert trace.amplified[1] == 0.0 and trace.amplified[2] == 0.0
    assert trace.currents.selected.sum() == 8
    assert 1e-9 <= trace.power_per_output_bit <= 4e-9


def test_single_active_row():
    arr = truth_table_array()
    out, trace = parallel_logic(arr, [0], 0, 1, "NAND")
    assert out == {0: 1}
    assert trace.sen == [True, False, False, False]
    cm = trace.currents
    assert cm.selected.sum() == 2
    assert np.all(np.abs(cm.currents[1:]) < 1e-12)


def test_single_row_equals_logic_op():
    arr = truth_table_array()
    for op, r in itertools.product(BOOL, range(4)):
        bits, _ = parallel_logic(arr, [r], 0, 1, op)
        bit, _ = logic_op(arr, r, 0, 1, op)
        assert bits[r] == bit


def test_exhaustive_operand_blocks():
    """All 16 fillings of a 4x2 operand block, three opcodes, all rows together and each row alone."""
    for flat in itertools.product((0, 1), repeat=8):
        block = np.array(flat, dtype=np.int8).reshape(4, 2)
        arr = ArrayState(block)
        for op, fn in BOOL.items():
            together, _ = parallel_logic(arr, range(4), 0, 1, op)
            for r in range(4):
                want = fn(*map(int, block[r]))
                assert together[r] == want
                alone, _ = parallel_logic(arr, [r], 0, 1, op)
                assert alone[r] == want


def test_logic_non_destructive():
    arr = truth_table_array()
    for op in BOOL:
        _, t = parallel_logic(arr, range(4), 0, 1, op)
        assert np.array_equal(t.bits_after, arr.bits)


def test_logic_argument_errors():
    arr = truth_table_array()
    with pytest.raises(ValueError):
        parallel_logic(arr, [0], 1, 1, "NAND")
    with pytest.raises(ValueError):
        parallel_logic(arr, [], 0, 1, "NAND")
    with pytest.raises(ValueError):
        parallel_logic(arr, [0], 0, 1, Opcode.READ)
    with pytest.raises(IndexError):
        parallel_logic(arr, [0], 0, 9, "NAND")


def test_read_disturb_detected():
    arr = ArrayState(np.ones((2, 2)), cell_params=QaheParams(i_c_plus=1e-14, i_c_minus=-1e-14))
    with pytest.raises(DisturbError):
        read_bit(arr, 0, 0)


def test_session_and_trace_export():
    s = Session(ArrayState.blank(4, 4))
    s.write(0, 0, 0)
    s.write(1, 0, 1)
    assert s.read(1, 0) == 1
    assert s.logic([0, 1], 0, 1, "XOR") == {0: 0, 1: 1}
    assert [t.cycle_index for t in s.traces] == [0, 1, 2, 3]
    for t in s.traces:
        d = json.loads(json.dumps(t.to_dict()))
        assert set(d) >= {"cycle_index", "scheme", "currents", "row_sums", "amplified", "outputs", "power"}
