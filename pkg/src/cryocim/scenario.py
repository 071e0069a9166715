"""Scenario files: schema validation and loading.

A scenario is a YAML mapping. Every section is optional and defaults to
the package defaults, so ``ops: []`` alone is a valid scenario::

    name: demo
    array:     {rows: 4, cols: 4}
    device:    {i_c_plus: 3.5e-9, i_c_minus: -3.5e-9, r_quantum: 25812.807,
                r_series: 25812.807, selector_table: default-synthetic}
    bias:      {v_read: -0.45005, v_write: 0.47014, cycle_time: 1.0e-8}
    sense:     {gain: 1000, v_dd: 1.0, references: {NAND: [-0.05, 0.15]}}
    variation: {nominal_read_current: -2.02e-9, relative_sigma: 0.1,
                n_trials: 10000, seed: 0, mode: SHARED_PER_TRIAL,
                shape: gaussian, bins: 50, workers: 1}
    ops:
      - {op: write, row: 0, col: 0, bit: 1}
      - {op: store, bits: [[0, 1], [1, 0]]}
      - {op: read, row: 0, col: 0}
      - {op: read_column, col: 0, rows: [0, 1]}
      - {op: logic, opcode: NAND, cols: [0, 1], rows: all}
      - {op: sweep, i_max: 8.0e-9, steps: 81, initial_bit: 0}
      - {op: mc, cell_bits: [0, 1], patterns: ["00", "01", "10", "11"]}
      - {op: snapshot}
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from importlib import resources
from numbers import Integral, Real
from pathlib import Path
from typing import Any

import yaml

from .controller import BiasConfig
from .device import DEFAULT_SELECTOR, QaheParams, SelectorModel, SelectorTableError, resolve_selector
from .sense import DEFAULT_REFERENCES, Opcode, SenseConfig
from .variation import SampleMode, Shape, VariationConfig


class ScenarioError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


_SECTIONS = {
    "array": {"rows": Integral, "cols": Integral},
    "device": {"i_c_plus": Real, "i_c_minus": Real, "r_quantum": Real, "r_series": Real, "selector_table": str},
    "bias": {"v_read": Real, "v_write": Real, "cycle_time": Real},
    "sense": {"gain": Real, "v_dd": Real, "references": dict},
    "variation": {"nominal_read_current": Real, "relative_sigma": Real, "n_trials": Integral, "seed": Integral,
                  "mode": str, "shape": str, "bins": Integral, "workers": Integral},
}

_OPS = {
    "write": {"required": {"row": Integral, "col": Integral, "bit": Integral}, "optional": {}},
    "store": {"required": {"bits": list}, "optional": {}},
    "read": {"required": {"row": Integral, "col": Integral}, "optional": {}},
    "read_column": {"required": {"col": Integral}, "optional": {"rows": (list, str)}},
    "logic": {"required": {"opcode": str, "cols": list}, "optional": {"rows": (list, str)}},
    "sweep": {"required": {"i_max": Real}, "optional": {"steps": Integral, "initial_bit": Integral, "name": str}},
    "mc": {"required": {}, "optional": {"name": str, "cell_bits": list, "patterns": list, "seed": Integral,
                                         "mode": str, "relative_sigma": Real, "n_trials": Integral,
                                         "nominal_read_current": Real, "shape": str}},
    "snapshot": {"required": {}, "optional": {"name": str}},
}

_TOP = {"name", "array", "device", "bias", "sense", "variation", "ops"}


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 needs a dot in floats; accept plain exponents such as 1e-9 too
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


@dataclass
class Scenario:
    name: str = "scenario"
    rows: int = 4
    cols: int = 4
    params: QaheParams = field(default_factory=QaheParams)
    selector_table: str = DEFAULT_SELECTOR
    bias: BiasConfig = field(default_factory=BiasConfig)
    sense: SenseConfig = field(default_factory=SenseConfig)
    variation: VariationConfig = field(default_factory=VariationConfig)
    workers: int = 1
    ops: list[dict] = field(default_factory=list)
    base_dir: Path = field(default_factory=Path.cwd)

    def selector(self) -> SelectorModel:
        return resolve_selector(self.selector_table, self.base_dir)


def _is(value, kind) -> bool:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, bool):
        return False
    return isinstance(value, kinds)


def _type_name(kind) -> str:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    names = {Integral: "integer", Real: "number", str: "string", list: "list", dict: "mapping"}
    return " or ".join(names.get(k, k.__name__) for k in kinds)


def _check_section(doc: dict, sec: str, out: list[str]) -> dict:
    body = doc.get(sec, {}) or {}
    if not isinstance(body, dict):
        out.append(f"{sec}: must be a mapping")
        return {}
    fields = _SECTIONS[sec]
    for k, v in body.items():
        if k not in fields:
            out.append(f"{sec}.{k}: unknown field")
        elif not _is(v, fields[k]):
            out.append(f"{sec}.{k}: expected {_type_name(fields[k])}, got {v!r}")
    return {k: v for k, v in body.items() if k in fields and _is(v, fields[k])}


def _build(out: list[str], where: str, factory, **kw):
    try:
        return factory(**kw)
    except (ValueError, TypeError) as exc:
        out.append(f"{where}: {exc}")
        return None


def _rows_arg(value, n_rows: int, where: str, out: list[str]) -> list[int] | None:
    if value is None or value == "all":
        return list(range(n_rows))
    if isinstance(value, str):
        out.append(f"{where}.rows: expected a list of row indices or 'all', got {value!r}")
        return None
    rows = []
    for r in value:
        if not _is(r, Integral) or not 0 <= r < n_rows:
            out.append(f"{where}.rows: row {r!r} out of bounds for {n_rows} rows")
        else:
            rows.append(int(r))
    if not value:
        out.append(f"{where}.rows: empty row set")
    return rows


def _check_index(value, n: int, what: str, where: str, out: list[str]) -> None:
    if _is(value, Integral) and not 0 <= value < n:
        out.append(f"{where}.{what}: index {value} out of bounds (size {n})")


def _check_op(i: int, op: Any, rows: int, cols: int, out: list[str]) -> dict | None:
    where = f"ops[{i}]"
    if not isinstance(op, dict):
        out.append(f"{where}: must be a mapping with an 'op' field")
        return None
    kind = op.get("op")
    if kind not in _OPS:
        out.append(f"{where}.op: unknown operation {kind!r}; expected one of {sorted(_OPS)}")
        return None
    spec = _OPS[kind]
    allowed = {"op", *spec["required"], *spec["optional"]}
    for k in op:
        if k not in allowed:
            out.append(f"{where}.{k}: unknown field for '{kind}'")
    n_before = len(out)
    for k, t in spec["required"].items():
        if k not in op:
            out.append(f"{where}.{k}: required for '{kind}'")
        elif not _is(op[k], t):
            out.append(f"{where}.{k}: expected {_type_name(t)}, got {op[k]!r}")
    for k, t in spec["optional"].items():
        if k in op and not _is(op[k], t):
            out.append(f"{where}.{k}: expected {_type_name(t)}, got {op[k]!r}")
    if len(out) > n_before:
        return None

    norm = dict(op)
    if "row" in op:
        _check_index(op["row"], rows, "row", where, out)
    if "col" in op:
        _check_index(op["col"], cols, "col", where, out)
    if kind == "write" and op["bit"] not in (0, 1):
        out.append(f"{where}.bit: must be 0 or 1, got {op['bit']!r}")
    if kind == "store":
        bits = op["bits"]
        if len(bits) > rows or any(not isinstance(r, list) or len(r) > cols for r in bits):
            out.append(f"{where}.bits: pattern larger than the {rows}x{cols} array")
        elif any(b not in (0, 1) or isinstance(b, bool) for r in bits for b in r):
            out.append(f"{where}.bits: entries must be 0 or 1")
    if kind in ("read_column", "logic"):
        norm["rows"] = _rows_arg(op.get("rows"), rows, where, out)
    if kind == "logic":
        try:
            opcode = Opcode.parse(op["opcode"])
            if opcode is Opcode.READ:
                out.append(f"{where}.opcode: READ is not a logic opcode; use a read op")
            norm["opcode"] = opcode.value
        except ValueError as exc:
            out.append(f"{where}.opcode: {exc}")
        c = op["cols"]
        if len(c) != 2 or len(set(c)) != 2:
            out.append(f"{where}.cols: need exactly 2 distinct operand columns, got {c!r}")
        for x in c:
            if not _is(x, Integral) or not 0 <= x < cols:
                out.append(f"{where}.cols: column {x!r} out of bounds (size {cols})")
    if kind == "sweep":
        if op["i_max"] <= 0:
            out.append(f"{where}.i_max: must be positive")
        if op.get("steps", 2) < 2:
            out.append(f"{where}.steps: must be >= 2")
        if op.get("initial_bit", 0) not in (0, 1):
            out.append(f"{where}.initial_bit: must be 0 or 1")
    if kind == "mc":
        for b in op.get("cell_bits", []):
            if b not in (0, 1) or isinstance(b, bool):
                out.append(f"{where}.cell_bits: entries must be 0 or 1, got {b!r}")
        for p in op.get("patterns", []):
            if not (isinstance(p, str) and len(p) == 2 and set(p) <= {"0", "1"}):
                out.append(f"{where}.patterns: {p!r} is not a 2-bit pattern like '01'")
        if "mode" in op and op["mode"] not in SampleMode._value2member_map_:
            out.append(f"{where}.mode: unknown mode {op['mode']!r}")
        if "shape" in op and op["shape"] not in Shape._value2member_map_:
            out.append(f"{where}.shape: unknown shape {op['shape']!r}")
    return norm


def validate(doc: Any, base_dir: Path | None = None) -> tuple[Scenario | None, list[str]]:
    """Check a parsed scenario document. Returns ``(scenario, violations)``."""
    out: list[str] = []
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        return None, ["scenario: top level must be a mapping"]
    for k in doc:
        if k not in _TOP:
            out.append(f"{k}: unknown top-level field")
    sc = Scenario(base_dir=base_dir or Path.cwd())
    if "name" in doc:
        if isinstance(doc["name"], str) and doc["name"]:
            sc.name = doc["name"]
        else:
            out.append("name: expected a non-empty string")

    arr = _check_section(doc, "array", out)
    sc.rows, sc.cols = arr.get("rows", sc.rows), arr.get("cols", sc.cols)
    for k in ("rows", "cols"):
        if getattr(sc, k) < 1:
            out.append(f"array.{k}: must be >= 1")

    dev = _check_section(doc, "device", out)
    sc.selector_table = dev.pop("selector_table", DEFAULT_SELECTOR)
    params = _build(out, "device", QaheParams, **dev)
    if params:
        sc.params = params
    try:
        sc.selector()
    except (OSError, SelectorTableError) as exc:
        out.append(f"device.selector_table: {exc}")

    bias = _build(out, "bias", BiasConfig, **_check_section(doc, "bias", out))
    if bias:
        sc.bias = bias

    sense = _check_section(doc, "sense", out)
    if "references" in sense:
        refs = dict(DEFAULT_REFERENCES)
        for name, pair in sense["references"].items():
            try:
                op = Opcode.parse(name)
            except ValueError as exc:
                out.append(f"sense.references.{name}: {exc}")
                continue
            if not (isinstance(pair, list) and len(pair) == 2 and all(_is(x, Real) for x in pair)):
                out.append(f"sense.references.{name}: expected [v_ref1, v_ref2], got {pair!r}")
                continue
            refs[op] = tuple(float(x) for x in pair)
        sense["references"] = refs
    cfg = _build(out, "sense", SenseConfig, **sense)
    if cfg:
        sc.sense = cfg

    var = _check_section(doc, "variation", out)
    sc.workers = int(var.pop("workers", 1))
    if sc.workers < 1:
        out.append("variation.workers: must be >= 1")
    var_cfg = _build(out, "variation", VariationConfig, **var)
    if var_cfg:
        sc.variation = var_cfg

    ops = doc.get("ops", [])
    if ops is None:
        ops = []
    if not isinstance(ops, list):
        out.append("ops: must be a list")
        ops = []
    sc.ops = []
    for i, op in enumerate(ops):
        norm = _check_op(i, op, sc.rows, sc.cols, out)
        if norm is not None:
            if norm["op"] == "mc":
                overrides = {k: norm[k] for k in ("seed", "mode", "relative_sigma", "n_trials",
                                                   "nominal_read_current", "shape") if k in norm}
                _build(out, f"ops[{i}]", lambda **kw: dataclasses.replace(sc.variation, **kw), **overrides)
            sc.ops.append(norm)
    return (None if out else sc), out


def bundled_scenarios() -> list[str]:
    root = resources.files("cryocim") / "scenarios"
    return sorted(p.name[: -len(".scenario")] for p in root.iterdir() if p.name.endswith(".scenario"))


def resolve_path(path: str | Path) -> Path:
    """A file path, or the name of a bundled scenario such as ``fig4_logic``."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name[: -len(".scenario")] if p.name.endswith(".scenario") else p.name
    if name in bundled_scenarios():
        ref = resources.files("cryocim") / "scenarios" / f"{name}.scenario"
        return Path(str(ref))
    return p


def read_document(path: str | Path) -> Any:
    with open(path) as fh:
        return yaml.load(fh, Loader=_Loader)


def check_file(path: str | Path) -> list[str]:
    path = resolve_path(path)
    try:
        doc = read_document(path)
    except OSError as exc:
        return [f"{path}: {exc.strerror or exc}"]
    except yaml.YAMLError as exc:
        return [f"{path}: not valid YAML ({exc})"]
    _, violations = validate(doc, path.parent)
    return violations


def load_scenario(path: str | Path) -> Scenario:
    path = resolve_path(path)
    try:
        doc = read_document(path)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"{path}: not valid YAML ({exc})"]) from None
    sc, violations = validate(doc, path.parent)
    if violations:
        raise ScenarioError(violations)
    if sc.name == "scenario":
        sc.name = path.stem
    return sc
