"""Execute a scenario's operation script and write its artifacts.

Artifacts in the output directory:

``traces.jsonl``
    header object, then one OperationTrace per line
``results.json``
    per-operation results (outputs, power, distribution summaries)
``summary.txt``
    human-readable digest
``<name>_sweep.csv``
    hysteresis sweeps
``<name>_<dist>.csv`` / ``.json``
    Monte-Carlo samples (``sample_index,value``) and summaries
``<name>_margins.json``
    reference-margin analysis of a Monte-Carlo run
``<name>_snapshot.json``
    array snapshot (``rows``, ``cols``, ``bits``) plus the header

Text files start with a ``# cryocim <version> scenario=... seed=...`` line;
JSON files carry the same information under a top-level ``header`` key.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from . import __version__
from .array import ArrayState
from .controller import Session
from .device import sweep_hysteresis
from .scenario import Scenario
from .variation import (
    SampleMode,
    logic_levels,
    margin_report,
    mc_cell_hall_voltage,
    mc_read_current,
    mc_row_voltages,
    output_classes,
)

TOOL = f"cryocim {__version__}"


class RunError(RuntimeError):
    pass


def _header(sc: Scenario) -> dict:
    return {"tool": TOOL, "scenario": sc.name, "seed": sc.variation.seed}


def _header_line(sc: Scenario) -> str:
    h = _header(sc)
    return f"{h['tool']} scenario={h['scenario']} seed={h['seed']}"


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def sweep_currents(i_max: float, steps: int) -> np.ndarray:
    """0 -> +i_max -> -i_max -> 0 on a uniform grid of ``steps`` points per leg."""
    up = np.linspace(0.0, i_max, steps)
    down = np.linspace(i_max, -i_max, 2 * steps - 1)[1:]
    back = np.linspace(-i_max, 0.0, steps)[1:]
    return np.concatenate([up, down, back])


def _op_sweep(sc, op, out_dir, idx):
    name = op.get("name", f"{sc.name}_op{idx}")
    currents = sweep_currents(op["i_max"], op.get("steps", 81))
    bits, r_xy, v_xy = sweep_hysteresis(currents, sc.params, op.get("initial_bit", 0))
    path = out_dir / f"{name}_sweep.csv"
    with open(path, "w") as fh:
        fh.write(f"# {_header_line(sc)}\n")
        fh.write("i_bias_a,bit,r_xy_ohm,v_xy_v\n")
        for i, b, r, v in zip(currents.tolist(), bits.tolist(), r_xy.tolist(), v_xy.tolist()):
            fh.write(f"{i!r},{b},{r!r},{v!r}\n")
    transitions = [
        {"index": k, "i_bias": float(currents[k]), "to_bit": int(bits[k])}
        for k in range(1, len(bits)) if bits[k] != bits[k - 1]
    ]
    if len(bits) and bits[0] != op.get("initial_bit", 0):
        transitions.insert(0, {"index": 0, "i_bias": float(currents[0]), "to_bit": int(bits[0])})
    return {"file": path.name, "points": len(currents), "transitions": transitions}


def _op_mc(sc, op, out_dir, idx):
    name = op.get("name", f"{sc.name}_op{idx}")
    overrides = {k: op[k] for k in ("seed", "mode", "relative_sigma", "n_trials", "nominal_read_current", "shape")
                 if k in op}
    cfg = dataclasses.replace(sc.variation, **overrides)
    header = {**_header(sc), "seed": cfg.seed}
    header_line = f"{TOOL} scenario={sc.name} seed={cfg.seed}"
    dists = [mc_read_current(cfg, sc.workers)]
    for b in op.get("cell_bits", [0, 1]):
        dists.append(mc_cell_hall_voltage(cfg, b, sc.params, sc.workers))
    patterns = op.get("patterns", ["00", "01", "10", "11"])
    rows = {p: mc_row_voltages(cfg, (int(p[0]), int(p[1])), sc.sense, sc.params, sc.workers) for p in patterns}
    dists.extend(rows.values())
    files = []
    for d in dists:
        stem = f"{name}_{d.name}"
        d.write_csv(out_dir / f"{stem}.csv", header_line)
        d.write_json(out_dir / f"{stem}.json", header)
        files += [f"{stem}.csv", f"{stem}.json"]
    result = {
        "mode": cfg.mode.value,
        "n_trials": cfg.n_trials,
        "files": files,
        "summaries": {d.name: d.summary for d in dists},
    }
    if set(rows) >= {"00", "01", "10", "11"}:
        report = margin_report(output_classes(rows), sc.sense)
        with open(out_dir / f"{name}_margins.json", "w") as fh:
            json.dump({"header": header, **report.to_dict()}, fh, indent=1)
            fh.write("\n")
        result["margins"] = {"ok": report.ok, "worst_margin": report.worst_margin, "worst_gap": report.worst_gap,
                             "flags": [f"{r.opcode}.{r.which}" for r in report.flags]}
        result["files"].append(f"{name}_margins.json")
    return result


def run_scenario(sc: Scenario, out_dir: str | Path) -> list[dict]:
    """Run every operation in order. Model errors are re-raised as RunError with the op index."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    array = ArrayState.blank(sc.rows, sc.cols, cell_params=sc.params, selector=sc.selector())
    session = Session(array, sc.bias, sc.sense)
    results = []
    lines = [_header_line(sc), ""]

    for idx, op in enumerate(sc.ops):
        kind = op["op"]
        n_traces = len(session.traces)
        try:
            if kind == "write":
                session.write(op["row"], op["col"], op["bit"])
                res = {"row": op["row"], "col": op["col"], "bit": op["bit"]}
            elif kind == "store":
                for r, row in enumerate(op["bits"]):
                    for c, b in enumerate(row):
                        session.write(r, c, b)
                res = {"bits": session.array.bits.tolist()}
            elif kind == "read":
                res = {"row": op["row"], "col": op["col"], "bit": session.read(op["row"], op["col"])}
            elif kind == "read_column":
                bits = session.read_column(op["col"], op["rows"])
                res = {"col": op["col"], "bits": {str(r): b for r, b in bits.items()}}
            elif kind == "logic":
                c0, c1 = op["cols"]
                bits = session.logic(op["rows"], c0, c1, op["opcode"])
                res = {"opcode": op["opcode"], "cols": [c0, c1], "outputs": {str(r): b for r, b in bits.items()}}
            elif kind == "sweep":
                res = _op_sweep(sc, op, out_dir, idx)
            elif kind == "mc":
                res = _op_mc(sc, op, out_dir, idx)
            elif kind == "snapshot":
                name = op.get("name", f"{sc.name}_op{idx}")
                snap = {"header": _header(sc), **json.loads(session.array.to_snapshot())}
                (out_dir / f"{name}_snapshot.json").write_text(_dumps(snap) + "\n")
                res = {"file": f"{name}_snapshot.json", "bits": session.array.bits.tolist()}
            else:  # pragma: no cover - schema rejects unknown ops
                raise RunError(f"unknown op {kind!r}")
        except RunError:
            raise
        except (ValueError, RuntimeError, IndexError) as exc:
            raise RunError(f"operation {idx} ({kind}): {exc}") from exc

        new = session.traces[n_traces:]
        if new:
            res["cycles"] = [t.cycle_index for t in new]
            res["power"] = new[-1].power.to_dict()
            if kind == "logic":
                res["power_per_output_bit"] = new[-1].power_per_output_bit
            if kind == "store":
                res["mean_program_power_per_cell"] = float(np.mean([t.power.per_cell_selected for t in new]))
            diag = [d for t in new for d in t.diagnostics]
            if diag:
                res["diagnostics"] = diag
        results.append({"index": idx, "op": kind, **res})
        lines.append(_summary_line(idx, kind, res))

    with open(out_dir / "traces.jsonl", "w") as fh:
        fh.write(_dumps(_header(sc)) + "\n")
        for t in session.traces:
            fh.write(_dumps(t.to_dict()) + "\n")
    with open(out_dir / "results.json", "w") as fh:
        json.dump({"header": _header(sc), "final_bits": session.array.bits.tolist(), "ops": results}, fh, indent=1)
        fh.write("\n")
    if not sc.ops:
        lines.append("(no operations)")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    return results


def _summary_line(idx: int, kind: str, res: dict) -> str:
    if kind == "write":
        p = res["power"]["per_cell_selected"]
        return f"[{idx}] write ({res['row']},{res['col']}) <- {res['bit']}   program power {p * 1e9:.3f} nW/cell"
    if kind == "store":
        return f"[{idx}] store {len(res['bits'])}x{len(res['bits'][0])}   mean program power {res['mean_program_power_per_cell'] * 1e9:.3f} nW/cell"
    if kind == "read":
        p = res["power"]["per_cell_selected"]
        return f"[{idx}] read ({res['row']},{res['col']}) -> {res['bit']}   read power {p * 1e9:.3f} nW/cell"
    if kind == "read_column":
        return f"[{idx}] read column {res['col']} -> {res['bits']}"
    if kind == "logic":
        outs = ",".join(str(v) for v in res["outputs"].values())
        return f"[{idx}] {res['opcode']} cols {res['cols']} -> {outs}   {res['power_per_output_bit'] * 1e9:.3f} nW/bit"
    if kind == "sweep":
        tr = ", ".join(f"->{t['to_bit']} at {t['i_bias'] * 1e9:+.3f} nA" for t in res["transitions"])
        return f"[{idx}] sweep {res['points']} points, transitions: {tr or 'none'}"
    if kind == "mc":
        s = "; ".join(f"{k}: mean {v['mean']:.6g} std {v['std']:.4g}" for k, v in res["summaries"].items())
        m = res.get("margins")
        tail = f"   margins ok={m['ok']} worst={m['worst_margin'] * 1e3:.2f} mV" if m else ""
        return f"[{idx}] mc {res['mode']} n={res['n_trials']}: {s}{tail}"
    return f"[{idx}] {kind} -> {res.get('file', '')}"
