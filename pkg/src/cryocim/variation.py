"""Monte-Carlo study of read-current variation.

Random numbers come from counter-based Philox streams, one per fixed-size
block of trials, keyed by ``(seed, block index)``. Blocks can therefore be
drawn in any order or in parallel without changing a single sample.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .device import QaheCellState, QaheParams, hall_resistance
from .sense import LOGIC_OPCODES, Opcode, SenseConfig, amplify, select_references

BLOCK = 1024
N_STREAMS = 2  # one per operand cell


class SampleMode(str, enum.Enum):
    SHARED_PER_TRIAL = "SHARED_PER_TRIAL"
    PER_CELL = "PER_CELL"


class Shape(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class VariationConfig:
    nominal_read_current: float = -2.02e-9
    relative_sigma: float = 0.10
    n_trials: int = 10000
    seed: int = 0
    mode: SampleMode = SampleMode.SHARED_PER_TRIAL
    shape: Shape = Shape.GAUSSIAN
    bins: int = 50

    def __post_init__(self):
        object.__setattr__(self, "mode", SampleMode(self.mode))
        object.__setattr__(self, "shape", Shape(self.shape))
        if not self.relative_sigma >= 0:
            raise ValueError(f"relative_sigma must be >= 0, got {self.relative_sigma!r}")
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials!r}")
        if self.bins < 1:
            raise ValueError(f"bins must be >= 1, got {self.bins!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed!r}")

    @property
    def sigma(self) -> float:
        return self.relative_sigma * abs(self.nominal_read_current)


def _block(cfg: VariationConfig, k: int) -> np.ndarray:
    n = min(BLOCK, cfg.n_trials - k * BLOCK)
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(k,))
    rng = np.random.Generator(np.random.Philox(ss))
    if cfg.shape is Shape.GAUSSIAN:
        return rng.standard_normal((n, N_STREAMS))
    # unit-variance uniform on [-sqrt(3), sqrt(3)]
    return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), (n, N_STREAMS))


def standard_deviates(cfg: VariationConfig, workers: int | None = None) -> np.ndarray:
    """Zero-mean, unit-variance deviates of shape ``(n_trials, 2)``."""
    n_blocks = -(-cfg.n_trials // BLOCK)
    ks = range(n_blocks)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda k: _block(cfg, k), ks))
    else:
        blocks = [_block(cfg, k) for k in ks]
    return np.concatenate(blocks, axis=0)


def operand_currents(cfg: VariationConfig, workers: int | None = None) -> np.ndarray:
    """Per-trial currents of the two operand cells, shape ``(n_trials, 2)``."""
    z = standard_deviates(cfg, workers)
    if cfg.mode is SampleMode.SHARED_PER_TRIAL:
        z = np.repeat(z[:, :1], N_STREAMS, axis=1)
    return cfg.nominal_read_current + cfg.sigma * z


def sample_read_currents(cfg: VariationConfig, workers: int | None = None) -> np.ndarray:
    return operand_currents(cfg, workers)[:, 0]


@dataclass(frozen=True, eq=False)
class Distribution:
    name: str
    unit: str
    samples: np.ndarray = field(repr=False)
    bins: int = 50
    summary: dict = field(init=False, repr=False)
    bin_edges: np.ndarray = field(init=False, repr=False)
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        lo, hi = float(x.min()), float(x.max())
        counts, edges = np.histogram(x, bins=self.bins, range=(lo, hi))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "summary", {
            "mean": float(x.mean()),
            "std": float(x.std()),
            "min": lo,
            "max": hi,
            "n": int(x.size),
        })

    @property
    def mean(self) -> float:
        return self.summary["mean"]

    @property
    def std(self) -> float:
        return self.summary["std"]

    @property
    def range(self) -> tuple[float, float]:
        return self.summary["min"], self.summary["max"]

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "unit": self.unit,
            **self.summary,
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
        }

    def write_csv(self, path, header: str = "") -> None:
        with open(path, "w") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write("sample_index,value\n")
            for k, v in enumerate(self.samples.tolist()):
                fh.write(f"{k},{v!r}\n")

    def write_json(self, path, header: dict | None = None) -> None:
        doc = {"header": header or {}, **self.to_json_dict()}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")


def mc_read_current(cfg: VariationConfig, workers: int | None = None) -> Distribution:
    return Distribution("read_current", "A", sample_read_currents(cfg, workers), cfg.bins)


def mc_cell_hall_voltage(cfg: VariationConfig, bit: int = 0, params: QaheParams = QaheParams(),
                         workers: int | None = None) -> Distribution:
    r_xy = hall_resistance(QaheCellState(bit), params)
    return Distribution(f"cell_hall_voltage_bit{bit}", "V", sample_read_currents(cfg, workers) * r_xy, cfg.bins)


def mc_row_voltages(cfg: VariationConfig, bits: tuple[int, int], sense_cfg: SenseConfig = SenseConfig(),
                    params: QaheParams = QaheParams(), workers: int | None = None) -> Distribution:
    """Amplified row voltage when the two operand cells store ``bits``."""
    a, b = bits
    i = operand_currents(cfg, workers)
    r_a = hall_resistance(QaheCellState(a), params)
    r_b = hall_resistance(QaheCellState(b), params)
    v_row = i[:, 0] * r_a + i[:, 1] * r_b
    return Distribution(f"row_voltage_{a}{b}", "V", amplify(v_row, sense_cfg), cfg.bins)


@dataclass(frozen=True)
class ReferenceMargin:
    opcode: str
    which: str
    value: float
    margin: float
    nearest: str
    inside: bool


@dataclass(frozen=True)
class MarginReport:
    level_gaps: list[tuple[str, str, float]]
    references: list[ReferenceMargin]

    @property
    def flags(self) -> list[ReferenceMargin]:
        return [r for r in self.references if r.inside]

    @property
    def ok(self) -> bool:
        return not self.flags

    @property
    def worst_gap(self) -> float:
        return min(g for _, _, g in self.level_gaps) if self.level_gaps else math.inf

    @property
    def worst_margin(self) -> float:
        return min(r.margin for r in self.references) if self.references else math.inf

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "worst_gap": self.worst_gap,
            "worst_margin": self.worst_margin,
            "level_gaps": [{"lower": lo, "upper": hi, "gap": g} for lo, hi, g in self.level_gaps],
            "references": [r.__dict__ for r in self.references],
        }


def margin_report(levels: Mapping[str, Distribution], sense_cfg: SenseConfig = SenseConfig(),
                  opcodes: Sequence[Opcode] = LOGIC_OPCODES) -> MarginReport:
    """Gaps between adjacent level ranges and distance of each reference to them.

    ``margin`` is the distance from a reference to the nearest observed range
    (0 when the reference lies inside one, which also sets ``inside``).
    """
    ordered = sorted(levels.items(), key=lambda kv: kv[1].mean)
    gaps = []
    for (n0, d0), (n1, d1) in zip(ordered, ordered[1:]):
        gaps.append((n0, n1, d1.range[0] - d0.range[1]))
    refs = []
    for op in opcodes:
        op = Opcode.parse(op)
        for which, v in zip(("v_ref1", "v_ref2"), select_references(op, sense_cfg)):
            best, inside = (math.inf, ""), False
            for name, d in ordered:
                lo, hi = d.range
                if lo <= v <= hi:
                    inside = True
                    dist = 0.0
                else:
                    dist = lo - v if v < lo else v - hi
                if dist < best[0]:
                    best = (dist, name)
            refs.append(ReferenceMargin(op.value, which, v, best[0], best[1], inside))
    return MarginReport(gaps, refs)


def logic_levels(cfg: VariationConfig, sense_cfg: SenseConfig = SenseConfig(),
                 params: QaheParams = QaheParams(), workers: int | None = None) -> dict[str, Distribution]:
    """Row-voltage distributions for all four operand patterns."""
    return {f"{a}{b}": mc_row_voltages(cfg, (a, b), sense_cfg, params, workers) for a in (0, 1) for b in (0, 1)}


def merge(name: str, *dists: Distribution) -> Distribution:
    return Distribution(name, dists[0].unit, np.concatenate([d.samples for d in dists]), dists[0].bins)


def output_classes(levels: Mapping[str, Distribution]) -> dict[str, Distribution]:
    """Collapse '01' and '10', which carry the same row level, into one class."""
    return {"00": levels["00"], "01/10": merge("row_voltage_01_10", levels["01"], levels["10"]), "11": levels["11"]}
