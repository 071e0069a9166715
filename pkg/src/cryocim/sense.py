"""Per-row peripheral path: amplifier, two comparators, reference MUX, window logic."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping


class Opcode(str, enum.Enum):
    READ = "READ"
    NAND = "NAND"
    NOR = "NOR"
    XOR = "XOR"

    @classmethod
    def parse(cls, name) -> "Opcode":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).upper())
        except ValueError:
            raise ValueError(f"unknown opcode {name!r}; expected one of {[o.value for o in cls]}") from None


LOGIC_OPCODES = (Opcode.NAND, Opcode.NOR, Opcode.XOR)

# Row level L = gain * 2 * |I_read| * R_K ~ 105 mV. Windows:
#   NAND  v1 in (-L, 0],  v2 > L
#   NOR   v1 in (0, L],   v2 > L
#   XOR   v1 in (-L, 0],  v2 in (0, L]
#   READ  v1 < -L/2,      v2 = 0   (single cell, level L/2)
DEFAULT_REFERENCES = {
    Opcode.READ: (-0.150, 0.0),
    Opcode.NAND: (-0.050, 0.150),
    Opcode.NOR: (0.050, 0.150),
    Opcode.XOR: (-0.050, 0.050),
}


@dataclass(frozen=True)
class SenseConfig:
    gain: float = 1000.0
    v_dd: float = 1.0
    references: Mapping[Opcode, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_REFERENCES))

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"gain must be positive, got {self.gain!r}")
        if not self.v_dd > 0:
            raise ValueError(f"v_dd must be positive, got {self.v_dd!r}")
        refs = {}
        for op, pair in self.references.items():
            v1, v2 = (float(x) for x in pair)
            if not v1 < v2:
                raise ValueError(f"{Opcode.parse(op).value}: need v_ref1 < v_ref2, got ({v1!r}, {v2!r})")
            refs[Opcode.parse(op)] = (v1, v2)
        object.__setattr__(self, "references", refs)

    def scaled(self, k: float) -> "SenseConfig":
        """Same decisions with gain and every reference multiplied by ``k``."""
        return SenseConfig(
            gain=self.gain * k,
            v_dd=self.v_dd,
            references={op: (v1 * k, v2 * k) for op, (v1, v2) in self.references.items()},
        )


def amplify(v_row: float, cfg: SenseConfig) -> float:
    return cfg.gain * v_row


def compare(v_in: float, v_ref: float, v_dd: float) -> float:
    """Behavioural comparator: 0 below the reference, v_dd at or above it."""
    return v_dd if v_in >= v_ref else 0.0


def select_references(op: Opcode, cfg: SenseConfig) -> tuple[float, float]:
    op = Opcode.parse(op)
    try:
        return cfg.references[op]
    except KeyError:
        raise ValueError(f"no reference pair configured for opcode {op.value}") from None


def sense(v_amp: float, op: Opcode, sen: bool, cfg: SenseConfig) -> int:
    """Window sense amplifier: 1 iff ``v_ref1 <= v_amp < v_ref2`` while enabled.

    VC1 compares against v_ref1, VC2 against v_ref2; the output is
    VC1 AND NOT VC2.
    """
    if not sen:
        return 0
    v_ref1, v_ref2 = select_references(op, cfg)
    vc1 = compare(v_amp, v_ref1, cfg.v_dd) == cfg.v_dd
    vc2 = compare(v_amp, v_ref2, cfg.v_dd) == cfg.v_dd
    return int(vc1 and not vc2)


def read_decode(v_amp: float, cfg: SenseConfig) -> int:
    """Stored bit of the single selected cell on a row.

    Under a negative read current bit 1 yields a negative Hall voltage,
    which falls in the READ window. ``v_amp == 0`` decodes to 0; callers
    should flag that case with :func:`is_invalid_read`.
    """
    return sense(v_amp, Opcode.READ, True, cfg)


def is_invalid_read(v_amp: float) -> bool:
    return v_amp == 0
