"""Verification report records shared by the numeric modules and the CLI."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field


def _finite(x) -> bool:
    if isinstance(x, complex):
        return math.isfinite(x.real) and math.isfinite(x.imag)
    if isinstance(x, (int, float)):
        return math.isfinite(x)
    return True


@dataclass
class VerificationReport:
    """One check: pass iff residual <= max(tolerance, 10 * noise_floor)."""

    check_id: str
    params: dict
    lhs: complex
    rhs: complex
    residual: float
    tolerance: float
    noise_floor: float = 0.0
    tails: dict = field(default_factory=dict)
    passed: bool | None = None
    wall_time: float = 0.0
    note: str = ""

    def __post_init__(self):
        self.lhs = complex(self.lhs)
        self.rhs = complex(self.rhs)
        self.residual = float(self.residual)
        self.noise_floor = float(self.noise_floor)
        verdict = self.recompute()
        if self.passed is None:
            self.passed = verdict
        for name in ("lhs", "rhs", "residual", "tolerance", "noise_floor"):
            if not _finite(getattr(self, name)):
                self.passed = False

    @property
    def threshold(self) -> float:
        return max(self.tolerance, 10 * self.noise_floor)

    def recompute(self) -> bool:
        return self.residual <= self.threshold

    @classmethod
    def from_identity(cls, res, check_id: str | None = None, noise_floor: float = 0.0) -> "VerificationReport":
        return cls(check_id or res.identity, dict(res.params), res.lhs, res.rhs, res.residual, res.tolerance,
                   noise_floor, {}, bool(res.passed), res.wall_time, res.note)

    def to_dict(self, deterministic: bool = False) -> dict:
        d = asdict(self)
        for key in ("lhs", "rhs"):
            z = d[key]
            d[key] = [z.real, z.imag]
        d["params"] = {k: _plain(v) for k, v in d["params"].items()}
        d["tails"] = {k: float(v) for k, v in d["tails"].items()}
        if deterministic:
            d["wall_time"] = 0.0
        return d

    def to_json(self, deterministic: bool = False) -> str:
        return json.dumps(self.to_dict(deterministic), sort_keys=True)

    def to_record(self, deterministic: bool = False) -> str:
        d = self.to_dict(deterministic)
        parts = [f"check={d['check_id']}"]
        parts += [f"{k}={v}" for k, v in sorted(d["params"].items())]
        parts += [
            f"lhs={d['lhs'][0]!r}{d['lhs'][1]:+.17g}j",
            f"rhs={d['rhs'][0]!r}{d['rhs'][1]:+.17g}j",
            f"residual={d['residual']:.6e}",
            f"tol={d['tolerance']:.3e}",
            f"floor={d['noise_floor']:.3e}",
        ]
        parts += [f"tail.{k}={v:.3e}" for k, v in sorted(d["tails"].items())]
        parts += [f"pass={'true' if d['passed'] else 'false'}", f"time={d['wall_time']:.3f}"]
        if d["note"]:
            parts.append(f"note={json.dumps(d['note'])}")
        return " ".join(parts)


def _plain(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return str(v)
