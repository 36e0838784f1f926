"""Result record shared by all identity checks."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


def _difference(a, b):
    if isinstance(a, (list, tuple)):
        if len(a) != len(b):
            raise ValueError("compared sequences differ in length")
        return type(a)(_difference(x, y) for x, y in zip(a, b))
    return a - b


def is_zero(x) -> bool:
    if isinstance(x, (list, tuple)):
        return all(is_zero(y) for y in x)
    if isinstance(x, (int, Fraction)):
        return x == 0
    return x.is_zero()


@dataclass
class CheckReport:
    name: str
    status: str  # "pass" or "fail"
    lhs: Any
    rhs: Any
    discrepancy: Any
    note: str = ""
    value: Any = None
    parts: tuple = field(default=())

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def compare(cls, name, lhs, rhs, extra_ok: bool = True, note: str = "", value=None, parts=()):
        disc = _difference(lhs, rhs)
        ok = is_zero(disc) and extra_ok and all(p.passed for p in parts)
        return cls(name, "pass" if ok else "fail", lhs, rhs, disc, note, value, tuple(parts))

    @classmethod
    def combine(cls, name, parts, note: str = "", value=None):
        """A report that passes when every part passes."""
        parts = tuple(parts)
        ok = all(p.passed for p in parts)
        return cls(
            name,
            "pass" if ok else "fail",
            [p.lhs for p in parts],
            [p.rhs for p in parts],
            [p.discrepancy for p in parts],
            note,
            value,
            parts,
        )
