"""Jet coordinates and the context that enumerates them.

Names follow a fixed convention: ``x1``, ``x1_z``, ``x1_zt``, ``u_tt``, ``z``, ``t``.
Derivative letters are written all-z-then-all-t.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import OrderOverflowError, UnknownCoordinateError

_ROLE_RANK = {"x": 0, "u": 1, "z": 2, "t": 3}
_NAME_RE = re.compile(r"^(?:x([1-9][0-9]*)|(u))(?:_(z*)(t*))?$")


@dataclass(frozen=True)
class JetCoordinate:
    role: str  # "x" (dependent), "u" (input), "z" or "t" (independent)
    index: int = 0
    nz: int = 0
    nt: int = 0

    @property
    def order(self) -> int:
        return self.nz + self.nt

    @property
    def is_independent(self) -> bool:
        return self.role in ("z", "t")

    @property
    def is_dependent(self) -> bool:
        return self.role == "x"

    @property
    def is_input(self) -> bool:
        return self.role == "u"

    @property
    def base(self) -> JetCoordinate:
        return JetCoordinate(self.role, self.index)

    @property
    def name(self) -> str:
        if self.is_independent:
            return self.role
        stem = f"x{self.index}" if self.role == "x" else "u"
        if self.order == 0:
            return stem
        return f"{stem}_{'z' * self.nz}{'t' * self.nt}"

    @property
    def sort_key(self) -> tuple:
        return (_ROLE_RANK[self.role], self.index, self.order, self.nt)

    def shift(self, wrt: str) -> JetCoordinate:
        """The coordinate carrying one more derivative with respect to ``wrt``."""
        if self.is_independent:
            raise ValueError(f"cannot shift independent variable {self.name}")
        if wrt == "z":
            return JetCoordinate(self.role, self.index, self.nz + 1, self.nt)
        if wrt == "t":
            return JetCoordinate(self.role, self.index, self.nz, self.nt + 1)
        raise ValueError(f"unknown independent variable {wrt!r}")

    @classmethod
    def parse(cls, name: str) -> JetCoordinate | None:
        if name in ("z", "t"):
            return cls(name)
        m = _NAME_RE.match(name)
        if m is None:
            return None
        nz = len(m.group(3) or "")
        nt = len(m.group(4) or "")
        if "_" in name and nz + nt == 0:
            return None
        if m.group(1) is not None:
            return cls("x", int(m.group(1)), nz, nt)
        return cls("u", 0, nz, nt)

    def __repr__(self):
        return f"JetCoordinate({self.name})"

    def __str__(self):
        return self.name


Z = JetCoordinate("z")
T = JetCoordinate("t")


def x(alpha: int, nz: int = 0, nt: int = 0) -> JetCoordinate:
    return JetCoordinate("x", alpha, nz, nt)


def u(nz: int = 0, nt: int = 0) -> JetCoordinate:
    return JetCoordinate("u", 0, nz, nt)


def _multi_indices(max_order):
    for order in range(max_order + 1):
        for nt in range(order + 1):
            yield order - nt, nt


@dataclass(frozen=True)
class JetContext:
    """Jet space over (z, t) with ``n_x`` dependent variables and one input ``u``."""

    n_x: int
    max_order: int = 3

    def __post_init__(self):
        if self.n_x < 1:
            raise ValueError("n_x must be at least 1")
        if self.max_order < 0:
            raise ValueError("max_order must be non-negative")

    def coordinates(self) -> list[JetCoordinate]:
        out = []
        for alpha in range(1, self.n_x + 1):
            out.extend(x(alpha, nz, nt) for nz, nt in _multi_indices(self.max_order))
        out.extend(u(nz, nt) for nz, nt in _multi_indices(self.max_order))
        out.extend([Z, T])
        return out

    def dependents(self, order: int = 0) -> list[JetCoordinate]:
        return [x(a, nz, nt) for a in range(1, self.n_x + 1)
                for nz, nt in _multi_indices(order) if nz + nt == order]

    def contains(self, c: JetCoordinate) -> bool:
        if c.is_dependent and not 1 <= c.index <= self.n_x:
            return False
        return c.order <= self.max_order

    def check(self, c: JetCoordinate) -> JetCoordinate:
        if c.is_dependent and not 1 <= c.index <= self.n_x:
            raise UnknownCoordinateError(f"unknown coordinate {c.name} (n_x = {self.n_x})")
        if c.order > self.max_order:
            raise OrderOverflowError(
                f"{c.name} has order {c.order} > maximum {self.max_order}")
        return c

    def coordinate(self, name: str) -> JetCoordinate:
        c = JetCoordinate.parse(name)
        if c is None:
            raise UnknownCoordinateError(f"unknown coordinate {name!r}")
        return self.check(c)
