"""Collapsing pairs: x != y whose orbits first meet at step n."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .torus import (
    SystemDescriptor,
    TorusPoint,
    apply,
    as_matrix,
    kernel_elements,
)

MAX_RESAMPLES = 100
# base points are drawn on the grid (1/(D * 2**BASE_BITS)) Z^d, fine enough to look uniform
BASE_BITS = 30


class InjectiveSystemError(ValueError):
    pass


@dataclass(frozen=True)
class Offset:
    """Nonzero element of ker A^n with its collapse depth (least m with A^m a = 0)."""

    point: TorusPoint
    depth: int


@dataclass(frozen=True)
class CollapsingPair:
    x: TorusPoint
    y: TorusPoint
    step: int
    offset: TorusPoint

    def to_dict(self) -> dict:
        return {"x": self.x.to_dict(), "y": self.y.to_dict(), "step": self.step, "offset": self.offset.to_dict()}


@dataclass(frozen=True)
class CollapseFamily:
    """Offsets a of depth exactly ``step``: (x, x - a) lies in the first-collapse stratum."""

    system: SystemDescriptor
    step: int
    offsets: tuple[TorusPoint, ...]

    @property
    def empty(self) -> bool:
        return not self.offsets


def collapse_depth(A, a: TorusPoint, max_depth: int | None = None) -> int | None:
    """Smallest m >= 1 with A^m a = 0 mod 1, by exact iteration."""
    A = as_matrix(A)
    if a.is_zero():
        return 0
    system = SystemDescriptor.toral(A)
    limit = max_depth if max_depth is not None else 64
    x = a
    for m in range(1, limit + 1):
        x = apply(system, x)
        if x.is_zero():
            return m
    return None


def collapse_offsets(A, n: int) -> list[Offset]:
    """Nonzero elements of ker A^n, each tagged with its collapse depth (<= n)."""
    if n < 1:
        raise ValueError("collapse level must be >= 1")
    A = as_matrix(A)
    return [Offset(a, collapse_depth(A, a, n)) for a in kernel_elements(A.power(n)) if not a.is_zero()]


def collapse_family(system, n: int) -> CollapseFamily:
    """The stratum of first collapse at step n; may be empty."""
    system = system if isinstance(system, SystemDescriptor) else SystemDescriptor.toral(system)
    offsets = tuple(o.point for o in collapse_offsets(system.linear_matrix, n) if o.depth == n)
    return CollapseFamily(system, n, offsets)


def is_first_collapse(system: SystemDescriptor, x: TorusPoint, y: TorusPoint, n: int) -> bool:
    """Exact test of x != y, T^j x != T^j y for j < n, and T^n x = T^n y."""
    if x == y:
        return False
    for _ in range(n - 1):
        x, y = apply(system, x), apply(system, y)
        if x == y:
            return False
    return apply(system, x) == apply(system, y)


def sample_collapsing_pairs(A, n: int, count: int, seed: int = 0) -> list[CollapsingPair]:
    """Seeded pairs (x, x - a) with a of depth n; each is checked exactly before it is returned.

    Base points are exact rationals on a fine grid, so the pair conditions are
    verified without rounding. Degenerate or repeated draws are resampled.
    """
    A = as_matrix(A)
    family = collapse_family(A, n)
    if family.empty:
        raise InjectiveSystemError(f"system is injective at level {n}")
    system = family.system
    den = abs(A.power(n).det()) * 2**BASE_BITS
    rng = np.random.default_rng(seed)
    pairs: list[CollapsingPair] = []
    seen: set[TorusPoint] = set()
    for _ in range(count):
        for _attempt in range(MAX_RESAMPLES):
            x = TorusPoint.from_rational((int(v) for v in rng.integers(0, den, size=A.dim)), den)
            a = family.offsets[int(rng.integers(len(family.offsets)))]
            y = x - a
            if x not in seen and is_first_collapse(system, x, y, n):
                break
        else:
            raise RuntimeError(f"no valid pair after {MAX_RESAMPLES} draws")
        seen.add(x)
        pairs.append(CollapsingPair(x, y, n, a))
    return pairs


def pair_arrays(pairs: list[CollapsingPair]) -> tuple[np.ndarray, np.ndarray]:
    """Float coordinates of both sides of the pairs, shapes (N, d)."""
    X = np.array([p.x.coords for p in pairs], dtype=float)
    Y = np.array([p.y.coords for p in pairs], dtype=float)
    return X, Y
