"""Toral endomorphisms, the circle power maps and the two-circles system.

Points are stored as fractions of a full turn. A point may carry an exact
rational representation (common denominator) next to its float coordinates;
every map preserves exactness, so finiteness claims (kernels, periodic points)
are checked without rounding.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .report import VerificationReport

HYPERBOLICITY_TOL = 1e-9


class SingularMatrixError(ValueError):
    pass


class NonHyperbolicError(ValueError):
    pass


# ---------------------------------------------------------------------------
# integer matrices


def _int_det(rows: Sequence[Sequence[int]]) -> int:
    """Fraction-free (Bareiss) determinant of a square integer matrix."""
    m = [list(r) for r in rows]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


@dataclass(frozen=True)
class IntegerMatrix:
    """Square integer matrix defining the endomorphism x -> Ax of T^d."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(_as_int(v) for v in row) for row in self.entries)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError(f"matrix must be square and non-empty, got {self.entries!r}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def identity(cls, dim: int) -> IntegerMatrix:
        return cls(tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def det(self) -> int:
        return _int_det(self.entries)

    def __matmul__(self, other):
        if isinstance(other, IntegerMatrix):
            cols = list(zip(*other.entries))
            return IntegerMatrix(
                tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.entries)
            )
        vec = tuple(other)
        if len(vec) != self.dim:
            raise ValueError(f"vector of length {len(vec)} does not match dimension {self.dim}")
        return tuple(sum(a * b for a, b in zip(row, vec)) for row in self.entries)

    def __sub__(self, other: IntegerMatrix) -> IntegerMatrix:
        return IntegerMatrix(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def power(self, n: int) -> IntegerMatrix:
        if n < 0:
            raise ValueError("negative powers are not integer matrices in general")
        result, base = IntegerMatrix.identity(self.dim), self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]


def _as_int(v) -> int:
    if isinstance(v, bool) or int(v) != v:
        raise ValueError(f"matrix entries must be integers, got {v!r}")
    return int(v)


def as_matrix(obj) -> IntegerMatrix:
    """Accept an IntegerMatrix, nested sequences, or a linear SystemDescriptor."""
    if isinstance(obj, IntegerMatrix):
        return obj
    if isinstance(obj, SystemDescriptor):
        return obj.linear_matrix
    return IntegerMatrix(obj)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class TorusPoint:
    """A point of T^d, coordinates in turns and always reduced into [0, 1).

    ``circle`` tags the component for the two-circles system (1 or 2).
    """

    coords: tuple[float, ...]
    numerators: tuple[int, ...] | None = None
    denominator: int | None = None
    circle: int | None = None

    @classmethod
    def from_rational(cls, numerators: Iterable[int], denominator: int, circle: int | None = None) -> TorusPoint:
        den = int(denominator)
        if den <= 0:
            raise ValueError("denominator must be positive")
        nums = [int(n) % den for n in numerators]
        g = math.gcd(den, *nums)
        nums, den = tuple(n // g for n in nums), den // g
        coords = tuple(n / den for n in nums)
        return cls(coords, nums, den, circle)

    @classmethod
    def from_fractions(cls, values: Iterable, circle: int | None = None) -> TorusPoint:
        fracs = [Fraction(v) for v in values]
        den = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
        return cls.from_rational((f.numerator * (den // f.denominator) for f in fracs), den, circle)

    @classmethod
    def from_floats(cls, values: Iterable[float], circle: int | None = None) -> TorusPoint:
        arr = _reduce_mod1(np.asarray(list(values), dtype=float))
        return cls(tuple(float(v) for v in arr), None, None, circle)

    @classmethod
    def parse(cls, items: Sequence[str], circle: int | None = None) -> TorusPoint:
        """Parse ``"p/q"`` or decimal strings; both become exact rationals."""
        return cls.from_fractions([Fraction(str(s).strip()) for s in items], circle)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def is_exact(self) -> bool:
        return self.denominator is not None

    def fractions(self) -> tuple[Fraction, ...]:
        if not self.is_exact:
            raise ValueError("point has no exact representation")
        return tuple(Fraction(n, self.denominator) for n in self.numerators)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def is_zero(self) -> bool:
        if self.is_exact:
            return not any(self.numerators)
        return not any(self.coords)

    def __add__(self, other: TorusPoint) -> TorusPoint:
        if self.is_exact and other.is_exact:
            return TorusPoint.from_fractions([a + b for a, b in zip(self.fractions(), other.fractions())], self.circle)
        return TorusPoint.from_floats(self.as_array() + other.as_array(), self.circle)

    def __neg__(self) -> TorusPoint:
        if self.is_exact:
            return TorusPoint.from_rational([-n for n in self.numerators], self.denominator, self.circle)
        return TorusPoint.from_floats(-self.as_array(), self.circle)

    def __sub__(self, other: TorusPoint) -> TorusPoint:
        return self + (-other)

    def labels(self) -> list[str]:
        if self.is_exact:
            return [str(f) for f in self.fractions()]
        return [repr(c) for c in self.coords]

    def to_dict(self):
        out = self.labels()
        if self.circle is not None:
            return {"circle": self.circle, "angle": out}
        return out

    def __str__(self) -> str:
        body = "(" + ", ".join(self.labels()) + ")"
        return body if self.circle is None else f"X{self.circle}{body}"


def _reduce_mod1(arr: np.ndarray) -> np.ndarray:
    out = np.mod(arr, 1.0)
    # fmod of tiny negatives rounds up to exactly 1.0
    out[out >= 1.0] = 0.0
    return out


def as_point(x) -> TorusPoint:
    if isinstance(x, TorusPoint):
        return x
    vals = list(np.atleast_1d(x)) if not isinstance(x, (list, tuple)) else list(x)
    if all(isinstance(v, (int, Fraction)) for v in vals):
        return TorusPoint.from_fractions(vals)
    if all(isinstance(v, str) for v in vals):
        return TorusPoint.parse(vals)
    return TorusPoint.from_floats([float(v) for v in vals])


# ---------------------------------------------------------------------------
# systems


class Classification(str, enum.Enum):
    ANOSOV_DIFFEO = "anosov-diffeo"
    EXPANDING = "expanding"
    ANOSOV_ENDO = "anosov-endo"
    NON_HYPERBOLIC = "non-hyperbolic"


@dataclass(frozen=True)
class SystemDescriptor:
    """One of: toral endomorphism, circle power map z -> z^k, two-circles."""

    kind: str
    matrix: IntegerMatrix | None = None
    power: int | None = None

    def __post_init__(self):
        if self.kind == "toral":
            object.__setattr__(self, "matrix", as_matrix(self.matrix))
            if self.matrix.det() == 0:
                raise SingularMatrixError(f"det A = 0 for {self.matrix.tolist()}")
        elif self.kind == "circle-power":
            if self.power is None or int(self.power) < 1:
                raise ValueError("circle-power(k) requires k >= 1")
            object.__setattr__(self, "power", int(self.power))
        elif self.kind != "two-circles":
            raise ValueError(f"unknown system kind {self.kind!r}")

    @classmethod
    def toral(cls, matrix) -> SystemDescriptor:
        return cls("toral", matrix=as_matrix(matrix))

    @classmethod
    def circle_power(cls, k: int) -> SystemDescriptor:
        return cls("circle-power", power=k)

    @classmethod
    def two_circles(cls) -> SystemDescriptor:
        return cls("two-circles")

    @property
    def dim(self) -> int:
        """Topological dimension of the state space."""
        return self.matrix.dim if self.kind == "toral" else 1

    @property
    def is_linear(self) -> bool:
        return self.kind != "two-circles"

    @property
    def linear_matrix(self) -> IntegerMatrix:
        if self.kind == "toral":
            return self.matrix
        if self.kind == "circle-power":
            return IntegerMatrix(((self.power,),))
        raise ValueError("the two-circles system is not a linear endomorphism")

    @property
    def metric(self) -> str:
        return "planar-euclidean" if self.kind == "two-circles" else "torus-sup"

    def describe(self) -> dict:
        if self.kind == "toral":
            return {"kind": "toral", "matrix": self.matrix.tolist()}
        if self.kind == "circle-power":
            return {"kind": "circle-power", "k": self.power}
        return {"kind": "two-circles"}


def as_system(obj) -> SystemDescriptor:
    if isinstance(obj, SystemDescriptor):
        return obj
    return SystemDescriptor.toral(obj)


def apply(system: SystemDescriptor, x: TorusPoint) -> TorusPoint:
    """Image of ``x`` under the system; exact when ``x`` is rational."""
    system = as_system(system)
    x = as_point(x)
    if system.kind == "two-circles":
        return _apply_two_circles(x)
    A = system.linear_matrix
    if x.dim != A.dim:
        raise ValueError(f"point of dimension {x.dim} for a system of dimension {A.dim}")
    if x.is_exact:
        return TorusPoint.from_rational(A @ x.numerators, x.denominator)
    return TorusPoint.from_floats(apply_array(system, x.as_array()[None, :])[0])


def apply_array(system: SystemDescriptor, X: np.ndarray) -> np.ndarray:
    """Float image of a batch of points, shape (N, d)."""
    A = system.linear_matrix.to_array()
    return _reduce_mod1(np.asarray(X, dtype=float) @ A.T)


def orbit(system: SystemDescriptor, x: TorusPoint, n: int) -> list[TorusPoint]:
    if n < 0:
        raise ValueError("step count must be nonnegative")
    pts = [as_point(x)]
    for _ in range(n):
        pts.append(apply(system, pts[-1]))
    return pts


def orbit_array(system: SystemDescriptor, X: np.ndarray, n: int) -> np.ndarray:
    """Float orbits of a batch, shape (n + 1, N, d)."""
    out = [np.asarray(X, dtype=float)]
    for _ in range(n):
        out.append(apply_array(system, out[-1]))
    return np.stack(out)


# two-circles: X1 = {|z| = 1}, X2 = {|z - 2| = 1}, glued at z = 1 = (X1, 0) = (X2, 1/2)


def _canonical_two_circles(x: TorusPoint) -> TorusPoint:
    if x.circle not in (1, 2):
        raise ValueError("two-circles points must be tagged with circle 1 or 2")
    if x.dim != 1:
        raise ValueError("two-circles points carry a single angle")
    if x.circle == 2 and ((x.is_exact and x.fractions()[0] == Fraction(1, 2)) or x.coords[0] == 0.5):
        return TorusPoint.from_rational([0], 1, circle=1)
    return x


def _apply_two_circles(x: TorusPoint) -> TorusPoint:
    x = _canonical_two_circles(x)
    if x.circle == 1:
        if x.is_exact:
            return TorusPoint.from_rational([2 * x.numerators[0]], x.denominator, circle=1)
        return TorusPoint.from_floats([2 * x.coords[0]], circle=1)
    # z = 2 + e(phi)  ->  2 - z = -e(phi) = e(phi + 1/2) on X1
    if x.is_exact:
        return TorusPoint.from_fractions([x.fractions()[0] + Fraction(1, 2)], circle=1)
    return TorusPoint.from_floats([x.coords[0] + 0.5], circle=1)


def planar(x: TorusPoint) -> complex:
    """Embedding of a two-circles point into the complex plane."""
    z = complex(math.cos(2 * math.pi * x.coords[0]), math.sin(2 * math.pi * x.coords[0]))
    return z if x.circle == 1 else 2 + z


def circle_distance(a, b) -> np.ndarray:
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def torus_distance(a, b) -> np.ndarray:
    """Sup over coordinates of the circle distance (turn units, diameter 1/2)."""
    return np.max(circle_distance(a, b), axis=-1)


def distance(system: SystemDescriptor, x: TorusPoint, y: TorusPoint) -> float:
    if system.kind == "two-circles":
        return abs(planar(_canonical_two_circles(x)) - planar(_canonical_two_circles(y)))
    if x.is_exact and y.is_exact:
        return float(max(min(d % 1, 1 - d % 1) for d in (a - b for a, b in zip(x.fractions(), y.fractions()))))
    return float(torus_distance(x.as_array(), y.as_array()))


# ---------------------------------------------------------------------------
# exact lattice computations


def smith_normal_form(A) -> tuple[IntegerMatrix, IntegerMatrix, IntegerMatrix]:
    """Return (U, S, V) with A = U S V, U and V unimodular, S diagonal.

    The diagonal of S is positive with s_1 | s_2 | ... | s_d.
    """
    U, S, V, _ = _smith(as_matrix(A))
    return U, S, V


def _smith(A: IntegerMatrix):
    n = A.dim
    if A.det() == 0:
        raise SingularMatrixError(f"det A = 0 for {A.tolist()}")
    S = [list(r) for r in A.entries]
    U = [list(r) for r in IntegerMatrix.identity(n).entries]
    V = [list(r) for r in IntegerMatrix.identity(n).entries]
    Vinv = [list(r) for r in IntegerMatrix.identity(n).entries]

    # every elementary operation on S is mirrored so that A = U S V holds throughout
    def swap_rows(i, j):
        S[i], S[j] = S[j], S[i]
        for row in U:
            row[i], row[j] = row[j], row[i]

    def add_row(i, j, c):  # row_i += c * row_j
        S[i] = [a + c * b for a, b in zip(S[i], S[j])]
        for row in U:
            row[j] -= c * row[i]

    def negate_row(i):
        S[i] = [-a for a in S[i]]
        for row in U:
            row[i] = -row[i]

    def swap_cols(i, j):
        for row in S:
            row[i], row[j] = row[j], row[i]
        V[i], V[j] = V[j], V[i]
        for row in Vinv:
            row[i], row[j] = row[j], row[i]

    def add_col(j, i, c):  # col_j += c * col_i
        for row in S:
            row[j] += c * row[i]
        V[i] = [a - c * b for a, b in zip(V[i], V[j])]
        for row in Vinv:
            row[j] += c * row[i]

    for t in range(n):
        while True:
            pi, pj = min(
                ((i, j) for i in range(t, n) for j in range(t, n) if S[i][j]),
                key=lambda ij: (abs(S[ij[0]][ij[1]]), ij),
            )
            if pi != t:
                swap_rows(t, pi)
            if pj != t:
                swap_cols(t, pj)
            p = S[t][t]
            clean = True
            for i in range(t + 1, n):
                q = S[i][t] // p
                if q:
                    add_row(i, t, -q)
                clean = clean and S[i][t] == 0
            for j in range(t + 1, n):
                q = S[t][j] // p
                if q:
                    add_col(j, t, -q)
                clean = clean and S[t][j] == 0
            if not clean:
                continue
            bad = next((i for i in range(t + 1, n) for j in range(t + 1, n) if S[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad, 1)
        if S[t][t] < 0:
            negate_row(t)
    to = lambda m: IntegerMatrix(tuple(tuple(r) for r in m))  # noqa: E731
    return to(U), to(S), to(V), to(Vinv)


def kernel_elements(A) -> list[TorusPoint]:
    """All x in T^d with Ax = 0 mod 1, exact; the identity comes first."""
    return list(_kernel(as_matrix(A)))


@functools.lru_cache(maxsize=256)
def _kernel(A: IntegerMatrix) -> tuple[TorusPoint, ...]:
    _, S, _, Vinv = _smith(A)
    D = abs(A.det())
    diag = [S.entries[i][i] for i in range(A.dim)]
    points = set()
    for js in itertools.product(*(range(s) for s in diag)):
        w = [j * (D // s) for j, s in zip(js, diag)]
        points.add(TorusPoint.from_rational(Vinv @ w, D))
    return tuple(sorted(points, key=lambda p: p.fractions()))


def periodic_point_count(A, n: int) -> int:
    """Number of fixed points of T^n, |det(A^n - I)|."""
    A = as_matrix(A)
    if n < 1:
        raise ValueError("period level must be positive")
    det = (A.power(n) - IntegerMatrix.identity(A.dim)).det()
    if det == 0:
        raise NonHyperbolicError(f"det(A^{n} - I) = 0: T^{n} has a continuum of fixed points")
    return abs(det)


def classify(A, tol: float = HYPERBOLICITY_TOL) -> Classification:
    A = as_matrix(A)
    det = A.det()
    if det == 0:
        raise SingularMatrixError(f"det A = 0 for {A.tolist()}")
    moduli = np.abs(np.linalg.eigvals(A.to_array()))
    if np.any(np.abs(moduli - 1.0) < tol):
        return Classification.NON_HYPERBOLIC
    if abs(det) == 1:
        return Classification.ANOSOV_DIFFEO
    if np.all(moduli > 1.0):
        return Classification.EXPANDING
    return Classification.ANOSOV_ENDO


def classify_system(system: SystemDescriptor) -> Classification:
    if system.kind == "two-circles":
        raise ValueError("the two-circles system is not a toral endomorphism")
    return classify(system.linear_matrix)


# ---------------------------------------------------------------------------
# local injectivity


def preimages(system: SystemDescriptor, w: TorusPoint) -> list[TorusPoint]:
    """Every point mapped onto ``w``."""
    if system.kind == "two-circles":
        w = _canonical_two_circles(w)
        if w.circle != 1:
            return []
        if w.is_exact:
            (psi,) = w.fractions()
            return [
                TorusPoint.from_fractions([psi / 2], circle=1),
                TorusPoint.from_fractions([psi / 2 + Fraction(1, 2)], circle=1),
                _canonical_two_circles(TorusPoint.from_fractions([psi - Fraction(1, 2)], circle=2)),
            ]
        psi = w.coords[0]
        return [
            TorusPoint.from_floats([psi / 2], circle=1),
            TorusPoint.from_floats([psi / 2 + 0.5], circle=1),
            TorusPoint.from_floats([psi - 0.5], circle=2),
        ]
    A = system.linear_matrix
    if w.is_exact:
        base = TorusPoint.from_fractions(_solve_rational(A, w.fractions()))
    else:
        base = TorusPoint.from_floats(np.linalg.solve(A.to_array(), w.as_array()))
    return [base + a for a in kernel_elements(A)]


def _solve_rational(A: IntegerMatrix, b: Sequence[Fraction]) -> list[Fraction]:
    """Cramer's rule over the integers: exact solution of A y = b."""
    den = math.lcm(*(f.denominator for f in b))
    nums = [int(f * den) for f in b]
    det = A.det()
    out = []
    for i in range(A.dim):
        cols = [list(r) for r in A.entries]
        for r in range(A.dim):
            cols[r][i] = nums[r]
        out.append(Fraction(_int_det(cols), det * den))
    return out


def local_injectivity_probe(
    system: SystemDescriptor,
    radius: float,
    samples: int = 1000,
    seed: int = 0,
    centers: Sequence[TorusPoint] | None = None,
) -> VerificationReport:
    """Search for x != y with dist(x, y) < radius and Tx = Ty near the centers.

    For each sampled x the partners are the other preimages of Tx, so a
    violation is found whenever one exists among the sampled points.
    Absence of a witness is evidence, not proof.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(seed)
    if centers is None:
        centers = _default_centers(system, rng)
    best = math.inf
    witness = None
    checked = 0
    for s in range(samples):
        center = centers[s % len(centers)]
        x = _sample_near(system, center, radius, rng)
        if x is None:
            continue
        checked += 1
        tx = apply(system, x)
        for y in _partners(system, x, tx):
            d = distance(system, x, y)
            if d < 1e-12:
                continue
            if d < best:
                best = d
            if d < radius and distance(system, apply(system, y), tx) < 1e-10 and witness is None:
                witness = (x, y)
    notes = ["no witness is evidence of local injectivity, not a proof"] if witness is None else []
    return VerificationReport(
        check="local-injectivity",
        passed=witness is None,
        worst_margin=best,
        witness=witness,
        params={"radius": radius, "samples": samples, "seed": seed, "centers": [c.to_dict() for c in centers]},
        metric=system.metric,
        notes=notes,
        details={"checked": checked, "system": system.describe()},
    )


def _partners(system: SystemDescriptor, x: TorusPoint, tx: TorusPoint) -> list[TorusPoint]:
    if system.kind == "two-circles":
        return preimages(system, tx)
    return [x + a for a in _kernel(system.linear_matrix) if not a.is_zero()]


def _default_centers(system: SystemDescriptor, rng) -> list[TorusPoint]:
    if system.kind == "two-circles":
        fixed = TorusPoint.from_rational([0], 1, circle=1)
        rand = [TorusPoint.from_floats([rng.random()], circle=int(rng.integers(1, 3))) for _ in range(4)]
        return [fixed] + rand
    d = system.dim
    return [TorusPoint.from_rational([0] * d, 1)] + [TorusPoint.from_floats(rng.random(d)) for _ in range(4)]


def _sample_near(system: SystemDescriptor, center: TorusPoint, radius: float, rng) -> TorusPoint | None:
    if system.kind != "two-circles":
        r = min(radius, 0.5)
        return TorusPoint.from_floats(center.as_array() + rng.uniform(-r, r, size=center.dim))
    # nearest angle on each circle, then a random angular offset; keep points within radius
    p = planar(_canonical_two_circles(center))
    circle = int(rng.integers(1, 3))
    anchor = p if circle == 1 else p - 2
    if abs(anchor) < 1e-15:
        return None
    base = (math.atan2(anchor.imag, anchor.real) / (2 * math.pi)) % 1.0
    span = math.asin(min(1.0, radius / 2)) / math.pi + 1e-3
    x = TorusPoint.from_floats([base + rng.uniform(-span, span)], circle=circle)
    x = _canonical_two_circles(x) if x.coords[0] == 0.5 else x
    if abs(planar(x) - p) >= radius:
        return None
    return x
