"""Observing functions on tori and circles.

All observables are evaluated on batches of points given in turns, shape
(N, d), and return (N, output_dim). Complex-valued observables are realized
as (real, imaginary) pairs.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .torus import (
    IntegerMatrix,
    SystemDescriptor,
    TorusPoint,
    apply,
    apply_array,
    as_matrix,
    as_point,
    kernel_elements,
    orbit,
)

SAFETY_FACTOR = 0.9
MAX_CHORD = 2.0
DEFAULT_PWL_EPS = 0.3
TWO_PI = 2 * math.pi


class InvertibleSystemError(ValueError):
    pass


def _batch(X) -> np.ndarray:
    if isinstance(X, TorusPoint):
        return X.as_array()[None, :]
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


class Observable:
    """Base class: ``evaluate`` on a batch, ``__call__`` on a single point."""

    output_dim: int
    kind: str = "observable"
    input_dim: int | None = None  # None: any dimension

    def evaluate(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        X = _batch(as_point(x) if not isinstance(x, np.ndarray) else x)
        if self.input_dim is not None and X.shape[1] != self.input_dim:
            raise ValueError(f"point of dimension {X.shape[1]} outside the domain T^{self.input_dim} of {self.kind}")
        return self.evaluate(X)[0]

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "output_dim": self.output_dim, "params": self.params()}


def evaluate(f: Observable, x) -> np.ndarray:
    """Value of ``f`` at a single point (TorusPoint or coordinates in turns)."""
    return f(x)


# ---------------------------------------------------------------------------
# character sum


def last_nontrivial(a: TorusPoint) -> int:
    """Index (0-based) of the last coordinate of ``a`` that is not 0 mod 1."""
    nz = [i for i, c in enumerate(a.numerators if a.is_exact else a.coords) if c]
    if not nz:
        raise ValueError("zero offset has no nontrivial coordinate")
    return nz[-1]


def chord(turns) -> float:
    """|1 - e^{2 pi i t}| = 2 |sin(pi t)|."""
    return abs(2.0 * math.sin(math.pi * float(turns)))


def compute_margins(offsets: Sequence[TorusPoint], dim: int | None = None) -> tuple[float, ...]:
    """Margins m_i below the chords of kernel offsets ending at coordinate i.

    m_i is 0.9 times the smallest such chord; coordinates that end no offset
    get the largest chord length 2.
    """
    offsets = [a for a in offsets if not a.is_zero()]
    if not offsets:
        raise InvertibleSystemError("injective system; margins undefined")
    dim = dim or offsets[0].dim
    best = [math.inf] * dim
    for a in offsets:
        i = last_nontrivial(a)
        best[i] = min(best[i], chord(a.fractions()[i] if a.is_exact else a.coords[i]))
    return tuple(MAX_CHORD if math.isinf(b) else SAFETY_FACTOR * b for b in best)


@dataclass(frozen=True)
class RhoWeights:
    rho: tuple[float, ...]
    margins: tuple[float, ...]

    @property
    def floors(self) -> tuple[float, ...]:
        """rho_i m_i - 2 sum_{k<i} rho_k for each coordinate."""
        return tuple(self.rho[i] * self.margins[i] - 2 * sum(self.rho[:i]) for i in range(len(self.rho)))

    def residuals(self) -> tuple[float, ...]:
        return tuple(
            abs(self.rho[i] * self.margins[i] - (1 + 2 * sum(self.rho[:i]))) for i in range(1, len(self.rho))
        )


def rho_weights(margins: Sequence[float]) -> RhoWeights:
    """rho_1 = 1 and rho_i m_i = 1 + 2 (rho_1 + ... + rho_{i-1})."""
    m = tuple(float(v) for v in margins)
    if not m or any(v <= 0 for v in m):
        raise ValueError(f"margins must be positive, got {m}")
    rho = [1.0]
    for i in range(1, len(m)):
        rho.append((1 + 2 * sum(rho)) / m[i])
    return RhoWeights(tuple(rho), m)


@dataclass(frozen=True)
class CharacterSum(Observable):
    """f(x) = sum_k rho_k e^{2 pi i x_k}, as a map into R^2."""

    weights: RhoWeights
    matrix: IntegerMatrix | None = None
    kind = "character-sum"
    output_dim = 2

    @property
    def rho(self) -> np.ndarray:
        return np.array(self.weights.rho)

    @property
    def input_dim(self) -> int:
        return len(self.weights.rho)

    def evaluate(self, X) -> np.ndarray:
        ang = TWO_PI * _batch(X)
        return np.stack([np.cos(ang) @ self.rho, np.sin(ang) @ self.rho], axis=1)

    def params(self) -> dict:
        return {"rho": list(self.weights.rho), "m": list(self.weights.margins), "floors": list(self.weights.floors)}

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["matrix"] = self.matrix.tolist() if self.matrix is not None else None
        return out


def build_character_observable(A) -> CharacterSum:
    A = as_matrix(A)
    if abs(A.det()) == 1:
        raise InvertibleSystemError("invertible: scalar observable suffices (Obs=1)")
    margins = compute_margins(kernel_elements(A), A.dim)
    return CharacterSum(rho_weights(margins), A)


def separation_floor(f: CharacterSum, offset: TorusPoint) -> float:
    """Lower bound for |f(x) - f(x - offset)| on collapsing pairs with this offset."""
    if offset.is_zero():
        raise ValueError("zero offset")
    return f.weights.floors[last_nontrivial(offset)]


# ---------------------------------------------------------------------------
# circle examples and simple families


@dataclass(frozen=True)
class PwlProfile:
    """h on [0, 2 pi]: h = 0 on [0, eps], then linear up to h(2 pi) = 2 pi."""

    eps: float = DEFAULT_PWL_EPS

    def __post_init__(self):
        if not 0 < self.eps < TWO_PI:
            raise ValueError("eps must lie in (0, 2 pi)")

    def h(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.where(theta <= self.eps, 0.0, TWO_PI * (theta - self.eps) / (TWO_PI - self.eps))

    def in_flat_arc(self, turns: float) -> bool:
        return TWO_PI * (turns % 1.0) <= self.eps


@dataclass(frozen=True)
class PwlCircle(Observable):
    """f(e^{i theta}) = e^{i h(theta)}; constant on the arc [0, eps] around z = 1."""

    profile: PwlProfile = field(default_factory=PwlProfile)
    kind = "pwl-circle"
    output_dim = 2
    input_dim = 1

    def angle(self, turns):
        """Output angle h(theta) in radians for an input given in turns."""
        return self.profile.h(TWO_PI * (np.asarray(turns, dtype=float) % 1.0))

    def evaluate(self, X) -> np.ndarray:
        h = self.angle(_batch(X)[:, 0])
        return np.stack([np.cos(h), np.sin(h)], axis=1)

    def params(self) -> dict:
        return {"eps": self.profile.eps}


@dataclass(frozen=True)
class CoordinateEmbedding(Observable):
    """T^d -> R^{2d}, each coordinate sent to (cos, sin) of its angle."""

    dim: int = 1
    kind = "coordinate-embedding"

    @property
    def output_dim(self) -> int:
        return 2 * self.dim

    @property
    def input_dim(self) -> int:
        return self.dim

    def evaluate(self, X) -> np.ndarray:
        ang = TWO_PI * _batch(X)
        out = np.empty((ang.shape[0], 2 * self.dim))
        out[:, 0::2] = np.cos(ang)
        out[:, 1::2] = np.sin(ang)
        return out

    def params(self) -> dict:
        return {"dim": self.dim}


@dataclass(frozen=True)
class Constant(Observable):
    value: tuple[float, ...] = (0.0,)
    kind = "constant"

    @property
    def output_dim(self) -> int:
        return len(self.value)

    def evaluate(self, X) -> np.ndarray:
        return np.tile(np.asarray(self.value, dtype=float), (_batch(X).shape[0], 1))

    def params(self) -> dict:
        return {"value": list(self.value)}


@dataclass(frozen=True)
class TrigPolynomial(Observable):
    """Scalar c + sum_k (a_k cos 2 pi k.x + b_k sin 2 pi k.x) over integer frequency vectors k."""

    frequencies: tuple[tuple[int, ...], ...]
    cos_coeffs: tuple[float, ...]
    sin_coeffs: tuple[float, ...]
    constant: float = 0.0
    kind = "trig-polynomial"
    output_dim = 1

    @property
    def input_dim(self) -> int | None:
        return len(self.frequencies[0]) if self.frequencies else None

    def evaluate(self, X) -> np.ndarray:
        X = _batch(X)
        if not self.frequencies:
            return np.full((X.shape[0], 1), self.constant)
        phase = TWO_PI * X @ np.array(self.frequencies, dtype=float).T
        val = self.constant + np.cos(phase) @ np.array(self.cos_coeffs) + np.sin(phase) @ np.array(self.sin_coeffs)
        return val[:, None]

    def params(self) -> dict:
        return {
            "frequencies": [list(k) for k in self.frequencies],
            "cos": list(self.cos_coeffs),
            "sin": list(self.sin_coeffs),
            "constant": self.constant,
        }


def first_coordinate_character(dim: int) -> TrigPolynomial:
    """Real part of the first coordinate character, cos 2 pi x_1."""
    return TrigPolynomial(((1,) + (0,) * (dim - 1),), (1.0,), (0.0,))


def random_trig_polynomial(dim: int, rng: np.random.Generator, degree: int = 3) -> TrigPolynomial:
    """Gaussian coefficients on every frequency 0 < |k|_1 <= degree, one per +-k pair."""
    freqs = [
        k
        for k in itertools.product(range(-degree, degree + 1), repeat=dim)
        if 0 < sum(map(abs, k)) <= degree and next(v for v in k if v) > 0
    ]
    scale = np.array([1.0 / sum(map(abs, k)) for k in freqs])
    a = rng.normal(size=len(freqs)) * scale
    b = rng.normal(size=len(freqs)) * scale
    return TrigPolynomial(tuple(freqs), tuple(a.tolist()), tuple(b.tolist()), float(rng.normal()))


@dataclass(frozen=True)
class CirclePiecewiseLinear(Observable):
    """Periodic piecewise-linear scalar function on the circle through (knots, values)."""

    knots: tuple[float, ...]
    values: tuple[float, ...]
    kind = "circle-pwl"
    output_dim = 1
    input_dim = 1

    def evaluate(self, X) -> np.ndarray:
        t = _batch(X)[:, 0] % 1.0
        return np.interp(t, self.knots, self.values, period=1.0)[:, None]

    def params(self) -> dict:
        return {"knots": list(self.knots), "values": list(self.values)}


@dataclass(frozen=True)
class UserObservable(Observable):
    """Wraps a vectorized callable (N, d) -> (N, output_dim)."""

    func: Callable[[np.ndarray], np.ndarray]
    output_dim: int = 1
    name: str = "user"
    kind = "user"

    def evaluate(self, X) -> np.ndarray:
        out = np.asarray(self.func(_batch(X)), dtype=float)
        return out.reshape(out.shape[0], self.output_dim)

    def params(self) -> dict:
        return {"name": self.name}


# ---------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True, eq=False)
class BumpSum:
    """Sum of periodized Gaussian bumps amplitude_j * exp(-r_j^2 / (2 w_j^2)).

    r_j is the Euclidean norm of the wrapped coordinate differences to centre j.
    Each profile is bounded by 1, so the sup norm is at most sum_j |amplitude_j|.
    """

    centers: np.ndarray
    widths: np.ndarray
    amplitudes: np.ndarray

    def evaluate(self, X) -> np.ndarray:
        X = _batch(X)
        diff = np.abs(X[:, None, :] - self.centers[None, :, :]) % 1.0
        diff = np.minimum(diff, 1.0 - diff)
        prof = np.exp(-np.sum(diff**2, axis=2) / (2 * self.widths[None, :] ** 2))
        return prof @ self.amplitudes

    @property
    def sup_bound(self) -> float:
        return float(np.sum(np.linalg.norm(self.amplitudes, axis=1)))

    def to_dict(self) -> dict:
        return {
            "profile": "periodized-gaussian",
            "centers": self.centers.tolist(),
            "widths": self.widths.tolist(),
            "amplitudes": self.amplitudes.tolist(),
        }


def random_bumps(dim: int, output_dim: int, magnitude: float, rng: np.random.Generator, max_bumps: int = 5) -> BumpSum:
    """Between 1 and ``max_bumps`` bumps, rescaled so the sup norm is at most ``magnitude``."""
    k = int(rng.integers(1, max_bumps + 1))
    centers = rng.random((k, dim))
    widths = rng.uniform(0.03, 0.2, size=k)
    amps = rng.normal(size=(k, output_dim))
    total = np.sum(np.linalg.norm(amps, axis=1))
    amps = amps * (magnitude * rng.uniform(0.5, 1.0) / total) if total > 0 else amps
    return BumpSum(centers, widths, amps)


@dataclass(frozen=True, eq=False)
class Perturbed(Observable):
    base: Observable
    bumps: BumpSum
    kind = "perturbed"

    @property
    def output_dim(self) -> int:
        return self.base.output_dim

    @property
    def input_dim(self) -> int | None:
        return self.base.input_dim

    def evaluate(self, X) -> np.ndarray:
        return self.base.evaluate(X) + self.bumps.evaluate(X)

    def params(self) -> dict:
        return {"base": self.base.to_dict(), "bumps": self.bumps.to_dict()}


# ---------------------------------------------------------------------------
# delay map


@dataclass(frozen=True)
class Delay(Observable):
    """x -> (f(x), f(Tx), ..., f(T^n x))."""

    base: Observable
    system: SystemDescriptor
    n: int = 0
    kind = "delay"

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("delay length must be nonnegative")

    @property
    def output_dim(self) -> int:
        return self.base.output_dim * (self.n + 1)

    def evaluate(self, X) -> np.ndarray:
        X = _batch(X)
        blocks = [self.base.evaluate(X)]
        for _ in range(self.n):
            X = apply_array(self.system, X)
            blocks.append(self.base.evaluate(X))
        return np.hstack(blocks)

    @property
    def input_dim(self) -> int:
        return self.system.dim

    def __call__(self, x) -> np.ndarray:
        if isinstance(x, np.ndarray):
            return super().__call__(x)
        return np.concatenate([self.base(p) for p in orbit(self.system, as_point(x), self.n)])

    def params(self) -> dict:
        return {"n": self.n, "base": self.base.to_dict(), "system": self.system.describe()}


def delay(f: Observable, system: SystemDescriptor, n: int) -> Delay:
    return Delay(f, system, n)


def observable_from_dict(data: dict, system: SystemDescriptor | None = None) -> Observable:
    """Inverse of ``to_dict`` for the serializable kinds."""
    kind, p = data["kind"], data.get("params", {})
    if kind == "character-sum":
        matrix = IntegerMatrix(data["matrix"]) if data.get("matrix") is not None else None
        return CharacterSum(RhoWeights(tuple(p["rho"]), tuple(p["m"])), matrix)
    if kind == "pwl-circle":
        return PwlCircle(PwlProfile(p["eps"]))
    if kind == "coordinate-embedding":
        return CoordinateEmbedding(p["dim"])
    if kind == "constant":
        return Constant(tuple(p["value"]))
    if kind == "trig-polynomial":
        return TrigPolynomial(
            tuple(tuple(k) for k in p["frequencies"]), tuple(p["cos"]), tuple(p["sin"]), p["constant"]
        )
    if kind == "circle-pwl":
        return CirclePiecewiseLinear(tuple(p["knots"]), tuple(p["values"]))
    if kind == "delay":
        from .io import system_from_dict

        sys_ = system or system_from_dict(p["system"])
        return Delay(observable_from_dict(p["base"], sys_), sys_, p["n"])
    raise ValueError(f"cannot deserialize observable of kind {kind!r}")


# ---------------------------------------------------------------------------
# separation along orbits


def min_separating_step(
    f: Observable,
    system: SystemDescriptor,
    pair: tuple,
    horizon: int,
    eps: float = 0.0,
) -> int | None:
    """Smallest n <= horizon with |f(T^n x) - f(T^n y)| > eps, or None."""
    if horizon < 0 or eps < 0:
        raise ValueError("horizon and eps must be nonnegative")
    x, y = (as_point(p) for p in pair)
    for n in range(horizon + 1):
        if np.linalg.norm(f(x) - f(y)) > eps:
            return n
        x, y = apply(system, x), apply(system, y)
    return None


def write_time_series(f: Observable, system: SystemDescriptor, x, n: int, path) -> None:
    """CSV with columns step, component_0..component_{m-1} along the orbit of x."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [f"component_{j}" for j in range(f.output_dim)])
        for i, p in enumerate(orbit(system, as_point(x), n)):
            w.writerow([i] + [repr(float(v)) for v in f(p)])
