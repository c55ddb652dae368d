"""Delay reconstruction and the observability-number experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collapse import pair_arrays, sample_collapsing_pairs
from .observable import (
    Observable,
    PwlCircle,
    PwlProfile,
    build_character_observable,
    delay,
    first_coordinate_character,
    min_separating_step,
    random_trig_polynomial,
    separation_floor,
)
from .torus import (
    Classification,
    SystemDescriptor,
    TorusPoint,
    as_system,
    classify,
)
from .verify import (
    EpsilonNet,
    ObstructionError,
    scalar_obstruction_witness,
    strict_precision_scan,
)

SCALAR_CANDIDATES = 10
FLOOR_TOL = 1e-9


@dataclass
class PointCloud:
    points: np.ndarray
    labels: np.ndarray

    def min_pairwise_distance(self) -> float:
        from scipy.spatial import cKDTree

        d, _ = cKDTree(self.points).query(self.points, k=2)
        return float(d[:, 1].min())

    def rows(self):
        for p, x in zip(self.points, self.labels):
            yield list(p) + list(x)

    def header(self) -> list[str]:
        return [f"delay_{j}" for j in range(self.points.shape[1])] + [
            f"source_{j}" for j in range(self.labels.shape[1])
        ]


def reconstruct(f: Observable, system: SystemDescriptor, n: int, samples: int, seed: int = 0) -> PointCloud:
    """Delay vectors of ``samples`` uniform random states."""
    if n < 0:
        raise ValueError("delay length must be nonnegative")
    system = as_system(system)
    rng = np.random.default_rng(seed)
    labels = rng.random((samples, system.dim))
    return PointCloud(delay(f, system, n).evaluate(labels), labels)


# ---------------------------------------------------------------------------
# Obs(T) = 1 versus 2


@dataclass
class Verdict:
    m: int
    status: str  # "passes" | "fails"
    scope: str
    margin: float | None = None
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "status": self.status,
            "scope": self.scope,
            "margin": self.margin,
            "witnesses": self.witnesses,
            "details": self.details,
        }


@dataclass
class ObservabilityExperiment:
    system: SystemDescriptor
    classification: Classification
    verdicts: dict[int, Verdict]
    params: dict

    @property
    def observability_number(self) -> int | None:
        passing = [m for m, v in sorted(self.verdicts.items()) if v.status == "passes"]
        return passing[0] if passing else None

    def to_dict(self) -> dict:
        return {
            "system": self.system.describe(),
            "classification": self.classification.value,
            "observability_number": self.observability_number,
            "verdicts": {str(m): v.to_dict() for m, v in sorted(self.verdicts.items())},
            "params": self.params,
        }


def scalar_candidates(dim: int, seed: int, count: int = SCALAR_CANDIDATES) -> list[Observable]:
    """The first-coordinate character plus ``count`` seeded trigonometric polynomials of degree <= 3."""
    rng = np.random.default_rng(seed)
    return [first_coordinate_character(dim)] + [random_trig_polynomial(dim, rng) for _ in range(count)]


def observability_number_experiment(
    system,
    mesh: float = 1 / 32,
    horizon: int = 4,
    seed: int = 0,
    pair_count: int = 1000,
    jobs: int = 1,
) -> ObservabilityExperiment:
    """Run the m = 1 and m = 2 legs of the dichotomy for a hyperbolic toral map."""
    system = as_system(system)
    A = system.linear_matrix
    kind = classify(A)
    if kind is Classification.NON_HYPERBOLIC:
        raise ValueError("experiment refused: the matrix is not hyperbolic")
    params = {"mesh": mesh, "horizon": horizon, "seed": seed, "pair_count": pair_count, "metric": "torus-sup"}
    candidates = scalar_candidates(A.dim, seed)
    verdicts: dict[int, Verdict] = {}
    if abs(A.det()) == 1:
        verdicts[1] = _scalar_observation_leg(system, candidates, mesh, horizon, jobs)
    else:
        verdicts[1] = _scalar_obstruction_leg(system, candidates)
        verdicts[2] = _character_leg(system, mesh, horizon, seed, pair_count, jobs)
    return ObservabilityExperiment(system, kind, verdicts, params)


def _scalar_obstruction_leg(system: SystemDescriptor, candidates: list[Observable]) -> Verdict:
    witnesses, errors = [], []
    for idx, f in enumerate(candidates):
        try:
            w = scalar_obstruction_witness(f, system)
        except ObstructionError as exc:
            errors.append({"candidate": idx, "error": str(exc)})
            continue
        if w.flat:
            witnesses.append({"candidate": idx, **w.to_dict()})
        else:
            errors.append({"candidate": idx, "error": "witness not flat", **w.to_dict()})
    status = "fails" if len(witnesses) == len(candidates) else "passes"
    return Verdict(
        m=1,
        status=status,
        scope="every scalar candidate has a collapsing pair with equal observations",
        witnesses=witnesses,
        details={"candidates": len(candidates), "errors": errors},
    )


def _scalar_observation_leg(system, candidates, mesh, horizon, jobs) -> Verdict:
    net = EpsilonNet(system.dim, mesh)
    best = None
    for idx, f in enumerate(candidates[1:], start=1):
        scan = strict_precision_scan(f, system, net, horizon, jobs)
        if best is None or scan.value > best[1].value:
            best = (idx, scan)
        if scan.value > 0:
            break
    idx, scan = best
    ok = scan.value > 0
    return Verdict(
        m=1,
        status="passes" if ok else "fails",
        scope="empirical, generic-claim scoped (net pairs at distance >= 2 mesh)",
        margin=scan.value,
        witnesses=[] if ok else [[p.to_dict() for p in scan.witness(net)]],
        details={"candidate": idx, "observable": candidates[idx].to_dict()},
    )


def _character_leg(system, mesh, horizon, seed, pair_count, jobs) -> Verdict:
    A = system.linear_matrix
    f = build_character_observable(A)
    pairs = sample_collapsing_pairs(A, 1, pair_count, seed)
    X, Y = pair_arrays(pairs)
    gaps = np.linalg.norm(f.evaluate(X) - f.evaluate(Y), axis=1)
    floors = np.array([separation_floor(f, p.offset) for p in pairs])
    slack = gaps - floors
    violations = int(np.sum(slack < -FLOOR_TOL))
    net = EpsilonNet(A.dim, mesh)
    scan = strict_precision_scan(f, system, net, horizon, jobs)
    ok = violations == 0 and scan.value > 0
    witnesses = [] if ok else [pairs[int(np.argmin(slack))].to_dict(), [p.to_dict() for p in scan.witness(net)]]
    return Verdict(
        m=2,
        status="passes" if ok else "fails",
        scope="floor check on sampled first-step collapsing pairs plus net-level strict precision",
        margin=float(slack.min()),
        witnesses=witnesses,
        details={
            "observable": f.to_dict(),
            "floor_violations": violations,
            "min_floor": float(floors.min()),
            "min_gap": float(gaps.min()),
            "strict_precision": scan.value,
        },
    )


# ---------------------------------------------------------------------------
# observing, but not in a bounded number of steps


def flat_arc_pair(profile: PwlProfile, k: int) -> tuple[TorusPoint, TorusPoint]:
    """The fixed point z = 1 and the point at arc length 2^-k (radians) from it."""
    x = TorusPoint.from_floats([2.0**-k / (2 * math.pi)])
    return x, TorusPoint.from_rational([0], 1)


def check_flat_pair(profile: PwlProfile, x: TorusPoint, y: TorusPoint) -> None:
    if x == y or x.coords == y.coords:
        raise ValueError("pair must consist of distinct points")
    for p in (x, y):
        if not profile.in_flat_arc(p.coords[0]):
            raise ValueError(f"{p} lies outside the flat arc [0, {profile.eps}]")


def unbounded_steps_experiment(eps: float = 0.3, k_max: int = 20, horizon: int | None = None) -> list[tuple[int, int | None]]:
    """Rows (k, minimal separating step) for the pairs of ``flat_arc_pair``.

    Rows with 2^-k outside the flat arc are kept; their step is 0.
    """
    profile = PwlProfile(eps)
    f = PwlCircle(profile)
    system = SystemDescriptor.circle_power(2)
    horizon = horizon if horizon is not None else k_max + 8
    rows = []
    for k in range(1, k_max + 1):
        x, y = flat_arc_pair(profile, k)
        rows.append((k, min_separating_step(f, system, (x, y), horizon)))
    return rows


def separating_steps_for_pairs(eps: float, pairs, horizon: int) -> list[int | None]:
    """Minimal separating steps for explicit pairs inside the flat arc."""
    profile = PwlProfile(eps)
    f = PwlCircle(profile)
    system = SystemDescriptor.circle_power(2)
    out = []
    for x, y in pairs:
        check_flat_pair(profile, x, y)
        out.append(min_separating_step(f, system, (x, y), horizon))
    return out
