"""Command-line front end: ``expobs {analyze,build,verify,demo,experiment,reconstruct}``."""

from __future__ import annotations

import argparse
import json
import sys
import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io
from .collapse import pair_arrays, sample_collapsing_pairs
from .embedding import observability_number_experiment, reconstruct, scalar_candidates, unbounded_steps_experiment
from .observable import (
    CoordinateEmbedding,
    InvertibleSystemError,
    build_character_observable,
    first_coordinate_character,
    separation_floor,
)
from .report import VerificationReport
from .torus import (
    Classification,
    NonHyperbolicError,
    SystemDescriptor,
    classify,
    kernel_elements,
    local_injectivity_probe,
    periodic_point_count,
)
from .verify import (
    EpsilonNet,
    ObstructionError,
    expansivity_scan,
    genericity_probe,
    non_generic_demo,
    precision_to_expansivity,
    replay_violations,
    scalar_obstruction_witness,
    strict_precision_scan,
)

DEFAULT_SEED = 20240601
ALL_CHECKS = ("local-injectivity", "strict-precision", "expansivity", "precision-expansivity", "floor", "obstruction")


@dataclass
class RunConfig:
    matrix: str | None = None
    example: str | None = None
    mesh: float = 1 / 64
    horizon: int = 10
    epsilon: float | None = None
    seed: int = DEFAULT_SEED
    jobs: int = 1
    out_dir: str | None = None
    checks: list[str] = field(default_factory=lambda: list(ALL_CHECKS))
    observable: str = "auto"
    pairs: int = 10_000
    radius: float = 0.05
    samples: int = 2000
    k_max: int = 20
    delay: int = 2

    def __post_init__(self):
        for name in ("mesh", "radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.horizon < 0 or self.jobs < 1:
            raise ValueError("horizon must be >= 0 and jobs >= 1")
        if isinstance(self.checks, str):
            self.checks = [c.strip() for c in self.checks.split(",") if c.strip()]

    def system(self) -> SystemDescriptor:
        if self.matrix is not None:
            return SystemDescriptor.toral(io.parse_matrix(self.matrix))
        if self.example is not None:
            return io.parse_example(self.example)
        return SystemDescriptor.circle_power(2)

    def substream(self, name: str) -> int:
        """Seed of the named random substream; stable across runs and platforms."""
        return int(np.random.SeedSequence([self.seed, zlib.crc32(name.encode())]).generate_state(1)[0])


def _merged_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
        values = {k.replace("-", "_"): v for k, v in values.items()}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if isinstance(values.get("matrix"), list):
        values["matrix"] = json.dumps(values["matrix"])
    unknown = set(values) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values)


def _emit(payload: dict, cfg: RunConfig, name: str) -> None:
    text = io.dumps(payload)
    sys.stdout.write(text)
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(cfg: RunConfig) -> tuple[dict, int]:
    system = cfg.system()
    report: dict = {"command": "analyze", "system": system.describe()}
    probe = local_injectivity_probe(system, cfg.radius, cfg.samples, cfg.substream("local-injectivity"))
    report["local_injectivity"] = probe.to_dict()
    if system.kind == "two-circles":
        report["hypotheses"] = {"locally_injective": probe.passed}
        return report, 0 if probe.passed else 1
    A = system.linear_matrix
    kind = classify(A)
    report["classification"] = kind.value
    if kind is Classification.NON_HYPERBOLIC:
        report["refused"] = "non-hyperbolic: no eigenvalue may lie on the unit circle"
        return report, 1
    kernel = kernel_elements(A)
    report["kernel_size"] = len(kernel)
    report["kernel"] = [p.to_dict() for p in kernel]
    counts = {}
    for n in range(1, 2 * A.dim + 1):
        try:
            counts[str(n)] = periodic_point_count(A, n)
        except NonHyperbolicError:
            counts[str(n)] = "non-hyperbolic"
    report["periodic_counts"] = counts
    finite = all(isinstance(v, int) for v in counts.values())
    report["hypotheses"] = {"locally_injective": probe.passed, "per_n_finite": finite}
    return report, 0 if probe.passed and finite else 1


def cmd_build(cfg: RunConfig) -> tuple[dict, int]:
    system = cfg.system()
    A = system.linear_matrix
    report: dict = {"command": "build", "system": system.describe()}
    try:
        f = build_character_observable(A)
    except InvertibleSystemError:
        report["message"] = "invertible: Obs(T)=1 path"
        return report, 0
    report["observable"] = f.to_dict()
    floors = {}
    for a in kernel_elements(A):
        if not a.is_zero():
            floors[",".join(a.labels())] = separation_floor(f, a)
    report["floors"] = {str(i + 1): v for i, v in enumerate(f.weights.floors)}
    report["offset_floors"] = floors
    return report, 0


def _default_observable(cfg: RunConfig, system: SystemDescriptor):
    choice = cfg.observable
    if choice == "auto":
        A = system.linear_matrix
        choice = "coordinate" if A.dim == 1 or abs(A.det()) == 1 else "character"
    if choice == "coordinate":
        return CoordinateEmbedding(system.dim)
    if choice == "character":
        return build_character_observable(system.linear_matrix)
    if choice == "cos":
        return first_coordinate_character(system.dim)
    raise ValueError(f"unknown observable {choice!r}")


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    system = cfg.system()
    reports: list[VerificationReport] = []
    unknown = set(cfg.checks) - set(ALL_CHECKS) - {"genericity", "non-generic"}
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    if "local-injectivity" in cfg.checks:
        reports.append(local_injectivity_probe(system, cfg.radius, cfg.samples, cfg.substream("local-injectivity")))
    if system.kind == "two-circles":
        return _verify_payload(system, cfg, reports)
    A = system.linear_matrix
    if classify(A) is Classification.NON_HYPERBOLIC:
        return _refusal("verify", system), 1
    net = EpsilonNet(system.dim, cfg.mesh)
    f = _default_observable(cfg, system)
    strict = None
    if {"strict-precision", "precision-expansivity"} & set(cfg.checks):
        strict = strict_precision_scan(f, system, net, cfg.horizon, cfg.jobs)
    if "strict-precision" in cfg.checks:
        threshold = cfg.epsilon or 0.0
        reports.append(
            VerificationReport(
                "strict-precision", strict.value > threshold, strict.value, strict.witness(net),
                _params(cfg, epsilon=threshold), notes=["net pairs at distance >= 2 mesh"],
                details={"observable": f.to_dict()},
            )
        )
    expans = None
    if {"expansivity", "precision-expansivity"} & set(cfg.checks):
        expans = expansivity_scan(system, net, cfg.horizon, cfg.jobs)
    if "expansivity" in cfg.checks:
        reports.append(
            VerificationReport(
                "expansivity", expans.value > 2 * net.mesh, expans.value, expans.witness(net), _params(cfg),
                notes=["passes when every net pair separates beyond its initial distance scale 2 mesh"],
            )
        )
    if "precision-expansivity" in cfg.checks:
        eps = cfg.epsilon or strict.value
        if eps > 0:
            delta = precision_to_expansivity(f, system, eps, net)
            bad = replay_violations(f, net, delta, eps)
            ok = bad == 0 and delta <= expans.value + net.mesh
            reports.append(
                VerificationReport(
                    "precision-expansivity", ok, delta, None if ok else {"violations": bad, "delta": delta},
                    _params(cfg, epsilon=eps), details={"replay_violations": bad, "expansivity_estimate": expans.value},
                )
            )
        else:
            reports.append(
                VerificationReport(
                    "precision-expansivity", False, 0.0, strict.witness(net), _params(cfg, epsilon=eps),
                    notes=["no positive precision on this net"],
                )
            )
    noninjective = abs(A.det()) >= 2
    if "floor" in cfg.checks and noninjective:
        reports.append(floor_check(A, cfg.pairs, cfg.substream("floor")))
    if "obstruction" in cfg.checks and noninjective:
        reports.append(obstruction_check(system, cfg.substream("obstruction")))
    if "genericity" in cfg.checks:
        reports.append(
            genericity_probe(f, system, 10, 0.05, net, cfg.horizon, cfg.epsilon or 0.0, cfg.substream("genericity"), cfg.jobs)
        )
    if "non-generic" in cfg.checks and system.dim == 1 and noninjective:
        reports.append(non_generic_demo(system, seed=cfg.substream("non-generic")))
    return _verify_payload(system, cfg, reports)


def _params(cfg: RunConfig, **extra) -> dict:
    return {"mesh": cfg.mesh, "horizon": cfg.horizon, "seed": cfg.seed, **extra}


def _verify_payload(system, cfg, reports) -> tuple[dict, int]:
    ok = all(r.passed for r in reports)
    return {"command": "verify", "system": system.describe(), "pass": ok, "reports": [r.to_dict() for r in reports]}, 0 if ok else 1


def floor_check(A, count: int, seed: int) -> VerificationReport:
    f = build_character_observable(A)
    pairs = sample_collapsing_pairs(A, 1, count, seed)
    X, Y = pair_arrays(pairs)
    gaps = np.linalg.norm(f.evaluate(X) - f.evaluate(Y), axis=1)
    floors = np.array([separation_floor(f, p.offset) for p in pairs])
    slack = gaps - floors
    worst = int(np.argmin(slack))
    bad = int(np.sum(slack < -1e-9))
    return VerificationReport(
        "floor", bad == 0, float(slack[worst]), pairs[worst] if bad else None,
        {"pairs": count, "seed": seed}, metric="euclidean (observation space)",
        details={"violations": bad, "floors": list(f.weights.floors)},
    )


def obstruction_check(system: SystemDescriptor, seed: int) -> VerificationReport:
    witnesses, failures = [], []
    for idx, f in enumerate(scalar_candidates(system.dim, seed)):
        try:
            w = scalar_obstruction_witness(f, system)
        except ObstructionError as exc:
            failures.append({"candidate": idx, "error": str(exc)})
            continue
        (witnesses if w.flat else failures).append({"candidate": idx, **w.to_dict()})
    return VerificationReport(
        "obstruction", not failures, max((w["step0_difference"] for w in witnesses), default=0.0),
        failures[0] if failures else None, {"seed": seed, "candidates": len(witnesses) + len(failures)},
        notes=["passes when every scalar candidate has a flat collapsing pair (m=1 fails)"],
        details={"witnesses": witnesses},
    )


def cmd_demo(name: str, cfg: RunConfig) -> tuple[dict, int]:
    if name == "scalar-obstruction":
        system = cfg.system() if (cfg.matrix or cfg.example) else SystemDescriptor.circle_power(2)
        f = first_coordinate_character(system.dim)
        w = scalar_obstruction_witness(f, system)
        ok = w.flat
        return {"command": "demo", "demo": name, "system": system.describe(), "observable": f.to_dict(),
                "witness": w.to_dict(), "pass": ok}, 0 if ok else 1
    if name == "unbounded-steps":
        eps = cfg.epsilon or 0.3
        rows = unbounded_steps_experiment(eps, cfg.k_max)
        if cfg.out_dir:
            io.write_table(Path(cfg.out_dir) / "unbounded_steps.csv", ["k", "step"], rows)
        steps = [s for _, s in rows]
        ok = all(s is not None for s in steps) and all(b >= a for a, b in zip(steps, steps[1:]))
        return {"command": "demo", "demo": name, "epsilon": eps, "rows": [list(r) for r in rows], "pass": ok}, 0 if ok else 1
    if name == "non-generic":
        system = cfg.system() if (cfg.matrix or cfg.example) else SystemDescriptor.circle_power(2)
        report = non_generic_demo(system, 100, 0.01, cfg.substream("non-generic"))
        return {"command": "demo", "demo": name, "report": report.to_dict(), "pass": report.passed}, 0 if report.passed else 1
    raise ValueError(f"unknown demo {name!r}")


def _refusal(command: str, system: SystemDescriptor) -> dict:
    return {"command": command, "system": system.describe(), "classification": Classification.NON_HYPERBOLIC.value,
            "refused": "non-hyperbolic: no eigenvalue may lie on the unit circle", "pass": False}


def cmd_experiment(cfg: RunConfig) -> tuple[dict, int]:
    system = cfg.system()
    if classify(system.linear_matrix) is Classification.NON_HYPERBOLIC:
        return _refusal("experiment", system), 1
    exp = observability_number_experiment(system, cfg.mesh, cfg.horizon, cfg.substream("experiment"), jobs=cfg.jobs)
    return {"command": "experiment", **exp.to_dict()}, 0


def cmd_reconstruct(cfg: RunConfig) -> tuple[dict, int]:
    system = cfg.system()
    f = first_coordinate_character(system.dim) if cfg.observable in ("auto", "cos") else _default_observable(cfg, system)
    cloud = reconstruct(f, system, cfg.delay, cfg.samples, cfg.substream("reconstruct"))
    payload = {"command": "reconstruct", "system": system.describe(), "observable": f.to_dict(), "n": cfg.delay,
               "samples": cfg.samples, "min_pairwise_distance": cloud.min_pairwise_distance()}
    if cfg.out_dir:
        io.write_table(Path(cfg.out_dir) / "cloud.csv", cloud.header(), cloud.rows())
        io.write_svg_scatter(Path(cfg.out_dir) / "cloud.svg", cloud.points)
    return payload, 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the flags; flags override it")
    common.add_argument("--matrix", help="integer matrix as JSON, e.g. '[[2,0],[0,2]]'")
    common.add_argument("--example", help="two-circles | circle-doubling | circle-power:K")
    common.add_argument("--mesh", type=float)
    common.add_argument("--horizon", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--observable", choices=["auto", "coordinate", "character", "cos"])
    common.add_argument("--pairs", type=int)
    common.add_argument("--radius", type=float)
    common.add_argument("--samples", type=int)

    parser = argparse.ArgumentParser(prog="expobs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="classification, kernel, periodic counts, hypotheses")
    sub.add_parser("build", parents=[common], help="character-sum observable and separation floors")
    p = sub.add_parser("verify", parents=[common], help="net-level verification checks")
    p.add_argument("--checks", help="comma-separated subset of: " + ",".join(ALL_CHECKS) + ",genericity,non-generic")
    p = sub.add_parser("demo", parents=[common], help="worked examples")
    p.add_argument("name", choices=["scalar-obstruction", "unbounded-steps", "non-generic"])
    p.add_argument("--k-max", dest="k_max", type=int)
    sub.add_parser("experiment", parents=[common], help="Obs(T) = 1 vs 2 experiment")
    p = sub.add_parser("reconstruct", parents=[common], help="delay point cloud (CSV, SVG)")
    p.add_argument("--delay", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merged_config(args)
        if args.command == "demo":
            payload, code = cmd_demo(args.name, cfg)
        else:
            handler = {
                "analyze": cmd_analyze,
                "build": cmd_build,
                "verify": cmd_verify,
                "experiment": cmd_experiment,
                "reconstruct": cmd_reconstruct,
            }[args.command]
            payload, code = handler(cfg)
    except ValueError as exc:
        sys.stderr.write(f"expobs: error: {exc}\n")
        return 2
    _emit(payload, cfg, args.command if args.command != "demo" else args.name)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
