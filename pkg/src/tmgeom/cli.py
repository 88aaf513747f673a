"""Scenario runner: ``verify <spec-path|builtin-name> [options]``.

Exit codes: 0 when every verdict passes, 1 when some verdict fails, 2 on a
spec or usage error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .base_manifold import ChartManifold, ManifoldError
from .checks import REGISTRY, PointContext
from .scenarios import BUILTINS, CANONICAL, ScenarioSpec, SpecError, load_spec, save_spec, validate_spec
from .tangent_bundle import TMPoint

V_RANGE = (0.1, 2.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    anchor: str
    expect: str  # "zero" | "nonzero"
    points: int
    worst: float  # max over points for "zero", min for "nonzero"
    threshold: float
    verdict: str  # "pass" | "fail"
    error: str | None = None


@dataclass
class Report:
    scenario: str
    seed: int
    samples: int
    versions: dict[str, str]
    checks: list[CheckResult] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.verdict == "pass" for c in self.checks)

    def to_json(self, timing: bool = False) -> str:
        d = {
            "scenario": self.scenario,
            "seed": self.seed,
            "samples": self.samples,
            "versions": self.versions,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }
        if timing:
            d["wall_time"] = round(self.wall_time, 3)
        return json.dumps(d, indent=2, sort_keys=False)

    def to_text(self) -> str:
        w = max([len(c.name) for c in self.checks] + [5])
        lines = [
            f"scenario {self.scenario}  seed={self.seed}  samples={self.samples}",
            f"{'check':<{w}}  {'expect':<7}  {'worst':>10}  {'threshold':>9}  verdict  anchor",
        ]
        for c in self.checks:
            op = "<=" if c.expect == "zero" else "> "
            verdict = c.verdict.upper() if c.verdict == "fail" else c.verdict
            lines.append(
                f"{c.name:<{w}}  {c.expect:<7}  {c.worst:>10.3e}  {op}{c.threshold:>7.0e}  {verdict:<7}  {c.anchor}"
            )
            if c.error:
                lines.append(f"{'':<{w}}  error: {c.error}")
        n_fail = sum(c.verdict != "pass" for c in self.checks)
        lines.append(
            f"{len(self.checks) - n_fail}/{len(self.checks)} checks pass"
            f"  ({self.wall_time:.2f} s)"
        )
        return "\n".join(lines)


def versions() -> dict[str, str]:
    return {"tmgeom": __version__, "numpy": np.__version__, "python": platform.python_version()}


def sample_tm_points(mfd: ChartManifold, n: int, seed: int) -> list[TMPoint]:
    """Uniform in the chart box; fibre direction uniform, ``|v|_g`` uniform in ``V_RANGE``."""
    rng = np.random.default_rng(seed)
    xs = mfd.sample_points(rng, n)
    pts = []
    for x in xs:
        d = rng.normal(size=mfd.m)
        g = mfd.metric.value(x)
        d /= np.sqrt(d @ g @ d)
        pts.append(TMPoint(x, d * rng.uniform(*V_RANGE)))
    return pts


def run(
    spec: ScenarioSpec,
    check_filter=None,
    samples: int | None = None,
    seed: int | None = None,
    tol_scale: float = 1.0,
) -> Report:
    t0 = time.perf_counter()
    samples = spec.samples if samples is None else samples
    seed = spec.seed if seed is None else seed
    mfd = validate_spec(spec)
    wanted = list(spec.checks)
    if check_filter:
        known = {n for n, _ in wanted}
        for name in check_filter:
            if name not in REGISTRY:
                raise SpecError(f"unknown check {name!r}")
            if name not in known:
                wanted.append((name, "zero"))
        wanted = [(n, e) for n, e in wanted if n in set(check_filter)]
    for name, _ in wanted:
        if name not in REGISTRY:
            raise SpecError(f"unknown check {name!r}")
        if not REGISTRY[name].applicable(mfd):
            raise SpecError(f"check {name!r} does not apply to scenario {spec.name!r}")

    pts = sample_tm_points(mfd, samples, seed)
    values: dict[str, list[float]] = {n: [] for n, _ in wanted}
    errors: dict[str, str] = {}
    for i, p in enumerate(pts):
        ctx = PointContext(mfd, p, np.random.default_rng([seed, i]))
        for name, _ in wanted:
            if name in errors:
                continue
            try:
                values[name].append(float(REGISTRY[name].fn(ctx)))
            except (ManifoldError, ValueError, np.linalg.LinAlgError) as e:
                errors[name] = f"{type(e).__name__}: {e}"

    report = Report(spec.name, seed, samples, versions())
    for name, expect in wanted:
        ch = REGISTRY[name]
        vals = values[name]
        if expect == "zero":
            thr = spec.tolerances.get(name, ch.zero_tol) * tol_scale
            worst = max(vals) if vals else float("nan")
            ok = bool(vals) and worst <= thr
        else:
            thr = ch.nonzero_tol
            worst = min(vals) if vals else float("nan")
            ok = bool(vals) and worst > thr
        if name in errors:
            ok = False
        report.checks.append(
            CheckResult(name, ch.anchor, expect, len(vals), worst, thr, "pass" if ok else "fail", errors.get(name))
        )
    report.wall_time = time.perf_counter() - t0
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="verify",
        description="Run theorem checks for the geometry of TM over a scenario.",
    )
    ap.add_argument("spec", nargs="?", help="spec file path or built-in scenario name")
    ap.add_argument("--checks", help="comma-separated subset of checks to run")
    ap.add_argument("--samples", type=int, help="number of sample points (default: spec value, 50)")
    ap.add_argument("--seed", type=int, help="random seed (default: spec value, 42)")
    ap.add_argument("--tol-scale", type=float, default=1.0, help="multiply every zero threshold")
    ap.add_argument("--format", choices=("text", "json"), default="text")
    ap.add_argument("--timing", action="store_true", help="include wall time in JSON output")
    ap.add_argument("--list-builtins", action="store_true")
    ap.add_argument("--list-checks", action="store_true")
    ap.add_argument("--dump-spec", action="store_true", help="print the scenario in spec file format")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    if args.list_builtins:
        for name in BUILTINS:
            tag = "" if name in CANONICAL else "  (variant)"
            print(name + tag)
        return 0
    if args.list_checks:
        for name, ch in REGISTRY.items():
            print(f"{name:<20} {ch.anchor}")
        return 0
    if not args.spec:
        ap.print_usage(sys.stderr)
        print("verify: error: a spec path or built-in name is required", file=sys.stderr)
        return 2
    if args.samples is not None and args.samples < 1:
        print("verify: error: --samples must be positive", file=sys.stderr)
        return 2
    try:
        spec = load_spec(args.spec)
        if args.dump_spec:
            sys.stdout.write(save_spec(spec))
            return 0
        filt = [s.strip() for s in args.checks.split(",") if s.strip()] if args.checks else None
        report = run(spec, filt, args.samples, args.seed, args.tol_scale)
    except SpecError as e:
        print(f"verify: spec error: {e}", file=sys.stderr)
        return 2
    if args.format == "json":
        print(report.to_json(args.timing))
    else:
        print(report.to_text())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
