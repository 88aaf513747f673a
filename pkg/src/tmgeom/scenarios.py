"""Scenario specifications, the plain-text spec format, and the built-ins.

Spec file grammar (line oriented, ``#`` starts a comment)::

    [scenario]
    name = s2_round
    dim = 2
    connection = lc            # lc | torsioned | hermitianized | obata
    samples = 50
    seed = 42

    [box]
    x1 = 0.3 2.8               # lower upper
    x2 = -3 3

    [metric]
    g[1,1] = 1                 # g[i,j]; g[j,i] filled by symmetry
    g[2,2] = sin(x1)^2

    [torsion]
    T[3,1,2] = 0.3             # T^k_{ij} as T[k,i,j]; T[k,j,i] = -(...) unless given

    [acs]
    J[2,1] = 1/sin(x1)         # J^a_b as J[a,b]

    [triple]
    J1[1,2] = -1               # three structures J1, J2, J3

    [checks]
    oracle                     # expect a zero residual
    nijenhuis_I = nonzero      # expect a residual above the nonzero threshold

    [tolerances]
    oracle = 1e-6              # zero threshold per check name

Missing components are zero.  Indices are 1-based.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import quatlin
from .base_manifold import ChartManifold, ManifoldError, type30_torsion
from .exprlang import ExprError, parse
from .forms import perm_sign

CONNECTIONS = ("lc", "torsioned", "hermitianized", "obata")


class SpecError(ValueError):
    """Malformed or invalid scenario specification."""

    def __init__(self, message: str, line: int | None = None, point=None):
        self.line = line
        self.point = None if point is None else np.asarray(point, dtype=float)
        where = f" (line {line})" if line is not None else ""
        at = f" at x = {np.array2string(self.point, precision=6)}" if point is not None else ""
        super().__init__(message + where + at)


Matrix = list  # nested lists of expression strings


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    m: int
    box: tuple[tuple[float, float], ...]
    metric: Matrix
    torsion: Matrix | None = None
    acs: Matrix | None = None
    triple: tuple[Matrix, Matrix, Matrix] | None = None
    connection: str = "lc"
    checks: tuple[tuple[str, str], ...] = ()  # (check name, "zero" | "nonzero")
    samples: int = 50
    seed: int = 42
    tolerances: dict[str, float] = field(default_factory=dict)

    def manifold(self) -> ChartManifold:
        try:
            return ChartManifold.from_sources(
                self.name,
                self.m,
                np.asarray(self.box, dtype=float),
                self.metric,
                self.torsion,
                self.acs,
                self.triple,
                self.connection,
            )
        except ExprError as e:
            raise SpecError(f"expression error: {e}") from e

    def with_checks(self, checks) -> "ScenarioSpec":
        return replace(self, checks=tuple(checks))


# ----------------------------------------------------------- formatting


def _num(x: float) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _const_matrix(a: np.ndarray) -> list:
    if a.ndim == 1:
        return [_num(t) for t in a]
    return [_const_matrix(t) for t in a]


def save_spec(spec: ScenarioSpec) -> str:
    """Serialise to the spec file format (see module docstring)."""
    out = [
        "[scenario]",
        f"name = {spec.name}",
        f"dim = {spec.m}",
        f"connection = {spec.connection}",
        f"samples = {spec.samples}",
        f"seed = {spec.seed}",
        "",
        "[box]",
    ]
    for i, (lo, hi) in enumerate(spec.box):
        out.append(f"x{i + 1} = {_num(lo)} {_num(hi)}")
    out += ["", "[metric]"]
    m = spec.m
    for i in range(m):
        for j in range(i, m):
            if spec.metric[i][j].strip() != "0":
                out.append(f"g[{i + 1},{j + 1}] = {spec.metric[i][j]}")
    if spec.torsion is not None:
        out += ["", "[torsion]"]
        for k in range(m):
            for i in range(m):
                for j in range(m):
                    s = spec.torsion[k][i][j].strip()
                    if s != "0":
                        out.append(f"T[{k + 1},{i + 1},{j + 1}] = {s}")
    if spec.acs is not None:
        out += ["", "[acs]"] + _matrix_lines("J", spec.acs)
    if spec.triple is not None:
        out += ["", "[triple]"]
        for t, M in enumerate(spec.triple):
            out += _matrix_lines(f"J{t + 1}", M)
    if spec.checks:
        out += ["", "[checks]"]
        for name, expect in spec.checks:
            out.append(name if expect == "zero" else f"{name} = {expect}")
    if spec.tolerances:
        out += ["", "[tolerances]"]
        for k in sorted(spec.tolerances):
            out.append(f"{k} = {spec.tolerances[k]!r}")
    return "\n".join(out) + "\n"


def _matrix_lines(prefix: str, M) -> list[str]:
    return [
        f"{prefix}[{a + 1},{b + 1}] = {M[a][b]}"
        for a in range(len(M))
        for b in range(len(M))
        if M[a][b].strip() != "0"
    ]


# -------------------------------------------------------------- parsing

_SECTIONS = ("scenario", "box", "metric", "torsion", "acs", "triple", "checks", "tolerances")
_INDEXED = re.compile(r"^([A-Za-z][A-Za-z0-9]*)\[([0-9 ,]+)\]$")


def _indices(key: str, name: str, arity: int, m: int, lineno: int) -> tuple[int, ...]:
    mt = _INDEXED.match(key)
    if not mt or mt.group(1) != name:
        raise SpecError(f"expected {name}[...] but found {key!r}", lineno)
    try:
        idx = tuple(int(t) - 1 for t in mt.group(2).split(","))
    except ValueError:
        raise SpecError(f"bad index list in {key!r}", lineno) from None
    if len(idx) != arity or any(not 0 <= i < m for i in idx):
        raise SpecError(f"index out of range in {key!r} (dim = {m})", lineno)
    return idx


def _check_expr(src: str, m: int, lineno: int) -> str:
    try:
        parse(src, m)
    except ExprError as e:
        raise SpecError(f"in expression {src!r}: {e}", lineno) from e
    return src


def parse_spec(text: str) -> ScenarioSpec:
    """Parse spec text; structural validation is done by :func:`load_spec`."""
    section = None
    entries: dict[str, list[tuple[int, str, str | None]]] = {s: [] for s in _SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1].strip() not in _SECTIONS:
                raise SpecError(f"unknown section header {line!r}", lineno)
            section = line[1:-1].strip()
            continue
        if section is None:
            raise SpecError("content before the first section header", lineno)
        if "=" in line:
            key, val = (t.strip() for t in line.split("=", 1))
            if not val:
                raise SpecError(f"empty value for {key!r}", lineno)
        else:
            key, val = line, None
            if section != "checks":
                raise SpecError(f"expected 'key = value', got {line!r}", lineno)
        entries[section].append((lineno, key, val))

    head = {k: (ln, v) for ln, k, v in entries["scenario"]}
    for req in ("name", "dim"):
        if req not in head:
            raise SpecError(f"[scenario] is missing '{req}'")
    try:
        m = int(head["dim"][1])
    except ValueError:
        raise SpecError("dim must be an integer", head["dim"][0]) from None
    if m < 1:
        raise SpecError("dim must be positive", head["dim"][0])
    connection = head.get("connection", (None, None))[1]
    if connection is not None and connection not in CONNECTIONS:
        raise SpecError(f"unknown connection {connection!r}", head["connection"][0])

    def int_field(key, default):
        if key not in head:
            return default
        try:
            return int(head[key][1])
        except ValueError:
            raise SpecError(f"{key} must be an integer", head[key][0]) from None

    box = [None] * m
    for ln, key, val in entries["box"]:
        mt = re.fullmatch(r"x([0-9]+)", key)
        if not mt or not 1 <= int(mt.group(1)) <= m:
            raise SpecError(f"bad box coordinate {key!r}", ln)
        try:
            lo, hi = (float(t) for t in val.split())
        except ValueError:
            raise SpecError(f"box entry must be two numbers, got {val!r}", ln) from None
        if not lo < hi:
            raise SpecError(f"empty interval for {key}", ln)
        box[int(mt.group(1)) - 1] = (lo, hi)
    if any(b is None for b in box):
        raise SpecError("[box] must give an interval for every coordinate")

    metric = [["0"] * m for _ in range(m)]
    given = {}
    for ln, key, val in entries["metric"]:
        i, j = _indices(key, "g", 2, m, ln)
        _check_expr(val, m, ln)
        for a, b in ((i, j), (j, i)):
            if (a, b) in given and given[(a, b)] != val:
                raise SpecError(f"g[{a + 1},{b + 1}] given twice with different values", ln)
            given[(a, b)] = val
            metric[a][b] = val
    if not entries["metric"]:
        raise SpecError("[metric] section is required")

    torsion = None
    if entries["torsion"]:
        torsion = [[["0"] * m for _ in range(m)] for _ in range(m)]
        explicit = set()
        for ln, key, val in entries["torsion"]:
            k, i, j = _indices(key, "T", 3, m, ln)
            _check_expr(val, m, ln)
            torsion[k][i][j] = val
            explicit.add((k, i, j))
            if (k, j, i) not in explicit:
                torsion[k][j][i] = "0" if val.strip() == "0" else f"-({val})"

    def matrix(prefix, items):
        M = [["0"] * m for _ in range(m)]
        for ln, key, val in items:
            a, b = _indices(key, prefix, 2, m, ln)
            M[a][b] = _check_expr(val, m, ln)
        return M

    acs = matrix("J", entries["acs"]) if entries["acs"] else None
    triple = None
    if entries["triple"]:
        parts = {"J1": [], "J2": [], "J3": []}
        for ln, key, val in entries["triple"]:
            pre = key.split("[", 1)[0]
            if pre not in parts:
                raise SpecError(f"triple entries must be J1[..], J2[..] or J3[..], got {key!r}", ln)
            parts[pre].append((ln, key, val))
        triple = tuple(matrix(p, parts[p]) for p in ("J1", "J2", "J3"))

    checks = []
    for ln, key, val in entries["checks"]:
        expect = "zero" if val is None else val
        if expect not in ("zero", "nonzero"):
            raise SpecError(f"check expectation must be 'zero' or 'nonzero', got {val!r}", ln)
        checks.append((key, expect))
    tolerances = {}
    for ln, key, val in entries["tolerances"]:
        try:
            tolerances[key] = float(val)
        except ValueError:
            raise SpecError(f"tolerance for {key!r} must be a number", ln) from None

    if connection is None:
        connection = "torsioned" if torsion is not None else "lc"
    return ScenarioSpec(
        name=head["name"][1],
        m=m,
        box=tuple(box),
        metric=metric,
        torsion=torsion,
        acs=acs,
        triple=triple,
        connection=connection,
        checks=tuple(checks),
        samples=int_field("samples", 50),
        seed=int_field("seed", 42),
        tolerances=tolerances,
    )


def validate_spec(spec: ScenarioSpec, n_points: int = 16) -> ChartManifold:
    """Build the manifold and check its invariants at sampled points."""
    try:
        mfd = spec.manifold()
    except ManifoldError as e:
        raise SpecError(str(e), point=e.point) from e
    rng = np.random.default_rng(spec.seed)
    pts = mfd.sample_points(rng, n_points)
    try:
        mfd.validate(pts)
    except ManifoldError as e:
        raise SpecError(f"invariant violation: {e.args[0]}", point=e.point) from e
    return mfd


def load_spec(path_or_name) -> ScenarioSpec:
    """Load a spec file, or a built-in scenario by name."""
    name = str(path_or_name)
    if name in BUILTINS:
        spec = BUILTINS[name]()
    else:
        try:
            with open(name, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise SpecError(f"cannot read spec {name!r}: {e.strerror}") from e
        spec = parse_spec(text)
    validate_spec(spec)
    return spec


# ------------------------------------------------------------ built-ins

_FLAT = lambda m: _const_matrix(np.eye(m))  # noqa: E731
_J2 = [["0", "-1"], ["1", "0"]]
_J4 = _const_matrix(np.kron(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]])))

BASE_CHECKS = (
    "oracle",
    "tm_metric",
    "tm_torsion_free",
    "horizontal_bracket",
    "splitting",
    "xi_parallel",
    "tensor_types",
    "structure_algebra",
    "dstar_parallel",
    "base_metric",
)


def _checks(*extra, torsion_free=True):
    tau = (("tau", "zero"),) if torsion_free else (("tau", "nonzero"),)
    base = tuple((c, "zero") for c in BASE_CHECKS)
    more = tuple((c, "zero") if isinstance(c, str) else c for c in extra)
    if torsion_free:
        more = (("bianchi", "zero"),) + more
    return base + tau + more


def flat_torus_2() -> ScenarioSpec:
    return ScenarioSpec(
        "flat_torus_2",
        2,
        ((0.0, 2 * np.pi), (0.0, 2 * np.pi)),
        _FLAT(2),
        acs=_J2,
        checks=_checks(
            "nijenhuis_I",
            "domega_I",
            "nabla_I",
            "domega_K",
            "nijenhuis_K",
            "surface_table",
            "surface_bracket",
            "surface_k_scale",
            "ricci",
            "einstein_defect",
        ),
    )


def flat_c1_kahler() -> ScenarioSpec:
    # flat plane in polar coordinates (r, phi) with its rotation structure
    return ScenarioSpec(
        "flat_c1_kahler",
        2,
        ((0.5, 2.0), (-3.0, 3.0)),
        [["1", "0"], ["0", "x1^2"]],
        acs=[["0", "-x1"], ["1/x1", "0"]],
        checks=_checks(
            "nijenhuis_I",
            "domega_I",
            "nabla_I",
            "nijenhuis_J+",
            "nijenhuis_J-",
            "domega_J+",
            "domega_J-",
            "nijenhuis_K",
            "domega_K",
            "hermitian",
            "torsion_type",
            "curvature_norm",
        ),
    )


def flat_c2_kahler() -> ScenarioSpec:
    return ScenarioSpec(
        "flat_c2_kahler",
        4,
        ((-1.0, 1.0),) * 4,
        _FLAT(4),
        acs=_J4,
        checks=_checks(
            "nijenhuis_I",
            "domega_I",
            "nabla_I",
            "nijenhuis_J+",
            "nijenhuis_J-",
            "domega_J+",
            "domega_J-",
            "nijenhuis_K",
            "domega_K",
            "hermitian",
            "torsion_type",
            "dkraines",
            "qk_L",
            "qk_alpha_skew",
        ),
    )


def _eps_torsion(eps: float) -> list:
    T = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1}.items():
        T[k, i, j] = eps * s
        T[k, j, i] = -eps * s
    return _const_matrix(T)


def flat_r3_skew_torsion() -> ScenarioSpec:
    return ScenarioSpec(
        "flat_r3_skew_torsion",
        3,
        ((-1.0, 1.0),) * 3,
        _FLAT(3),
        torsion=_eps_torsion(0.3),
        connection="torsioned",
        checks=_checks(
            "base_torsion",
            ("domega_I", "nonzero"),
            ("nijenhuis_I", "nonzero"),
            torsion_free=False,
        ),
    )


def type30_tensor(seed: int = 3, scale: float = 0.3) -> np.ndarray:
    """A constant (3,0)+(0,3) torsion tensor on C^2 with the standard structure."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(4, 4, 4)) + 1j * rng.normal(size=(4, 4, 4))
    J = np.array(np.kron(np.eye(2), [[0.0, -1.0], [1.0, 0.0]]))
    T = type30_torsion(c, J, np.eye(4))
    return T * (scale / np.max(np.abs(T)))


def flat_c2_type30_torsion() -> ScenarioSpec:
    return ScenarioSpec(
        "flat_c2_type30_torsion",
        4,
        ((-1.0, 1.0),) * 4,
        _FLAT(4),
        torsion=_const_matrix(type30_tensor()),
        acs=_J4,
        connection="hermitianized",
        # the Hermitian projection removes this torsion entirely; see README
        checks=_checks(
            "hermitian",
            "torsion_type",
            "torsion_norm",
            "curvature_norm",
            "nijenhuis_J+",
            "nijenhuis_J-",
            "domega_J+",
            "domega_J-",
        ),
    )


def s2_round() -> ScenarioSpec:
    return ScenarioSpec(
        "s2_round",
        2,
        ((0.3, 2.8), (-3.0, 3.0)),
        [["1", "0"], ["0", "sin(x1)^2"]],
        acs=[["0", "-sin(x1)"], ["1/sin(x1)", "0"]],
        checks=_checks(
            "domega_I",
            "domega_K",
            ("nijenhuis_I", "nonzero"),
            ("nabla_I", "nonzero"),
            ("nijenhuis_K", "nonzero"),
            "surface_table",
            "surface_bracket",
            "surface_k_scale",
            ("einstein_defect", "nonzero"),
            "holo_J+",
            "holo_J-",
        ),
    )


def hyperbolic_plane() -> ScenarioSpec:
    return ScenarioSpec(
        "hyperbolic_plane",
        2,
        ((-1.0, 1.0), (0.5, 2.0)),
        [["1/x2^2", "0"], ["0", "1/x2^2"]],
        acs=_J2,
        checks=_checks(
            "domega_I",
            "domega_K",
            ("nijenhuis_I", "nonzero"),
            "surface_table",
            "surface_bracket",
            "surface_k_scale",
            ("einstein_defect", "nonzero"),
        ),
    )


def _triple_sources(n: int):
    t = quatlin.standard_triple(n)
    return tuple(_const_matrix(S) for S in (t.I, t.J, t.K))


def r4_conformal_obata() -> ScenarioSpec:
    trip = _triple_sources(1)
    conf = "exp(2*x1*x2)"
    metric = [[conf if i == j else "0" for j in range(4)] for i in range(4)]
    return ScenarioSpec(
        "r4_conformal_obata",
        4,
        ((-1.0, 1.0),) * 4,
        metric,
        acs=trip[0],
        triple=trip,
        connection="obata",
        checks=_checks(
            "obata_parallel",
            "obata_metric",
            "obata_skew",
            "obata_identity",
            ("obata_input", "nonzero"),
            "hermitian",
            torsion_free=False,
        ),
    )


def r8_quaternionic_flat() -> ScenarioSpec:
    trip = _triple_sources(2)
    return ScenarioSpec(
        "r8_quaternionic_flat",
        8,
        ((-1.0, 1.0),) * 8,
        _FLAT(8),
        acs=trip[0],
        triple=trip,
        checks=_checks("family_anticommute", "family_dkraines", "dkraines", "qk_L"),
        samples=20,
    )


SURFACE_W = (0.3, 0.5)


def surface_torsion_f2() -> ScenarioSpec:
    w1, w2 = SURFACE_W
    T = np.zeros((2, 2, 2))
    T[:, 0, 1] = SURFACE_W
    T[:, 1, 0] = [-w1, -w2]
    return ScenarioSpec(
        "surface_torsion_f2",
        2,
        ((-1.0, 1.0), (-1.0, 1.0)),
        _FLAT(2),
        torsion=_const_matrix(T),
        acs=_J2,
        connection="torsioned",
        checks=_checks(
            "base_torsion",
            "surface_table",
            "surface_bracket",
            "surface_k_scale",
            "curvature_norm",
            ("domega_I", "nonzero"),
            "scalar_eq",
            "einstein_defect",
            torsion_free=False,
        ),
    )


# variants used for contrapositive checks; not part of the canonical ten
def flat_c2_skew_torsion() -> ScenarioSpec:
    T = np.zeros((4, 4, 4))
    eps = 0.3
    # totally skew: T_{ijk} = eps * e^{012}(i,j,k) + eps * e^{123}
    for trip in ((0, 1, 2), (1, 2, 3)):
        for p in itertools.permutations(range(3)):
            i, j, k = (trip[q] for q in p)
            T[k, i, j] = eps * perm_sign(p)
    return ScenarioSpec(
        "flat_c2_skew_torsion",
        4,
        ((-1.0, 1.0),) * 4,
        _FLAT(4),
        torsion=_const_matrix(T),
        acs=_J4,
        connection="torsioned",
        checks=_checks(
            "base_torsion",
            ("torsion_type", "nonzero"),
            ("domega_J+", "nonzero"),
            ("domega_J-", "nonzero"),
            ("domega_K", "nonzero"),
            ("dkraines", "nonzero"),
            ("qk_L", "nonzero"),
            torsion_free=False,
        ),
    )


def flat_c2_type30_raw() -> ScenarioSpec:
    spec = flat_c2_type30_torsion()
    return replace(
        spec,
        name="flat_c2_type30_raw",
        connection="torsioned",
        checks=(
            ("oracle", "zero"),
            ("torsion_type", "zero"),
            ("hermitian", "nonzero"),
            ("curvature_norm", "nonzero"),
            ("domega_J+", "nonzero"),
            ("domega_J-", "nonzero"),
            ("dkraines", "nonzero"),
            ("qk_L", "nonzero"),
        ),
    )


CANONICAL = (
    "flat_torus_2",
    "flat_c1_kahler",
    "flat_c2_kahler",
    "flat_r3_skew_torsion",
    "flat_c2_type30_torsion",
    "s2_round",
    "hyperbolic_plane",
    "r4_conformal_obata",
    "r8_quaternionic_flat",
    "surface_torsion_f2",
)

BUILTINS = {
    name: globals()[name] for name in CANONICAL + ("flat_c2_skew_torsion", "flat_c2_type30_raw")
}
