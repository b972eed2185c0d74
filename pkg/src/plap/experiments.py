"""Desk-scale numerical experiments with pass/fail verdicts.

Each ``run_*`` function returns an :class:`ExperimentReport` whose verdict
is ``Pass`` only if every metric meets its declared threshold. Reports can
be written as JSON, with CSV evidence tables alongside.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from . import _io
from .errors import DomainError, NumericalError, PreconditionError
from .exact import (
    decay_bound,
    sphere_area,
    eval_barenblatt,
    fundamental_params,
    razor_blade_params,
    support_radius,
)
from .nonlinearity import (
    Nonlinearity,
    PowerLog,
    Verdict,
    check_superadditive,
    classify_CFS,
    classify_J,
    classify_K,
    no_absorption,
)
from .ode_flow import phi_inf
from .solver import (
    RadialField,
    RadialGrid,
    FixedDirichlet,
    SolveConfig,
    ZeroDirichlet,
    _cell_average,
    dirac_initial,
    discrete_mass,
    sample_initial,
    solve,
)
from .steady import blowup_annulus, picard_steady

__all__ = [
    "Outcome",
    "Metric",
    "ExperimentReport",
    "Bump",
    "PlateauBump",
    "AnnularBump",
    "TraceEstimate",
    "estimate_initial_trace",
    "run_fundamental",
    "run_lemma_int",
    "run_k_limit",
    "run_nonuniqueness",
    "run_universal_estimate",
    "run_razor_blade",
    "run_trace",
]


class Outcome(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    INCONCLUSIVE = "Inconclusive"


_OPS = {
    "<": lambda v, t: v < t,
    "<=": lambda v, t: v <= t,
    ">": lambda v, t: v > t,
    ">=": lambda v, t: v >= t,
    "==": lambda v, t: v == t,
}


@dataclass(frozen=True)
class Metric:
    """A measured value and, optionally, the threshold it must meet."""

    label: str
    value: object
    threshold: object = None
    op: str = "<="

    @property
    def passed(self) -> bool:
        if self.threshold is None:
            return True
        return bool(_OPS[self.op](self.value, self.threshold))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "value": self.value,
            "threshold": self.threshold,
            "op": self.op if self.threshold is not None else None,
            "passed": self.passed,
        }


@dataclass
class ExperimentReport:
    name: str
    parameters: dict
    metrics: list
    verdict: Outcome = Outcome.INCONCLUSIVE
    artifacts: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    tables: dict = field(default_factory=dict, repr=False)

    def metric(self, label: str) -> Metric:
        for m in self.metrics:
            if m.label == label:
                return m
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "parameters": self.parameters,
            "verdict": self.verdict.value,
            "metrics": [m.to_dict() for m in self.metrics],
            "artifacts": [str(a) for a in self.artifacts],
            "notes": list(self.notes),
        }

    def write(self, out_dir) -> Path:
        """Write ``<name>.json`` and one CSV per evidence table into ``out_dir``."""
        out_dir = Path(out_dir)
        for key, (header, rows) in sorted(self.tables.items()):
            path = _io.write_csv(out_dir / f"{self.name}_{key}.csv", header, rows)
            if str(path) not in [str(a) for a in self.artifacts]:
                self.artifacts.append(path)
        return _io.write_json(out_dir / f"{self.name}.json", self.to_dict())


def _finish(name, parameters, metrics, inconclusive=False, notes=(), tables=None, out_dir=None):
    if inconclusive:
        verdict = Outcome.INCONCLUSIVE
    else:
        verdict = Outcome.PASS if all(m.passed for m in metrics) else Outcome.FAIL
    rep = ExperimentReport(name, dict(parameters), list(metrics), verdict, [], list(notes), dict(tables or {}))
    if out_dir is not None:
        rep.write(out_dir)
    return rep


def _spec_params(spec: Nonlinearity) -> dict:
    return spec.to_dict()


# --------------------------------------------------------------------------
# test functions and the initial-trace estimator


def _bump_profile(x):
    """``exp(1 - 1/(1 - x**2))`` on ``|x| < 1``, zero outside; equals 1 at 0."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    out = np.zeros_like(x)
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True)
class Bump:
    """Smooth bump of given radius. Off-center bumps are only radial for ``N = 1``,
    where they are symmetrised as ``(zeta(r) + zeta(-r))/2``."""

    center: float
    radius: float

    def radial(self, r, N):
        if self.center != 0.0 and N != 1:
            raise DomainError("off-center bumps are only supported in one dimension")
        if self.center == 0.0:
            return _bump_profile(r / self.radius)
        return 0.5 * (_bump_profile((r - self.center) / self.radius) + _bump_profile((-r - self.center) / self.radius))

    def to_dict(self):
        return {"kind": "bump", "center": self.center, "radius": self.radius}


@dataclass(frozen=True)
class PlateauBump:
    """Equal to 1 on ``|x| <= inner``, smooth decay to 0 at ``|x| = outer``."""

    inner: float
    outer: float

    def radial(self, r, N):
        r = np.asarray(r, dtype=float)
        s = (r - self.inner) / (self.outer - self.inner)
        return np.where(r <= self.inner, 1.0, _bump_profile(np.clip(s, 0.0, 1.0)))

    def to_dict(self):
        return {"kind": "plateau", "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True)
class AnnularBump:
    """Smooth bump in ``r`` supported in ``r_in < |x| < r_out``."""

    r_in: float
    r_out: float

    def radial(self, r, N):
        mid = 0.5 * (self.r_in + self.r_out)
        half = 0.5 * (self.r_out - self.r_in)
        return _bump_profile((np.asarray(r, dtype=float) - mid) / half)

    def to_dict(self):
        return {"kind": "annular", "r_in": self.r_in, "r_out": self.r_out}


def zeta_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "bump":
        return Bump(float(d.get("center", 0.0)), float(d["radius"]))
    if kind == "plateau":
        return PlateauBump(float(d["inner"]), float(d["outer"]))
    if kind == "annular":
        return AnnularBump(float(d["r_in"]), float(d["r_out"]))
    raise DomainError(f"unknown test function kind {kind!r}")


def zeta_integral(field_: RadialField, zeta) -> float:
    """``int u zeta dx`` with the cell quadrature of ``discrete_mass``."""
    grid = field_.grid
    zbar = _cell_average(grid, lambda r: zeta.radial(r, grid.N))
    return float(np.dot(grid.volumes, field_.values * zbar))


@dataclass(frozen=True)
class TraceEstimate:
    """Ladder of ``int u(., t_n) zeta`` for decreasing ``t_n``, and its limit.

    ``status`` is ``"regular"`` (Cauchy ladder, ``limit`` extrapolated),
    ``"divergent"`` (the value grew by more than 1.5x on three consecutive
    rungs) or ``"undetermined"``.
    """

    zeta: object
    times: tuple
    values: tuple
    limit: float | None
    status: str
    guaranteed: bool

    @property
    def divergent(self) -> bool:
        return self.status == "divergent"

    def to_dict(self) -> dict:
        return {
            "zeta": self.zeta.to_dict(),
            "times": list(self.times),
            "values": list(self.values),
            "limit": self.limit,
            "status": self.status,
            "guaranteed": self.guaranteed,
        }


def _extrapolate(values):
    """Aitken extrapolation of a ladder; falls back to the last value."""
    v = np.asarray(values, dtype=float)
    a, b, c = v[-3], v[-2], v[-1]
    denom = (c - b) - (b - a)
    scale = max(abs(a), abs(b), abs(c), 1e-300)
    if abs(denom) <= 1e-14 * scale or abs(c - b) <= 1e-14 * scale:
        return float(c)
    ratio = (c - b) / (b - a) if b != a else 0.0
    if not (0.0 <= ratio < 1.0):
        return float(c)
    return float(c - (c - b) ** 2 / denom)


def estimate_initial_trace(snapshots, zetas, p: float | None = None) -> list:
    """Estimate ``lim_{t -> 0} int u(., t) zeta dx`` for each test function.

    ``snapshots`` are fields at distinct times (any order; they are sorted
    into a decreasing ladder). Needs at least four.
    """
    snaps = sorted(snapshots, key=lambda s: -s.t)
    if len(snaps) < 4:
        raise DomainError(f"need at least 4 snapshots, got {len(snaps)}")
    guaranteed = p is None or p >= 2.0
    out = []
    for zeta in zetas:
        vals = [zeta_integral(s, zeta) for s in snaps]
        times = tuple(s.t for s in snaps)
        growth = [vals[i + 1] > 1.5 * vals[i] and vals[i] > 0 for i in range(len(vals) - 1)]
        divergent = any(all(growth[i : i + 3]) for i in range(len(growth) - 2))
        if divergent:
            out.append(TraceEstimate(zeta, times, tuple(vals), None, "divergent", guaranteed))
            continue
        d = np.abs(np.diff(vals))
        scale = max(max(np.abs(vals)), 1e-300)
        cauchy = d[-1] <= 1e-12 * scale or (d[-2] > 0 and d[-1] <= d[-2])
        if cauchy:
            out.append(TraceEstimate(zeta, times, tuple(vals), _extrapolate(vals), "regular", guaranteed))
        else:
            out.append(TraceEstimate(zeta, times, tuple(vals), None, "undetermined", guaranteed))
    return out


# --------------------------------------------------------------------------
# helpers


def _domain_radius(params, T: float, tail_rel: float = 1e-6) -> float:
    """Radius holding ``v_k(., t)`` for all ``t <= T`` (support, or tail mass ``< tail_rel k``)."""
    if params.p > 2.0:
        return 1.25 * support_radius(params, T)
    N = params.N
    omega = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)
    R = 1.0
    while True:
        tail = integrate.quad(lambda r: omega * r ** (N - 1) * eval_barenblatt(params, r, T), R, np.inf, limit=200)[0]
        if tail < tail_rel * params.k:
            return R
        R *= 2.0
        if R > 1e7:
            raise DomainError("no practical radius holds the solution mass")


def _geometric_times(t_min, T, per_decade=4):
    n = max(1, int(math.ceil(per_decade * math.log10(T / t_min))))
    return tuple(float(t) for t in np.geomspace(t_min, T, n + 1))


def _probe_index(grid: RadialGrid, x0: float) -> int:
    return int(min(grid.M - 1, max(0, math.floor(abs(x0) / grid.dr))))


def _exact_averages(params, grid, t):
    breaks = ()
    if params.p > 2.0:
        breaks = (support_radius(params, t),)
    return _cell_average(grid, lambda r: eval_barenblatt(params, r, t), breaks)


def _snapshot_rows(snaps):
    rows = []
    for s in snaps:
        for r, u in zip(s.grid.centers, s.values):
            rows.append((r, u, s.t))
    return rows


# --------------------------------------------------------------------------
# fundamental solutions


def run_fundamental(
    p: float = 3.0,
    N: int = 1,
    k: float = 1.0,
    spec: Nonlinearity | None = None,
    rungs=((1e-2, 0.02), (1e-3, 0.01), (1e-4, 0.005)),
    T: float = 1.0,
    out_dir=None,
) -> ExperimentReport:
    """Fundamental solution from ``v_k(., eps)`` data over a ladder of ``(eps, dr)`` rungs.

    Checks the discrete mass identity, the continuum mass balance at the
    finest rung, domination by ``v_k`` up to the measured pure-diffusion
    discretisation error, radial monotonicity, and recovery of the initial
    mass ``k`` by the trace estimator.
    """
    spec = PowerLog(1.5, 1.0) if spec is None else spec
    cfs = classify_CFS(spec, p, N, evidence=False).verdict
    if cfs is Verdict.INFINITE:
        raise PreconditionError("the growth condition CFS fails; no fundamental solution")
    params = fundamental_params(p, N, k)
    R = _domain_radius(params, T)
    notes = []
    if cfs is Verdict.UNDECIDED:
        notes.append("CFS undecided for this nonlinearity; run proceeds without a guarantee")
    metrics = []
    tables = {}
    finest = None
    pure = no_absorption()
    for i, (eps, dr) in enumerate(rungs):
        M = int(math.ceil(R / dr))
        grid = RadialGrid(N, R, M)
        records = tuple(t for t in _geometric_times(max(10.0 * eps, 1e-3 * T), T) if t > eps)
        cfg = SolveConfig(h=0.5 * dr, T=T, record_times=records, growth=0.05)
        u0 = dirac_initial(params, grid, eps)
        try:
            run = solve(u0, spec, p, cfg)
            free = solve(u0, pure, p, cfg) if not spec.is_zero else run
        except NumericalError as exc:
            return _finish(
                "fundamental",
                {"p": p, "N": N, "k": k, "spec": _spec_params(spec)},
                metrics,
                inconclusive=True,
                notes=notes + [f"solver failure at rung {i}: {exc}"],
                out_dir=out_dir,
            )
        dom = slack = mono = comp = 0.0
        mono_count = 0
        for s, s0 in zip(run.snapshots, free.snapshots):
            v = _exact_averages(params, grid, s.t)
            dom = max(dom, float(np.max(s.values - v)))
            slack = max(slack, float(np.max(np.abs(s0.values - v))))
            comp = max(comp, float(np.max(s.values - s0.values)))
            dif = np.diff(s.values)
            bad = dif > 1e-12 * max(1.0, float(np.max(s.values)))
            mono_count += int(np.count_nonzero(bad))
            mono = max(mono, float(np.max(dif)))
        cont = abs(run.ledger[-1, 1] + run.ledger[-1, 2] + run.ledger[-1, 3] - k) / k
        tag = f"rung{i}"
        metrics += [
            Metric(f"{tag}.discrete_balance_defect", float(run.balance_defect().max()), 1e-10),
            Metric(f"{tag}.domination_excess", dom, 1e-6 + slack),
            Metric(f"{tag}.comparison_excess", comp, 1e-10),
            Metric(f"{tag}.monotonicity_violations", mono_count, 0, "=="),
            Metric(f"{tag}.continuum_balance_defect", cont),
        ]
        finest = (run, grid, eps, dr, cont)
        tables[f"ledger_{tag}"] = (["t", "mass", "absorbed", "outflow", "clipped", "newton"], run.ledger.tolist())
    run, grid, eps, dr, cont = finest
    metrics.append(Metric("finest.continuum_balance_defect", cont, 1e-2))
    est = estimate_initial_trace(run.snapshots, [PlateauBump(0.5 * grid.R, 0.9 * grid.R)], p)[0]
    lim = est.limit if est.limit is not None else float("nan")
    metrics.append(Metric("finest.initial_mass_recovery", abs(lim - k) / k, 1e-2))
    tables["snapshots_finest"] = (["r", "u", "t"], _snapshot_rows(run.snapshots))
    return _finish(
        "fundamental",
        {"p": p, "N": N, "k": k, "spec": _spec_params(spec), "rungs": [list(r) for r in rungs], "T": T, "R": R},
        metrics,
        notes=notes,
        tables=tables,
        out_dir=out_dir,
    )


# --------------------------------------------------------------------------
# integrability of f(v_k) near t = 0


def _absorbed_density(params, spec, t):
    """``int_{B_1} f(v_k(x, t)) dx``, split on a geometric ladder of the similarity scale."""
    N = params.N
    omega = sphere_area(N)
    top = 1.0
    if params.p > 2.0:
        top = min(1.0, support_radius(params, t))
    scale = t ** (params.lam / N)
    edges = [0.0] + [x for x in scale * 2.0 ** np.arange(-1, 40) if x < top] + [top]
    g = lambda r: omega * r ** (N - 1) * float(spec.f(eval_barenblatt(params, r, t)))
    total = 0.0
    for a_, b_ in zip(edges[:-1], edges[1:]):
        piece = integrate.quad(g, a_, b_, epsabs=0.0, epsrel=1e-10, limit=100)[0]
        total += piece
        if a_ > 8.0 * scale and piece <= 1e-16 * total:
            break
    return total


def run_lemma_int(
    p: float,
    N: int,
    k: float = 1.0,
    spec: Nonlinearity | None = None,
    halvings: int = 20,
    out_dir=None,
) -> ExperimentReport:
    """Decide whether ``int_0^1 int_{B_1} f(v_k) dx dt`` converges.

    Increments ``d_j = int_{2**-(j+1)}^{2**-j} int_{B_1} f(v_k)`` are
    computed by quadrature of the closed form. The ladder is called
    Convergent when the last three increment ratios are all at most 0.9,
    Divergent when they are all at least 1, and Inconclusive otherwise.
    """
    spec = PowerLog(1.5) if spec is None else spec
    params = fundamental_params(p, N, k)
    deltas = 2.0 ** -np.arange(0, halvings + 1)
    # the slab integrand is a near power of t, so 12-point Gauss in log t is ample
    x, w = np.polynomial.legendre.leggauss(12)
    incs = []
    for hi, lo in zip(deltas[:-1], deltas[1:]):
        a_, b_ = math.log(lo), math.log(hi)
        s_nodes = 0.5 * (b_ - a_) * x + 0.5 * (a_ + b_)
        vals = [math.exp(s_) * _absorbed_density(params, spec, math.exp(s_)) for s_ in s_nodes]
        incs.append(0.5 * (b_ - a_) * float(np.dot(w, vals)))
    incs = np.array(incs)
    ratios = incs[1:] / np.where(incs[:-1] > 0, incs[:-1], np.nan)
    tail = ratios[-3:]
    if np.all(incs[-4:] == 0.0) or np.all(tail <= 0.9):
        observed = "Convergent"
    elif np.all(tail >= 1.0):
        observed = "Divergent"
    else:
        observed = "Inconclusive"
    cfs = classify_CFS(spec, p, N, evidence=False).verdict
    metrics = [
        Metric("last_ratio", float(ratios[-1])),
        Metric("partial_integral", float(incs.sum())),
    ]
    notes = []
    inconclusive = observed == "Inconclusive"
    if cfs is Verdict.UNDECIDED:
        notes.append("CFS undecided for this nonlinearity; verdict rests on the quadrature alone")
        metrics.append(Metric("quadrature_verdict", observed))
    else:
        expected = "Convergent" if cfs is Verdict.FINITE else "Divergent"
        metrics.append(Metric("quadrature_verdict", observed, expected, "=="))
    rows = [(d, inc) for d, inc in zip(deltas[:-1], incs)]
    return _finish(
        "lemma_int",
        {"p": p, "N": N, "k": k, "spec": _spec_params(spec), "halvings": halvings, "classifier": cfs.value},
        metrics,
        inconclusive=inconclusive,
        notes=notes,
        tables={"increments": (["delta", "increment"], rows)},
        out_dir=out_dir,
    )


# --------------------------------------------------------------------------
# k -> infinity


def expected_k_limit(spec: PowerLog, p: float) -> str | None:
    """Limit of ``u_k`` as ``k -> inf`` for ``p > 2``: "Saturating", "Unbounded" or ``None``."""
    a, b = spec.alpha, spec.beta
    if b > 0 and 1.0 < a < p - 1.0:
        return "Saturating"
    if a == 1.0 and b > 1.0:
        return "Saturating"
    if a == 1.0 and 0.0 < b <= 1.0:
        return "Unbounded"
    return None


def run_k_limit(
    p: float = 3.0,
    N: int = 1,
    spec: PowerLog | None = None,
    ks=(1, 4, 16, 64, 256, 1024, 4096),
    x0: float = 0.0,
    t0: float = 1.0,
    eps: float = 1e-4,
    dr: float = 0.005,
    h: float = 0.0025,
    tol: float = 1e-2,
    reference_plateau: float | None = None,
    out_dir=None,
) -> ExperimentReport:
    """Follow ``u_k(x0, t0)`` up a ladder of masses ``k``.

    Saturating: values increase in ``k``, stay below ``phi_inf(t0)(1 + tol)``
    and the relative gap to ``phi_inf(t0)`` at the ladder top is below half
    the gap at the third rung. Unbounded: values still grow by more than
    10% at the ladder top and exceed ``phi_inf(t0)(1 + tol)`` when that is
    finite. With ``reference_plateau`` the top value must also exceed five
    times it.
    """
    spec = PowerLog(1.5, 1.0) if spec is None else spec
    if not p > 2.0:
        raise PreconditionError("the k-limit experiment needs p > 2")
    if not isinstance(spec, PowerLog):
        raise PreconditionError("the k-limit experiment needs a power-log nonlinearity")
    ks = tuple(float(k) for k in ks)
    values, rows = [], []
    for k in ks:
        params = fundamental_params(p, N, k)
        R = max(1.25 * support_radius(params, t0), abs(x0) + 2.0 * dr)
        grid = RadialGrid(N, R, int(math.ceil(R / dr)))
        cfg = SolveConfig(h=h, T=t0, record_times=(t0,), growth=0.05)
        try:
            run = solve(dirac_initial(params, grid, eps), spec, p, cfg)
        except NumericalError as exc:
            return _finish(
                "k_limit",
                {"p": p, "N": N, "spec": _spec_params(spec)},
                [],
                inconclusive=True,
                notes=[f"solver failure at k = {k}: {exc}"],
                out_dir=out_dir,
            )
        u = float(run.snapshots[0].values[_probe_index(grid, x0)])
        values.append(u)
        rows.append((k, u))
    values = np.array(values)
    j_finite = classify_J(spec, evidence=False).verdict is Verdict.FINITE
    plateau = phi_inf(spec, t0) if j_finite else None
    mono_violations = int(np.count_nonzero(np.diff(values) < -1e-10 * np.maximum(1.0, values[1:])))
    expected = expected_k_limit(spec, p)
    metrics = [Metric("monotonicity_violations", mono_violations, 0, "==")]
    if len(values) < 4:
        return _finish("k_limit", {"p": p, "N": N}, metrics, inconclusive=True, notes=["ladder too short"])
    top_growth = values[-1] / values[-2]
    if plateau is not None:
        gaps = (plateau - values) / plateau
        saturating = (
            values[-1] <= plateau * (1.0 + tol) and abs(gaps[-1]) < 0.5 * abs(gaps[2]) and mono_violations == 0
        )
        metrics.append(Metric("phi_inf_t0", plateau))
        metrics.append(Metric("final_relative_gap", float(abs(gaps[-1]))))
        metrics.append(Metric("gap_ratio_top_vs_rung3", float(abs(gaps[-1]) / abs(gaps[2]))))
    else:
        gaps = None
        saturating = False
    exceeds = plateau is None or values[-1] > plateau * (1.0 + tol)
    unbounded = (not saturating) and exceeds and top_growth > 1.1
    observed = "Saturating" if saturating else "Unbounded" if unbounded else "Undetermined"
    metrics.append(Metric("top_growth_ratio", float(top_growth)))
    if expected is not None:
        metrics.append(Metric("classification", observed, expected, "=="))
        if expected == "Saturating" and plateau is not None:
            metrics.append(Metric("final_gap_bound", float(abs(gaps[-1])), 0.15, "<"))
    else:
        metrics.append(Metric("classification", observed))
    if reference_plateau is not None:
        metrics.append(Metric("top_over_reference", float(values[-1] / reference_plateau), 5.0, ">"))
    inconclusive = expected is None or observed == "Undetermined"
    return _finish(
        "k_limit",
        {
            "p": p,
            "N": N,
            "spec": _spec_params(spec),
            "ks": list(ks),
            "x0": x0,
            "t0": t0,
            "eps": eps,
            "dr": dr,
            "h": h,
            "tol": tol,
            "expected": expected,
        },
        metrics,
        inconclusive=inconclusive,
        tables={"ladder": (["k", "u"], rows)},
        out_dir=out_dir,
    )


# --------------------------------------------------------------------------
# non-uniqueness


def run_nonuniqueness(
    p: float = 3.0,
    N: int = 1,
    spec: Nonlinearity | None = None,
    a: float = 1.0,
    b: float = 2.0,
    theta: float = 0.5,
    t_probe: float = 1.0,
    R_ladder=(4.0, 8.0, 16.0),
    dr: float = 0.01,
    h: float = 0.005,
    tol: float = 1e-2,
    out_dir=None,
) -> ExperimentReport:
    """Two different solutions from the same unbounded data ``u0 = (1-theta) w_a + theta w_b``.

    The large one solves on ``B_R`` with boundary value ``(w_a(R) + w_b(R))/2``;
    the small one solves with data ``u0`` truncated to ``B_R`` on ``B_{2R}``
    with zero boundary values. ``tol`` is relative to the bound it
    accompanies. The separation ``sup(upper - lower)`` on ``r < min(R_ladder)``
    at ``t_probe`` is computed per rung; when successive differences
    contract, the geometric tail bound is subtracted from the top rung and the
    result must reach ``0.25 w_a(r_probe)``.
    """
    spec = PowerLog(1.0, 2.0) if spec is None else spec
    if not p > 2.0 * N / (N + 1.0):
        raise PreconditionError("need p > 2N/(N+1)")
    if classify_J(spec, evidence=False).verdict is not Verdict.FINITE:
        raise PreconditionError("non-uniqueness needs J finite")
    if classify_K(spec, p, evidence=False).verdict is not Verdict.INFINITE:
        raise PreconditionError("non-uniqueness needs K infinite")
    if not (0 < a < b) or not (0.0 <= theta <= 1.0):
        raise DomainError("need 0 < a < b and theta in [0, 1]")
    R_ladder = tuple(sorted(float(R) for R in R_ladder))
    r_top = 2.0 * R_ladder[-1]
    prof_a = picard_steady(spec, p, N, a, r_top, h_max=dr / 4.0, adaptive=False)
    prof_b = picard_steady(spec, p, N, b, r_top, h_max=dr / 4.0, adaptive=False)
    wa = lambda r: np.interp(r, prof_a.r, prof_a.w)
    wb = lambda r: np.interp(r, prof_b.r, prof_b.w)
    u0 = lambda r: (1.0 - theta) * wa(r) + theta * wb(r)
    records = tuple(t for t in (0.125, 0.25, 0.5, 1.0) if t < t_probe) + (t_probe,)
    upper, lower = [], []
    notes = []
    try:
        for R in R_ladder:
            g = RadialGrid(N, R, int(round(R / dr)))
            cfg = SolveConfig(h=h, T=t_probe, record_times=records, boundary=FixedDirichlet(0.5 * (wa(R) + wb(R))))
            upper.append(solve(sample_initial(g, u0), spec, p, cfg))
            gl = RadialGrid(N, 2.0 * R, int(round(2.0 * R / dr)))
            data = sample_initial(gl, lambda r: np.where(r < R, u0(r), 0.0))
            lower.append(solve(data, spec, p, SolveConfig(h=h, T=t_probe, record_times=records)))
    except NumericalError as exc:
        return _finish("nonuniqueness", {"p": p, "N": N}, [], inconclusive=True, notes=[str(exc)], out_dir=out_dir)

    # the ladder tops are the best approximations; compare them on r < R_min
    R_min = R_ladder[0]
    up, lo = upper[-1], lower[-1]
    n_common = int(round(R_min / dr))
    phis = {t: phi_inf(spec, t) for t in records}
    order = lower_phi = lower_wb = upper_wa = -math.inf
    for su, sl in zip(up.snapshots, lo.snapshots):
        c = su.grid.centers[:n_common]
        uu, ul = su.values[:n_common], sl.values[:n_common]
        # the order check runs over the whole upper domain
        order = max(order, float(np.max(sl.values[: su.grid.M] - su.values)))
        lower_phi = max(lower_phi, float(np.max(sl.values) / phis[su.t]) - 1.0)
        lower_wb = max(lower_wb, float(np.max(ul - wb(c))))
        upper_wa = max(upper_wa, float(np.max((wa(su.grid.centers) - su.values) / wa(su.grid.centers))))
    su, sl = up.snapshots[-1], lo.snapshots[-1]
    c = su.grid.centers[:n_common]
    r_probe = float(c[-1])
    w_probe = float(wa(r_probe))
    # separation per rung; upper decreases and lower increases with R, so the
    # ladder is monotone and its tail is bounded geometrically once it contracts
    seps = np.array(
        [float(np.max(U.snapshots[-1].values[:n_common] - L.snapshots[-1].values[:n_common])) for U, L in zip(upper, lower)]
    )
    d = np.abs(np.diff(seps))
    stable = False
    tail = math.inf
    if len(d) >= 2:
        if d[-1] <= 1e-12 * max(1.0, abs(seps[-1])):
            stable, tail = True, 0.0
        elif d[-2] > 0 and d[-1] / d[-2] < 1.0:
            rho = d[-1] / d[-2]
            stable, tail = True, d[-1] * rho / (1.0 - rho)
    if not stable:
        notes.append("separation ladder does not contract; the R -> inf limit is not bracketed")
    certified = seps[-1] - tail if stable else float("nan")
    metrics = [
        Metric("lower_minus_upper", order, 1e-6),
        Metric("lower_over_phi_inf_minus_1", lower_phi, tol),
        Metric("lower_minus_w_b", lower_wb, 1e-6),
        Metric("w_a_minus_upper_relative", upper_wa, tol),
        Metric("separation_over_w_a_probe", certified / w_probe if stable else float("nan"), 0.25, ">="),
        Metric("separation_top_rung", float(seps[-1])),
        Metric("separation_tail_bound", tail),
        Metric("r_probe", r_probe),
        Metric("w_a_probe", w_probe),
    ]
    rows = []
    for r_, uu, ul in zip(c, su.values[:n_common], sl.values[:n_common]):
        rows.append((r_, uu, ul, float(wa(r_)), float(wb(r_))))
    return _finish(
        "nonuniqueness",
        {
            "p": p,
            "N": N,
            "spec": _spec_params(spec),
            "a": a,
            "b": b,
            "theta": theta,
            "t_probe": t_probe,
            "R_ladder": list(R_ladder),
            "dr": dr,
            "h": h,
            "tol": tol,
        },
        metrics,
        inconclusive=not stable,
        notes=notes,
        tables={
            "profiles": (["r", "upper", "lower", "w_a", "w_b"], rows),
            "ladder": (["R", "separation"], list(zip(R_ladder, seps))),
        },
        out_dir=out_dir,
    )


# --------------------------------------------------------------------------
# universal estimate


def run_universal_estimate(
    p: float = 3.0,
    N: int = 1,
    spec: Nonlinearity | None = None,
    annulus=(0.1, 2.0),
    m_ladder=tuple(4.0**j for j in range(1, 11)),
    k: float = 100.0,
    eps: float = 1e-4,
    T: float = 1.0,
    dr: float = 0.005,
    h: float = 0.0025,
    grid_size: int = 800,
    out_dir=None,
) -> ExperimentReport:
    """Compare a fundamental solution with ``min{phi_inf(t), W(x)}``.

    ``W`` is the annulus solution with boundary value at the top of
    ``m_ladder``; points with ``2 eps_in < |x| < R/2`` are checked with a 5%
    allowance.
    """
    spec = PowerLog(3.0) if spec is None else spec
    if classify_K(spec, p, evidence=False).verdict is not Verdict.FINITE:
        raise PreconditionError("the universal estimate needs K finite")
    if classify_J(spec, evidence=False).verdict is not Verdict.FINITE:
        raise PreconditionError("the universal estimate needs J finite")
    if not check_superadditive(spec):
        raise PreconditionError("the universal estimate needs a superadditive f")
    e_in, R_out = annulus
    W = None
    mids = []
    try:
        for m in m_ladder:
            W = blowup_annulus(spec, p, N, e_in, R_out, m, grid_size=grid_size, initial=None if W is None else W.w)
            mids.append((m, float(W.w[grid_size // 2])))
    except NumericalError as exc:
        return _finish("universal", {"p": p, "N": N}, [], inconclusive=True, notes=[str(exc)], out_dir=out_dir)
    params = fundamental_params(p, N, k)
    R = max(_domain_radius(params, T), R_out)
    grid = RadialGrid(N, R, int(math.ceil(R / dr)))
    records = tuple(t for t in _geometric_times(10.0 * eps, T, per_decade=8) if t > eps)
    try:
        run = solve(dirac_initial(params, grid, eps), spec, p, SolveConfig(h=h, T=T, record_times=records, growth=0.05))
    except NumericalError as exc:
        return _finish("universal", {"p": p, "N": N}, [], inconclusive=True, notes=[str(exc)], out_dir=out_dir)
    c = grid.centers
    mask = (c > 2.0 * e_in) & (c < 0.5 * R_out)
    Wc = np.interp(c[mask], W.r, W.w)
    worst = 0.0
    worst_near0 = 0.0
    rows = []
    for s in run.snapshots:
        ph = phi_inf(spec, s.t)
        bound = np.minimum(ph, Wc)
        ratio = s.values[mask] / bound
        worst = max(worst, float(np.max(ratio)))
        worst_near0 = max(worst_near0, float(s.values[0] / ph))
        rows.append((s.t, ph, float(np.max(ratio))))
    metrics = [
        Metric("max_u_over_bound", worst, 1.05),
        Metric("max_u0_over_phi_inf", worst_near0),
        Metric("W_midpoint_top", mids[-1][1]),
    ]
    return _finish(
        "universal",
        {
            "p": p,
            "N": N,
            "spec": _spec_params(spec),
            "annulus": list(annulus),
            "m_ladder": list(m_ladder),
            "k": k,
            "eps": eps,
            "T": T,
            "dr": dr,
            "h": h,
        },
        metrics,
        tables={"bound_ratio": (["t", "phi_inf", "max_ratio"], rows), "annulus_midpoints": (["m", "W_mid"], mids)},
        out_dir=out_dir,
    )


# --------------------------------------------------------------------------
# razor-blade decay bound


def run_razor_blade(
    p: float = 1.5,
    N: int = 1,
    R0: float = 1.0,
    T: float = 1.0,
    amplitude: float = 1.0,
    R: float = 20.0,
    dr: float = 0.01,
    h: float = 0.005,
    growth: float = 0.02,
    first_step: float = 1e-8,
    t_first_sample: float = 1e-4,
    per_decade: int = 10,
    flux_reg: float = 1e-14,
    out_dir=None,
) -> ExperimentReport:
    """Pure diffusion from a smooth bump supported in ``B_R0``; checks the decay bound
    ``u <= Lambda_1 (t/(|x| - R0)**p)**(1/(2-p))`` with 5% allowance at ``|x| > 1.5 R0``.

    One backward-Euler step from compact data has far tail ``12 h**2 / r**3``
    (``p = 1.5``), four times the bound, so the run opens with ``first_step``
    and ramps geometrically by ``growth``; the tail ratio then settles near
    ``1 + growth``. Samples are taken on a geometric ladder from
    ``t_first_sample`` to ``T``. The tail forms with gradients near
    ``1e-8``, so ``flux_reg`` must sit well below that.
    """
    rb = razor_blade_params(p, N)
    grid = RadialGrid(N, R, int(round(R / dr)))
    data = sample_initial(grid, lambda r: amplitude * _bump_profile(np.asarray(r) / R0))
    records = _geometric_times(t_first_sample, T, per_decade)
    cfg = SolveConfig(h=h, T=T, record_times=records, growth=growth, first_step=first_step, flux_reg=flux_reg)
    try:
        run = solve(data, no_absorption(), p, cfg)
    except NumericalError as exc:
        return _finish("razor_blade", {"p": p, "N": N}, [], inconclusive=True, notes=[str(exc)], out_dir=out_dir)
    c = grid.centers
    mask = c > 1.5 * R0
    worst, rows = 0.0, []
    for s in run.snapshots:
        bound = decay_bound(rb, c[mask], s.t, R0)
        ratio = float(np.max(s.values[mask] / bound))
        worst = max(worst, ratio)
        rows.append((s.t, ratio))
    metrics = [
        Metric("max_u_over_bound", worst, 1.05),
        Metric("lambda_1", rb.lambda_1),
        Metric("samples", len(run.snapshots)),
    ]
    return _finish(
        "razor_blade",
        {
            "p": p,
            "N": N,
            "R0": R0,
            "T": T,
            "amplitude": amplitude,
            "R": R,
            "dr": dr,
            "h": h,
            "growth": growth,
            "first_step": first_step,
            "t_first_sample": t_first_sample,
            "flux_reg": flux_reg,
        },
        metrics,
        tables={"bound_ratio": (["t", "max_ratio"], rows)},
        out_dir=out_dir,
    )


# --------------------------------------------------------------------------
# initial trace


def run_trace(
    p: float = 3.0,
    N: int = 1,
    spec: Nonlinearity | None = None,
    k: float = 1.0,
    eps: float = 1e-5,
    dr: float = 0.0025,
    T: float = 0.1,
    out_dir=None,
) -> ExperimentReport:
    """Initial traces of a smooth-data run and of a Dirac run.

    Smooth data ``g`` (a bump of radius 1) must return ``int g zeta``; the
    Dirac run must return ``k`` for a test function equal to 1 near the
    origin and 0 for one supported in ``|x| > 0.5``.
    """
    spec = PowerLog(1.5, 1.0) if spec is None else spec
    notes = [] if p >= 2.0 else ["p < 2: trace verdicts carry no guarantee"]
    times = tuple(float(T) * 2.0**-j for j in range(12, -1, -1))
    zc = PlateauBump(0.25, 0.5)
    z_off = AnnularBump(0.5, 1.5)
    if N == 1:
        z_off = Bump(1.0, 0.5)
    # smooth data
    R = 3.0
    grid = RadialGrid(N, R, int(round(R / dr)))
    g = lambda r: _bump_profile(np.asarray(r, dtype=float))
    data = sample_initial(grid, g)
    zs = Bump(0.0, 0.75)
    exact = integrate.quad(lambda r: sphere_area(N) * r ** (N - 1) * g(r) * zs.radial(r, N), 0.0, 0.75, epsrel=1e-12)[0]
    try:
        run = solve(data, spec, p, SolveConfig(h=times[0] / 4.0, T=T, record_times=times, growth=None))
    except NumericalError as exc:
        return _finish("trace", {"p": p, "N": N}, [], inconclusive=True, notes=[str(exc)], out_dir=out_dir)
    smooth = estimate_initial_trace(run.snapshots, [zs], p)[0]
    # Dirac data
    params = fundamental_params(p, N, k)
    Rd = max(_domain_radius(params, T), 2.5)
    gd = RadialGrid(N, Rd, int(math.ceil(Rd / dr)))
    dtimes = tuple(t for t in times if t > 4.0 * eps)
    try:
        drun = solve(
            dirac_initial(params, gd, eps), spec, p, SolveConfig(h=dr, T=T, record_times=dtimes, growth=0.05)
        )
    except NumericalError as exc:
        return _finish("trace", {"p": p, "N": N}, [], inconclusive=True, notes=[str(exc)], out_dir=out_dir)
    centered, off = estimate_initial_trace(drun.snapshots, [zc, z_off], p)
    nan = float("nan")
    metrics = [
        Metric(
            "smooth_relative_error",
            abs((smooth.limit if smooth.limit is not None else nan) - exact) / abs(exact),
            1e-2,
        ),
        Metric(
            "dirac_centered_relative_error",
            abs((centered.limit if centered.limit is not None else nan) - k) / k,
            1e-2,
        ),
        Metric("dirac_off_center_over_k", abs(off.limit if off.limit is not None else nan) / k, 1e-3, "<"),
    ]
    rows = []
    for est, label in ((smooth, "smooth"), (centered, "dirac_centered"), (off, "dirac_off")):
        for t, v in zip(est.times, est.values):
            rows.append((label, t, v))
    return _finish(
        "trace",
        {"p": p, "N": N, "spec": _spec_params(spec), "k": k, "eps": eps, "dr": dr, "T": T},
        metrics,
        notes=notes,
        tables={"ladders": (["series", "t", "value"], rows)},
        out_dir=out_dir,
    )
