import json

import numpy as np
import pytest

from plap.errors import DomainError, PreconditionError
from plap.experiments import (
    AnnularBump,
    Bump,
    ExperimentReport,
    Metric,
    Outcome,
    PlateauBump,
    estimate_initial_trace,
    expected_k_limit,
    run_fundamental,
    run_k_limit,
    run_lemma_int,
    run_nonuniqueness,
    run_razor_blade,
    run_universal_estimate,
)
from plap.nonlinearity import PowerLog, Tabulated, no_absorption
from plap.solver import RadialField, RadialGrid


# --- report plumbing ----------------------------------------------------------------


@pytest.mark.parametrize(
    "value,threshold,op,ok",
    [(1.0, 2.0, "<=", True), (3.0, 2.0, "<=", False), (0.3, 0.25, ">=", True), ("A", "A", "==", True), (1, None, "<", True)],
)
def test_metric_thresholds(value, threshold, op, ok):
    assert Metric("m", value, threshold, op).passed is ok


def test_report_round_trip(tmp_path):
    rep = ExperimentReport(
        "demo", {"p": 3.0}, [Metric("a", 1.0, 2.0)], Outcome.PASS, tables={"t": (["x", "y"], [(1, 0.1), (2, 0.2)])}
    )
    path = rep.write(tmp_path)
    data = json.loads(path.read_text())
    assert data["verdict"] == "Pass" and data["metrics"][0]["passed"]
    csv = (tmp_path / "demo_t.csv").read_text()
    assert csv == "x,y\n1,0.10000000000000001\n2,0.20000000000000001\n"
    # byte-identical on rewrite
    first = path.read_bytes()
    rep.write(tmp_path)
    assert path.read_bytes() == first


# --- trace estimator ------------------------------------------------------------------


def fields(values_by_t, grid):
    return [RadialField(grid, np.full(grid.M, v), t) for t, v in values_by_t]


def test_trace_estimator_constant_ladder():
    g = RadialGrid(1, 2.0, 40)
    snaps = fields([(2.0**-j, 1.0) for j in range(6)], g)
    est = estimate_initial_trace(snaps, [Bump(0.0, 1.0)])[0]
    assert est.status == "regular" and not est.divergent
    assert est.limit == pytest.approx(est.values[-1])


def test_trace_estimator_geometric_convergence_is_extrapolated():
    g = RadialGrid(1, 2.0, 40)
    snaps = fields([(2.0**-j, 1.0 - 0.5**j) for j in range(8)], g)
    z = PlateauBump(1.0, 1.5)
    est = estimate_initial_trace(snaps, [z])[0]
    scale = est.values[-1] / (1.0 - 0.5**7)
    assert est.limit == pytest.approx(scale, rel=1e-10)


def test_trace_estimator_flags_divergence():
    g = RadialGrid(1, 2.0, 40)
    snaps = fields([(2.0**-j, 2.0**j) for j in range(6)], g)
    est = estimate_initial_trace(snaps, [Bump(0.0, 1.0)], p=1.5)[0]
    assert est.divergent and est.limit is None and not est.guaranteed


def test_trace_estimator_needs_four_snapshots():
    g = RadialGrid(1, 2.0, 40)
    with pytest.raises(DomainError):
        estimate_initial_trace(fields([(1.0, 1.0), (0.5, 1.0), (0.25, 1.0)], g), [Bump(0.0, 1.0)])


def test_off_center_bump_only_in_one_dimension():
    with pytest.raises(DomainError):
        Bump(1.0, 0.5).radial(np.array([1.0]), 2)


def test_test_functions_are_supported_where_declared():
    r = np.linspace(0, 3, 301)
    assert np.all(AnnularBump(0.5, 1.5).radial(r, 2)[(r <= 0.5) | (r >= 1.5)] == 0)
    assert np.all(PlateauBump(0.5, 1.0).radial(r, 2)[r <= 0.5] == 1)


# --- experiments: preconditions and small runs -------------------------------------------


def test_fundamental_rejects_CFS_failure():
    with pytest.raises(PreconditionError):
        run_fundamental(3.0, 1, spec=PowerLog(5.0))


def test_fundamental_without_absorption_passes():
    rep = run_fundamental(3.0, 1, spec=no_absorption(), rungs=((1e-2, 0.02), (1e-3, 0.01)), T=0.5)
    assert rep.verdict is Outcome.PASS
    assert rep.metric("finest.continuum_balance_defect").value < 1e-6


def test_lemma_int_bounded_table_converges():
    tab = Tabulated(((0.0, 0.0), (1.0, 1.0), (2.0, 1.0)))
    rep = run_lemma_int(2.0, 2, spec=tab, halvings=12)
    assert rep.metric("quadrature_verdict").value == "Convergent"
    assert rep.notes


@pytest.mark.parametrize("alpha,expected", [(1.5, "Convergent"), (3.0, "Divergent")])
def test_lemma_int_heat_kernel(alpha, expected):
    rep = run_lemma_int(2.0, 2, spec=PowerLog(alpha), halvings=14)
    assert rep.metric("quadrature_verdict").value == expected
    assert rep.verdict is Outcome.PASS


def test_expected_k_limit_table():
    assert expected_k_limit(PowerLog(1.5, 1.0), 3.0) == "Saturating"
    assert expected_k_limit(PowerLog(1.0, 2.0), 3.0) == "Saturating"
    assert expected_k_limit(PowerLog(1.0, 0.5), 3.0) == "Unbounded"
    assert expected_k_limit(PowerLog(1.0, 1.0), 3.0) == "Unbounded"
    assert expected_k_limit(PowerLog(3.0), 3.0) is None


def test_k_limit_preconditions():
    with pytest.raises(PreconditionError):
        run_k_limit(p=2.0)
    with pytest.raises(PreconditionError):
        run_k_limit(spec=no_absorption())


def test_k_limit_short_ladder_is_inconclusive():
    rep = run_k_limit(ks=(1, 4, 16), dr=0.02, h=0.01)
    assert rep.verdict is Outcome.INCONCLUSIVE


def test_nonuniqueness_preconditions():
    with pytest.raises(PreconditionError):
        run_nonuniqueness(spec=PowerLog(3.0))  # K finite
    with pytest.raises(PreconditionError):
        run_nonuniqueness(spec=PowerLog(1.0, 0.5))  # J infinite
    with pytest.raises(DomainError):
        run_nonuniqueness(a=2.0, b=1.0)


def test_universal_preconditions():
    with pytest.raises(PreconditionError):
        run_universal_estimate(spec=PowerLog(1.0, 2.0))


def test_razor_blade_coarse_run(tmp_path):
    rep = run_razor_blade(R=10.0, dr=0.02, h=0.01, out_dir=tmp_path)
    assert rep.verdict is Outcome.PASS
    assert (tmp_path / "razor_blade.json").exists()
    assert (tmp_path / "razor_blade_bound_ratio.csv").exists()


def test_razor_blade_requires_fast_diffusion():
    with pytest.raises(DomainError):
        run_razor_blade(p=3.0)
