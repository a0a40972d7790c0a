import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussreg.gaussian_space import GaussianSpace, sample
from gaussreg.harness import inequalities as ineq
from gaussreg.harness import scaling as sc
from gaussreg.harness.checks import (FAIL, PASS, PASS_WITHIN_ERROR, REPORT, VACUOUS, BoundCheck, ScalingCheck,
                                     report_row, to_rows)
from gaussreg.harness.identities import ibp_identity_1d, ibp_identity_kd
from gaussreg.harness.runner import Context, Job, batch_for, default_threads, run_jobs, stream_id
from gaussreg.harness.sequences import constant_sequence_check, sequence_demo, sequences, vacuity_flags
from gaussreg.harness.suites import ALL_SUITES, SUITES, run_suite, suite_jobs
from gaussreg.smooth_maps import get_map


def test_bound_verdicts():
    assert BoundCheck("a", 1.0, 2.0).verdict == PASS
    assert BoundCheck("a", 2.1, 2.0, 0.03).verdict == PASS_WITHIN_ERROR
    assert BoundCheck("a", 2.5, 2.0, 0.03).verdict == FAIL
    assert BoundCheck("a", math.nan, 2.0).verdict == FAIL
    assert BoundCheck("a", 3.0, 2.0, vacuous=True).verdict == VACUOUS
    assert BoundCheck("a", 3.0, 2.0, asserted=False).verdict == REPORT


def test_identity_verdicts_use_absolute_difference():
    assert BoundCheck("i", 1.0, 1.2, kind="identity").verdict == FAIL
    assert BoundCheck("i", 1.0, 1.2, 0.06, kind="identity").verdict == PASS_WITHIN_ERROR
    assert BoundCheck("i", 1.0, 1.0 + 1e-13, kind="identity", tol=1e-12).verdict == PASS
    assert BoundCheck("i", 1.0, 1.2, 1.0, 1.0, kind="identity", err=0.01).verdict == FAIL


def test_report_only_rows_record_outcome():
    row = BoundCheck("r", 3.0, 2.0, asserted=False).to_row()
    assert row.verdict == REPORT and row.params["outcome_pass"] == 0.0
    assert report_row("x", 1.0).verdict == REPORT


def test_scaling_check_rules():
    ok = ScalingCheck("s", 0.96, 1.0, 0.95)
    assert ok.verdict == PASS
    assert ScalingCheck("s", 0.94, 1.0, 0.95).verdict == FAIL
    assert ScalingCheck("s", 2.0, 1.0, 0.5).verdict == FAIL
    row = ok.to_row()
    assert row.lhs == pytest.approx(0.95) and row.rhs == 0.96


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 1))
def test_verdict_is_monotone_in_rhs(lhs, rhs, err):
    order = {FAIL: 0, PASS_WITHIN_ERROR: 1, PASS: 2}
    a = BoundCheck("m", lhs, rhs, err).verdict
    b = BoundCheck("m", lhs, rhs + 1.0, err).verdict
    assert order[b] >= order[a]


def test_stream_ids_are_stable():
    assert stream_id("x") == stream_id("x")
    assert stream_id("x") != stream_id("y")
    assert np.array_equal(batch_for("j", 2, 5, 3).points, batch_for("j", 2, 5, 3).points)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("GAUSSREG_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("GAUSSREG_THREADS", "junk")
    assert default_threads() == 1


def test_run_jobs_independent_of_thread_count():
    def job(ctx, name):
        return [float(ctx.batch(name, 1, 1000).points.sum())]

    jobs = [Job(f"j{i}", job, {"name": f"j{i}"}) for i in range(5)]
    ctx = Context(seed=4, count=1000)
    assert run_jobs(jobs, ctx, 1) == run_jobs(jobs, ctx, 3)


def test_ibp_examples(mid2):
    one = batch_for("ibp_t", 1, 200_000, 1)
    c = ibp_identity_1d(get_map("x1"), get_map("x1"), 1.0, one)
    assert abs(c.lhs - 0.5) <= 4 * c.lhs_err and c.outcome != FAIL
    c = ibp_identity_1d(get_map("x1sq_n2"), get_map("x2_n2"), 0.1, mid2)
    assert c.lhs == 0.0 and c.outcome != FAIL
    c = ibp_identity_1d(get_map("x1sq"), get_map("const_1"), 0.1, one)
    assert c.lhs == 0.0 and c.outcome != FAIL
    c = ibp_identity_kd(get_map("x1_x2"), get_map("x1_n2"), get_map("x1_n2"), 0, 1.0, mid2)
    assert c.outcome != FAIL
    c = ibp_identity_kd(get_map("x1sq_x2"), get_map("const_1_n2"), get_map("sin_x1_n2"), 0, 0.1, mid2)
    assert c.lhs == 0.0 and c.outcome != FAIL
    c = ibp_identity_kd(get_map("x1sq_x2"), get_map("sin_x1_n2"), get_map("const_1_n2"), 0, 0.01, mid2)
    assert c.outcome != FAIL


def test_ibp_input_errors(mid2):
    with pytest.raises(ValueError):
        ibp_identity_1d(get_map("x1_n2"), get_map("x2_n2"), 0.0, mid2)
    with pytest.raises(IndexError):
        ibp_identity_kd(get_map("x1_x2"), get_map("x1_n2"), get_map("x1_n2"), 2, 1.0, mid2)


def test_shift_modulus_sandwich_normal():
    rows = ineq.thm_2_1_check("normal", grid=(0.2,))
    assert rows and all(r.verdict == PASS for r in rows)


def test_tv_interpolation_one_dimensional():
    rows = ineq.lemma_2_1_check(pairs=[("normal", 0.3)], epsilons=(0.5,))
    assert rows[0].lhs == 0.0 and all(r.verdict == PASS for r in rows)
    # the TV side is the closed form 4 Phi(0.15) - 2 (mpmath)
    assert rows[1].lhs == pytest.approx(0.238470769480970063, abs=1e-6)


def test_forced_fail_fails():
    assert ineq.forced_fail_check()[0].verdict == FAIL


def test_vacuous_scaling_for_constant_map():
    rows = sc.thm_3_1_scaling(get_map("const_1"), 2.0, sc.geometric_grid(0.05, 1.0), batch_for("v", 1, 20_000, 1))
    flagged = [r for r in rows if getattr(r, "vacuous", False)]
    assert flagged and not any(r.verdict == FAIL for r in rows)


def test_degenerate_sequence_is_flagged():
    rows = sequence_demo(sequences()["x1_over_n"], batch_for("s", 2, 20_000, 1), 2.0, ns=(1, 2, 5, 10))
    assert all(vacuity_flags(rows).values())


def test_constant_sequence_has_zero_tv():
    row = constant_sequence_check(batch_for("c", 2, 5000, 1))[0]
    assert row.lhs == 0.0 and row.verdict == PASS


def test_suite_registry():
    assert "forced-fail" not in ALL_SUITES
    assert set(ALL_SUITES) <= set(SUITES)
    assert len(suite_jobs("all")) == sum(len(SUITES[s]()) for s in ALL_SUITES)
    with pytest.raises(KeyError):
        suite_jobs("nope")


# the TV tolerance of the distances suite is calibrated for N = 1e5
@pytest.mark.parametrize("suite,count", [("distances", 100_000), ("lemma11", 20_000), ("thm21", 1000)])
def test_small_suites_pass(suite, count):
    rows = to_rows(run_suite(suite, Context(seed=1, count=count)))
    assert rows and not [r for r in rows if r.verdict == FAIL]
