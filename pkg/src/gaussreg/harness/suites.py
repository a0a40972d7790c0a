"""Named verification suites: lists of jobs whose rows make up one report.

Every job draws from its own named stream, so a suite's rows depend only on
(seed, N) and never on which other suites run alongside it.
"""

from __future__ import annotations

from ..smooth_maps import get_map
from ..smoothness import geometric_grid
from . import identities as ids
from . import inequalities as ineq
from . import scaling as sc
from . import sequences as sq
from .runner import Context, Job, run_jobs, stream_id

EXACT_POINTS = 10_000
TV_POINTS = 100_000
KD_POINTS = 100_000

BESOV_PAIRS = {
    "x1": ((2.0, 0.5), (10.0, 0.9)),
    "x1sq": ((10.0, 0.9), (4.0, 0.5), (2.0, 0.9)),
    "x1_x2": ((10.0, 0.5), (16.0, 0.9)),
    # theta = 0.5 has an infinite moment for x1^2; it yields a report row
    "x1sq_x2": ((16.0, 0.45), (16.0, 0.5)),
}

SCALING_CASES = (
    ("thm_3_1", "x1", 2.0, (0.05, 1.0)),
    ("thm_3_1", "x1sq", 4.0, (0.01, 0.5)),
    ("thm_4_1", "x1_x2", 10.0, (0.1, 1.0)),
    ("thm_4_1", "x1sq_x2", 16.0, (0.1, 1.0)),
)
VACUITY_CASES = (("thm_3_1", "const_1", 2.0, (0.05, 1.0)), ("thm_4_1", "x1_x1", 10.0, (0.1, 1.0)))


# --------------------------------------------------------------------------
# job bodies: fn(ctx, **kwargs) -> list of checks


def _exact(ctx: Context):
    X = {d: ctx.batch(f"exact_d{d}", d, EXACT_POINTS).points for d in (1, 2, 3)}
    return ids.exact_identity_checks(X)


def _ibp_1d(ctx: Context, f: str, g: str):
    dim = get_map(f).dim_in
    return ids.ibp_1d_sweep(f, g, ctx.batch(f"ibp_d{dim}", dim))


def _ibp_kd(ctx: Context, f: str, u: str, v: str, j: int):
    return ids.ibp_kd_sweep(f, u, v, j, ctx.batch("ibp_d2", 2))


def _ou_symmetry(ctx: Context):
    b = ctx.batch("ibp_d2", 2)
    return [ids.ou_symmetry_check(get_map("x1sq_n2"), get_map("sin_lin_n2"), b),
            ids.ou_symmetry_check(get_map("x1x2"), get_map("x1x2"), b)]


def _by_dim(ctx: Context, name: str):
    return {d: ctx.batch(f"{name}_d{d}", d) for d in (1, 2)}


def _ugamma(ctx: Context):
    rows = ineq.u_gamma_constant_checks()
    rows += ineq.u_gamma_oracle_checks(ctx.batch("ugamma_d1", 1))
    rows += ineq.u_gamma_path_checks(_by_dim(ctx, "ugamma"))
    return rows


def _lemma11(ctx: Context):
    return ineq.lemma_1_1_zero_checks() + ineq.lemma_1_1_checks(_by_dim(ctx, "lemma11"))


def _distances(ctx: Context):
    n = min(ctx.count, TV_POINTS)
    rows = [ineq.tv_normal_shift_check(ctx.batch("tv_shift", 1, n)),
            ineq.tv_independent_normal_check(ctx.batch("tv_a", 1, n), ctx.batch("tv_b", 1, n))]
    return rows + ineq.two_point_checks() + ineq.lp_primal_checks(seed=ctx.seed)


def _thm21(ctx: Context, density: str):
    return ineq.thm_2_1_check(density)


def _lemma21(ctx: Context):
    rows = ineq.lemma_2_1_check() + ineq.kantorovich_remark_check()
    return rows + ineq.interpolation_kd_gaussian(ctx.batch("lemma21_d2", 2, min(ctx.count, KD_POINTS)))


def _besov_oracle(ctx: Context, density: str):
    return sc.besov_oracle_checks(density, ctx.batch("besov_d1", 1), ctx.seed, stream_id(f"besov_{density}"))


def _besov_corollary(ctx: Context, name: str):
    spec = get_map(name)
    return sc.besov_corollary(spec, BESOV_PAIRS[name], ctx.batch(f"besov_d{spec.dim_in}", spec.dim_in))


def _scaling(ctx: Context, label: str, name: str, p: float, span: tuple):
    spec = get_map(name)
    fn = sc.thm_3_1_scaling if label == "thm_3_1" else sc.thm_4_1_scaling
    return fn(spec, p, geometric_grid(*span), ctx.batch(f"scaling_d{spec.dim_in}", spec.dim_in))


def _sequence(ctx: Context, name: str, p: float):
    return sq.sequence_demo(sq.sequences()[name], ctx.batch("sequence_d2", 2), p)


def _constant_sequence(ctx: Context):
    return sq.constant_sequence_check(ctx.batch("sequence_d2", 2))


def _cor_3_5(ctx: Context, name: str, family: str, span: tuple, p: float, theta: float):
    return sc.cor_3_5_tv_kr(get_map(name), family, geometric_grid(*span), p, theta, ctx.batch("tvkr_d1", 1))


def _cor_4_5(ctx: Context):
    b = ctx.batch("tvkr_d2", 2)
    spec = get_map("x1sq_x2")
    return sc.cor_4_5_tv_kr(spec, geometric_grid(0.05, 1.0), 16.0, 0.45, b) + sc.saturation_check(spec, b)


def _forced_fail(ctx: Context):
    return ineq.forced_fail_check()


# --------------------------------------------------------------------------
# suites


def _identity_jobs() -> list[Job]:
    return [Job("exact", _exact)] + _ibp_jobs()


def _ibp_jobs() -> list[Job]:
    jobs = [Job(f"ibp_1d:{f}:{g}", _ibp_1d, {"f": f, "g": g}) for f, g in ids.IBP_1D_PAIRS]
    jobs += [Job(f"ibp_kd:{f}:{u}:{v}:{j}", _ibp_kd, {"f": f, "u": u, "v": v, "j": j})
             for f, u, v, j in ids.IBP_KD_TRIPLES]
    return jobs + [Job("ou_symmetry", _ou_symmetry)]


def _besov_jobs() -> list[Job]:
    jobs = [Job(f"besov_oracle:{d}", _besov_oracle, {"density": d}) for d in sc.BESOV_GRIDS]
    return jobs + [Job(f"besov_cor:{m}", _besov_corollary, {"name": m}) for m in BESOV_PAIRS]


def _scaling_jobs() -> list[Job]:
    return [Job(f"scaling:{lab}:{m}", _scaling, {"label": lab, "name": m, "p": p, "span": span})
            for lab, m, p, span in SCALING_CASES + VACUITY_CASES]


def _sequence_jobs() -> list[Job]:
    cases = (("x1_plus_sin_x2", 2.0), ("x1_plus_sin_x2_pair", 10.0), ("x1_over_n", 2.0), ("x1_over_n_pair", 10.0))
    jobs = [Job(f"sequence:{n}", _sequence, {"name": n, "p": p}) for n, p in cases]
    return jobs + [Job("sequence:constant", _constant_sequence)]


def _corollary_jobs() -> list[Job]:
    return [Job("cor_3_5:x1", _cor_3_5, {"name": "x1", "family": "shift", "span": (0.05, 1.0), "p": 2.0, "theta": 0.5}),
            Job("cor_3_5:x1sq", _cor_3_5,
                {"name": "x1sq", "family": "scale", "span": (0.1, 2.0), "p": 10.0, "theta": 0.9}),
            Job("cor_4_5:x1sq_x2", _cor_4_5)]


SUITES = {
    "identities": _identity_jobs,
    "ibp": _ibp_jobs,
    "ugamma": lambda: [Job("ugamma", _ugamma)],
    "lemma11": lambda: [Job("lemma11", _lemma11)],
    "distances": lambda: [Job("distances", _distances)],
    "thm21": lambda: [Job(f"thm21:{d}", _thm21, {"density": d}) for d in ("normal", "chi2_1", "uniform")],
    "lemma21": lambda: [Job("lemma21", _lemma21)],
    "besov": _besov_jobs,
    "scaling": _scaling_jobs,
    "sequences": _sequence_jobs,
    "corollaries": _corollary_jobs,
    "forced-fail": lambda: [Job("forced_fail", _forced_fail)],
}
# "all" is every suite except the deliberate failure fixture
ALL_SUITES = ("identities", "ugamma", "lemma11", "distances", "thm21", "lemma21", "besov", "scaling", "sequences",
              "corollaries")
SUITE_NAMES = tuple(SUITES) + ("all",)


def suite_jobs(name: str) -> list[Job]:
    if name == "all":
        return [job for s in ALL_SUITES for job in SUITES[s]()]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    return SUITES[name]()


def run_suite(name: str, ctx: Context, threads: int | None = None) -> list:
    return run_jobs(suite_jobs(name), ctx, threads)
