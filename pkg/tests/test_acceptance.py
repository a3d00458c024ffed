"""Acceptance suite: one test per release criterion, each printing PASS lines.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines.  Shared heavy computations (the three optimal plans, the
baseline plans) are module-scoped fixtures that time themselves so the
runtime criteria stay attributable.
"""

import math
import time

import numpy as np
import pytest

from aseplan.ase_optimizer import (
    gain_derivative,
    gain_function,
    optimal_k_exact,
    optimal_k_lower_bound,
    optimal_user_fraction,
)
from aseplan.energy_planner import (
    BUILTIN_PROFILES,
    PlanningProblem,
    plan_baseline,
    plan_optimal,
    plan_suboptimal,
)
from aseplan.mc_sim import SimulationConfig, estimate_mean_rate
from aseplan.numerics import QuadratureSpec
from aseplan.rate_model import (
    d_k_rate_lb_dK,
    d_mean_rate_exact_dM,
    d_rate_lb_dM,
    mean_rate_exact,
    mean_rate_lower_bound,
)

PROFILES = ("macro", "micro", "pico")
GOLDEN_PAIRS = {"macro": (35, 6), "micro": (11, 3), "pico": (5, 2)}
TIGHT = QuadratureSpec(rel_tolerance=1e-11, abs_tolerance=1e-14)
R400 = math.sqrt(400 / math.pi)   # simulation window with 400 expected BSs


def _problem(name, t_target=10.0):
    return PlanningProblem(profile=BUILTIN_PROFILES[name], alpha=4.0,
                           t_target=t_target)


@pytest.fixture(scope="module")
def optimal_plans():
    t0 = time.monotonic()
    plans = {name: plan_optimal(_problem(name)) for name in PROFILES}
    return plans, time.monotonic() - t0


@pytest.fixture(scope="module")
def baseline_plans():
    return {name: {kind: plan_baseline(_problem(name), kind)
                   for kind in ("su_mimo", "single_antenna")}
            for name in PROFILES}


def test_criterion_1_optimal_loading_fraction():
    t0 = time.monotonic()
    sol = optimal_user_fraction(4.0, cache=False)
    elapsed = time.monotonic() - t0
    assert sol.u_star == pytest.approx(0.5913, abs=1e-3)
    assert sol.gapa == pytest.approx(0.8165, abs=1e-3)
    assert elapsed < 5.0
    print(f"\n[PASS] criterion 1: u*={sol.u_star:.4f} (0.5913 +- 1e-3), "
          f"GAPA={sol.gapa:.4f} (0.8165 +- 1e-3), {elapsed:.2f}s < 5s")


def test_criterion_2_optimal_k_agreement():
    t0 = time.monotonic()
    for m, expected in ((5, 3), (10, 6), (15, 9)):
        assert optimal_k_exact(m, 4.0) == expected
        assert optimal_k_lower_bound(m, 4.0) == expected
    memberships = {}
    for m in range(2, 17):
        k = optimal_k_exact(m, 4.0)
        assert k in {math.floor(0.5913 * m), math.ceil(0.5913 * m)}
        memberships[m] = k
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0
    print(f"\n[PASS] criterion 2: K*=3/6/9 at M=5/10/15 (both routes); "
          f"K*(M) stays at floor/ceil of 0.5913M for M=2..16 "
          f"({memberships}), {elapsed:.1f}s < 120s")


def test_criterion_3_planner_golden_numbers(optimal_plans):
    plans, elapsed = optimal_plans
    for name in PROFILES:
        sol = plans[name]
        assert (sol.m_star, sol.k_star) == GOLDEN_PAIRS[name], name
    assert elapsed < 300.0
    got = {n: (plans[n].m_star, plans[n].k_star) for n in PROFILES}
    print(f"\n[PASS] criterion 3: optimal plans {got} == {GOLDEN_PAIRS}, "
          f"{elapsed:.1f}s < 300s")


def test_criterion_4_suboptimal_quality(optimal_plans):
    plans, _ = optimal_plans
    gaps, iters = {}, {}
    for name in PROFILES:
        sub = plan_suboptimal(_problem(name))
        assert sub.converged
        assert sub.iterations < 5
        gap = sub.nec / plans[name].nec - 1.0
        assert gap <= 0.03
        gaps[name] = round(100 * gap, 2)
        iters[name] = sub.iterations
    print(f"\n[PASS] criterion 4: suboptimal NEC gaps {gaps}% (<= 3%), "
          f"alternations {iters} (< 5)")


def test_criterion_5_energy_saving_ratios(optimal_plans, baseline_plans):
    plans, _ = optimal_plans
    targets_first = {"macro": 50.0, "micro": 33.0, "pico": 14.0}
    targets_further = {"macro": 28.0, "micro": 27.0, "pico": 10.0}
    first, further = {}, {}
    for name in PROFILES:
        nec_sa = baseline_plans[name]["single_antenna"].nec
        nec_su = baseline_plans[name]["su_mimo"].nec
        nec_mu = plans[name].nec
        # both reduction stages are measured against the single-antenna NEC
        first[name] = 100.0 * (nec_sa - nec_su) / nec_sa
        further[name] = 100.0 * (nec_su - nec_mu) / nec_sa
        assert abs(first[name] - targets_first[name]) <= 5.0, name
        assert abs(further[name] - targets_further[name]) <= 5.0, name
    print(f"\n[PASS] criterion 5: single->SU savings "
          f"{ {k: round(v, 1) for k, v in first.items()} }% vs 50/33/14 (+-5), "
          f"further SU->MU { {k: round(v, 1) for k, v in further.items()} }% "
          f"vs 28/27/10 (+-5)")


def test_criterion_6_energy_efficiency_magnitudes(optimal_plans):
    plans, _ = optimal_plans
    targets = {"macro": 0.01, "micro": 0.02, "pico": 0.05}
    got = {}
    for name in PROFILES:
        ee = plans[name].energy_efficiency
        assert ee == pytest.approx(targets[name], rel=0.20), name
        got[name] = round(ee, 4)
    print(f"\n[PASS] criterion 6: peak EE {got} nats/s/Hz/W vs "
          f"0.01/0.02/0.05 (+-20%)")


def test_criterion_7_monte_carlo_matches_analytic():
    t0 = time.monotonic()
    zs = {}
    for m, k, seed in ((4, 2, 7), (8, 4, 7), (8, 7, 103), (12, 6, 104)):
        cfg = SimulationConfig(M=m, K=k, trials=100_000, seed=seed,
                               alpha=4.0, window_radius=R400)
        mean, se = estimate_mean_rate(cfg)
        exact = mean_rate_exact(m, k, 4.0)
        zs[(m, k)] = (mean - exact) / se
    elapsed = time.monotonic() - t0
    assert elapsed < 600.0
    report = "; ".join(f"({m},{k}): z={z:+.2f}" for (m, k), z in zs.items())
    outside = {mk: round(z, 2) for mk, z in zs.items() if abs(z) > 3.0}
    # honest-ZF rates sit above the analytic value by the model's neglected
    # beam correlation; the lift peaks at K = M-1 (~+2.5%, ~5 s.e. at 1e5
    # trials), so the (8,7) leg of this gate cannot pass with a faithful
    # simulator -- kept as specified rather than loosened
    assert not outside, (
        f"outside 3 s.e.: {outside} [{report}] -- the aggregate interferer "
        f"gain has variance ~3x Gamma(K,1) at K=M-1, lifting the true rate "
        f"~2.5% above the analytic approximation")
    print(f"\n[PASS] criterion 7: full-ZF 1e5-trial runs within 3 s.e. of the "
          f"analytic rate [{report}], {elapsed:.0f}s < 600s")


def test_criterion_8_invariance_properties():
    base = SimulationConfig(M=8, K=4, trials=30_000, seed=201,
                            window_radius=R400)
    m0, se0 = estimate_mean_rate(base)

    # transmit power never enters the SIR: identical draws => identical result
    boosted_same = SimulationConfig(M=8, K=4, trials=30_000, seed=201,
                                    window_radius=R400, transmit_power=10.0)
    assert estimate_mean_rate(boosted_same) == (m0, se0)
    # and an independent run at 10x power agrees statistically
    boosted = SimulationConfig(M=8, K=4, trials=30_000, seed=202,
                               window_radius=R400, transmit_power=10.0)
    m1, se1 = estimate_mean_rate(boosted)
    z_power = (m1 - m0) / math.hypot(se0, se1)
    assert abs(z_power) <= 3.0

    # density 4x with the window shrunk 2x (same expected BS count)
    dense = SimulationConfig(M=8, K=4, trials=30_000, seed=203, lambda_b=4.0,
                             window_radius=R400 / 2.0)
    m2, se2 = estimate_mean_rate(dense)
    z_density = (m2 - m0) / math.hypot(se0, se2)
    assert abs(z_density) <= 3.0

    # lower bound depends on (M, K) only through K/M, to machine precision
    dev = max(abs(mean_rate_lower_bound(4 * c, 2 * c, 4.0)
                  - mean_rate_lower_bound(4, 2, 4.0))
              for c in (2, 5, 12.5, 100))
    assert dev <= 1e-9
    print(f"\n[PASS] criterion 8: power invariance exact + z={z_power:+.2f}; "
          f"density invariance z={z_density:+.2f}; bound ratio-invariance "
          f"dev={dev:.1e} <= 1e-9")


def test_criterion_9_concavity_and_shape():
    # finite-difference Hessian of K * E_lb negative semidefinite on the grid;
    # the K/M-homogeneity makes the true second eigenvalue exactly zero, so
    # the surrogate gets O(h^2) slack on it
    def f(m, k):
        return k * mean_rate_lower_bound(m, k, 4.0)

    h = 0.1
    worst_ratio = -math.inf
    for m in range(4, 41, 4):
        for k in sorted({1, max(1, round(0.3 * m)), max(1, round(0.6 * m)),
                         m - 1}):
            fmm = (f(m + h, k) - 2 * f(m, k) + f(m - h, k)) / h ** 2
            fkk = (f(m, k + h) - 2 * f(m, k) + f(m, k - h)) / h ** 2
            fmk = (f(m + h, k + h) - f(m + h, k - h) - f(m - h, k + h)
                   + f(m - h, k - h)) / (4 * h * h)
            eig = np.linalg.eigvalsh(np.array([[fmm, fmk], [fmk, fkk]]))
            assert eig[0] < 0.0, (m, k)
            assert eig[1] <= 0.01 * abs(eig[0]) + 1e-9, (m, k, eig)
            worst_ratio = max(worst_ratio, eig[1] / abs(eig[0]))

    # the weighted exact rate is unimodal in K at fixed M
    vals = [k * mean_rate_exact(10, k, 4.0) for k in range(1, 11)]
    diffs = np.diff(vals)
    assert np.count_nonzero(np.diff(np.sign(diffs))) <= 1

    # ASE at the rounded optimal loading grows linearly in M
    u = optimal_user_fraction(4.0).u_star
    ms = np.arange(4, 41)
    ase = np.array([min(max(round(u * m), 1), m)
                    * mean_rate_exact(int(m), min(max(round(u * m), 1), m), 4.0)
                    for m in ms])
    corr = float(np.corrcoef(ms, ase)[0, 1])
    assert corr >= 0.999
    print(f"\n[PASS] criterion 9: Hessian NSD on the grid (worst eig ratio "
          f"{worst_ratio:.1e}); K*E[R] unimodal in K; linear-fit correlation "
          f"{corr:.6f} >= 0.999")


def test_criterion_10_derivatives_match_finite_differences():
    rng = np.random.default_rng(31415)
    checked = 0

    def fd(fun, x, h):
        return (fun(x + h) - fun(x - h)) / (2.0 * h)

    for _ in range(14):   # exact-rate antenna derivative
        m = float(rng.uniform(5.0, 30.0))
        k = int(rng.integers(1, 6))
        alpha = float(rng.choice([3.0, 4.0, 5.0]))
        got = d_mean_rate_exact_dM(m, k, alpha, TIGHT)
        ref = fd(lambda x: mean_rate_exact(x, k, alpha, TIGHT), m, 1e-4)
        assert got == pytest.approx(ref, rel=1e-4)
        checked += 1
    for _ in range(12):   # weighted-bound user derivative
        m = float(rng.uniform(4.0, 30.0))
        k = float(rng.uniform(0.5, 0.9 * m))
        alpha = float(rng.choice([3.0, 4.0, 5.0]))
        got = d_k_rate_lb_dK(m, k, alpha, TIGHT)
        ref = fd(lambda x: x * mean_rate_lower_bound(m, x, alpha, TIGHT), k, 1e-4)
        assert got == pytest.approx(ref, rel=1e-4)
        checked += 1
    for _ in range(12):   # bound antenna derivative
        m = float(rng.uniform(4.0, 30.0))
        k = float(rng.uniform(0.5, 0.8 * m))
        alpha = float(rng.choice([3.0, 4.0, 5.0]))
        got = d_rate_lb_dM(m, k, alpha, TIGHT)
        ref = fd(lambda x: mean_rate_lower_bound(x, k, alpha, TIGHT), m, 1e-4)
        assert got == pytest.approx(ref, rel=1e-4)
        checked += 1
    for _ in range(12):   # loading-gain slope
        u = float(rng.uniform(0.05, 0.95))
        alpha = float(rng.choice([3.0, 4.0, 5.0]))
        got = gain_derivative(u, alpha, TIGHT)
        ref = fd(lambda x: gain_function(x, alpha, TIGHT), u, 1e-5)
        assert got == pytest.approx(ref, rel=1e-4)
        checked += 1
    assert checked == 50
    print(f"\n[PASS] criterion 10: all {checked} randomized closed-form "
          f"derivatives match central differences to rel 1e-4")


def test_criterion_11_target_linearity():
    sols = {t: plan_optimal(_problem("pico", t_target=t)) for t in (1.0, 10.0, 100.0)}
    pair = (sols[1.0].m_star, sols[1.0].k_star)
    for t, sol in sols.items():
        assert (sol.m_star, sol.k_star) == pair
        assert sol.nec == pytest.approx(t * sols[1.0].nec, rel=1e-12)
    print(f"\n[PASS] criterion 11: (M*,K*)={pair} invariant for targets "
          f"1/10/100; NEC exactly proportional to the target")
