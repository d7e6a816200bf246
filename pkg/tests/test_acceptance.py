"""Acceptance suite: one verdict line per criterion, tolerances pinned below."""

import dataclasses
import math
from statistics import NormalDist

import numpy as np
import pytest

from gpricing.core import LatticeModel, Payoff, TimeGrid
from gpricing.drivers import (
    make_abs_z,
    make_black_scholes,
    make_borrowing,
    make_constant,
    make_discount,
    make_gmu,
    make_short_premium,
    make_zero,
)
from gpricing.market import ChainSpec, QuoteSet, ScanConfig, scan, synthesize_quotes
from gpricing.pde import cross_check
from gpricing.properties import (
    CaseGenerator,
    case_tolerance,
    check_cash_translatability,
    check_component_independence,
    check_consistency,
    check_convexity,
    check_domination,
    check_monotonicity,
    check_positive_homogeneity,
    check_self_financing,
    check_subadditivity,
    check_terminal_identity,
    check_zero_interest,
    check_zero_one_law,
)
from gpricing.recovery import mechanism_from_driver, recover_by_representation, recover_surface
from gpricing.solver import DEFAULT_CONFIG, solve_bsde

PICARD_TOL = DEFAULT_CONFIG.picard_tol

# criterion 1
BS_PRICE_TOL = 0.05
LADDER = (250, 500, 1000, 2000)
HALVING_BAND = (2 * 0.7, 2 * 1.3)
# criterion 2
LINEAR_TOL = 1e-10
TOY_TOL = 10 * PICARD_TOL
# criteria 3 and 4
AXIOM_CASES = 100
DOMINATION_CASES = 200
DOMINATION_MU = 25.0
# criterion 6
SURFACE_TOL = 1e-3
RATE_REL_TOL = 0.02
# criterion 7
PDE_CLOSED_TOL = 0.02
PDE_NONLINEAR_TOL = 0.1
# criterion 8
SCAN_MU = 25.0

S0, K, R, SIGMA, T = 100.0, 100.0, 0.05, 0.2, 1.0


def bs_call(s, k, r, sigma, tau):
    n = NormalDist()
    d1 = (math.log(s / k) + (r + sigma**2 / 2) * tau) / (sigma * math.sqrt(tau))
    return s * n.cdf(d1) - k * math.exp(-r * tau) * n.cdf(d1 - sigma * math.sqrt(tau))


def builtins(dim_z):
    out = [make_gmu(2.0, dim_z), make_abs_z(1.5, dim_z), make_discount(0.05, dim_z), make_constant(1.0, dim_z), make_zero(dim_z)]
    if dim_z == 1:
        out += [
            make_black_scholes(0.05, 0.08, 0.2),
            make_borrowing(0.03, 0.08, 0.06, 0.25),
            make_short_premium(0.02, 0.05, 0.3, 0.5),
        ]
    return out


def summarize(reports):
    bad = [r for r in reports if not r.consistent or r.verdict == "fail"]
    worst = max((r.max_gap / r.tolerance if r.tolerance else r.max_gap for r in reports if r.records), default=0.0)
    return not bad, bad, worst


def test_criterion_1_black_scholes_oracle(acceptance_log):
    exact = bs_call(S0, K, R, SIGMA, T)
    drv = make_black_scholes(R, R, SIGMA)
    errs = []
    for n in LADDER:
        m = LatticeModel.create(TimeGrid(0.0, T, n), S0, SIGMA, R)
        errs.append(abs(solve_bsde(m, drv, Payoff.call(K, T)).root_price - exact))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    accurate = errs[-1] <= BS_PRICE_TOL
    halving = all(HALVING_BAND[0] <= q <= HALVING_BAND[1] for q in ratios)
    acceptance_log(
        1,
        "Black-Scholes oracle",
        accurate and halving,
        f"|err(2000)|={errs[-1]:.2e} (tol {BS_PRICE_TOL}); errors {', '.join(f'{e:.2e}' for e in errs)}; "
        f"ratios {', '.join(f'{q:.2f}' for q in ratios)} (band {HALVING_BAND[0]:.1f}-{HALVING_BAND[1]:.1f})",
    )
    assert accurate
    assert halving, f"error ratios {ratios} outside {HALVING_BAND}"


def test_criterion_2_exact_identities(acceptance_log):
    worst_lin = 0.0
    for n in (1, 10, 100):
        m = LatticeModel.create(TimeGrid(0.0, 1.0, n))
        got = solve_bsde(m, make_discount(R), Payoff.constant(1.0, 1.0)).root_price
        worst_lin = max(worst_lin, abs(got - (1 + R / n) ** (-n)))
    worst_toy = 0.0
    for n, zbar, mu in [(6, 2.0, 3.0), (40, -1.5, 3.0), (17, 0.7, 5.0)]:
        m = LatticeModel.create(TimeGrid(0.0, 1.0, n))
        got = solve_bsde(m, make_abs_z(mu), Payoff.linear_in_b(zbar, 1.0)).root_price
        worst_toy = max(worst_toy, abs(got - mu * abs(zbar) * 1.0))
    gen = CaseGenerator(count=20)
    y_free = [make_abs_z(2.0), make_zero(), make_constant(1.0), make_black_scholes(0.0, 0.04, 0.2), make_short_premium(0.0, 0.03, 0.2, 0.5)]
    cash = [check_cash_translatability(d, gen) for d in y_free]
    cash_ok = all(r.verdict == "pass" for r in cash)
    ok = worst_lin <= LINEAR_TOL and worst_toy <= TOY_TOL and cash_ok
    acceptance_log(
        2,
        "exact discrete identities",
        ok,
        f"(a) max |lin - (1+r dt)^-n| = {worst_lin:.1e}; (b) max toy gap = {worst_toy:.1e}; "
        f"(c) cash translatability {sum(r.verdict == 'pass' for r in cash)}/{len(cash)} y-free drivers",
    )
    assert ok


def test_criterion_3_axiom_suite(acceptance_log):
    gen = CaseGenerator(count=AXIOM_CASES, max_steps=12)
    reports = []
    for d in (1, 2):
        for drv in builtins(d):
            for chk in (check_monotonicity, check_terminal_identity, check_consistency, check_zero_one_law):
                reports.append((drv, chk(drv, gen)))
    ok, bad, worst = summarize([r for _, r in reports])
    skipped = sorted({f"{drv.name}/{r.property}" for drv, r in reports if r.verdict == "skip"})
    acceptance_log(
        3,
        "axioms A1-A4",
        ok,
        f"{len(reports)} reports x {AXIOM_CASES} cases; worst gap/tau={worst:.2e}; "
        f"failures={[r.property for r in bad]}; skipped (g(t,0,0)!=0): {skipped}",
    )
    assert ok


def test_criterion_4_domination(acceptance_log):
    gen = CaseGenerator(count=DOMINATION_CASES)
    reports = [check_domination(drv, DOMINATION_MU, gen) for d in (1, 2) for drv in builtins(d) if drv.mu <= DOMINATION_MU]
    ok, bad, worst = summarize(reports)
    gmu = make_gmu(DOMINATION_MU)
    rng = gen.rng("self-domination")
    self_gap = 0.0
    for _ in range(50):
        m = gen.lattice(rng, 1, DOMINATION_MU)
        x = gen.payoff(rng, m)
        zero = Payoff.constant(0.0, x.maturity)
        lhs = solve_bsde(m, gmu, x).root_price - solve_bsde(m, gmu, zero).root_price
        rhs = solve_bsde(m, gmu, x - zero).root_price
        self_gap = max(self_gap, abs(lhs - rhs) / case_tolerance(DEFAULT_CONFIG, max(abs(lhs), abs(rhs))))
    ok = ok and self_gap <= 1.0
    acceptance_log(
        4,
        "domination against g_mu, mu=25",
        ok,
        f"{len(reports)} drivers x {DOMINATION_CASES} pairs; worst gap/tau={worst:.2e}; "
        f"self-domination worst |gap|/tau={self_gap:.2e}",
    )
    assert ok


def test_criterion_5_equivalences(acceptance_log):
    gen = CaseGenerator(count=40)
    outcome = {}
    outcome["convexity(borrowing)"] = check_convexity(make_borrowing(0.03, 0.08, 0.06, 0.25), gen).verdict == "pass"
    outcome["homogeneity(g_mu)"] = check_positive_homogeneity(make_gmu(2.0), gen).verdict == "pass"
    outcome["subadditivity(g_mu)"] = check_subadditivity(make_gmu(2.0), gen).verdict == "pass"
    y_free = [d for d in builtins(1) + builtins(2) if not d.depends_on_y]
    outcome["cash(y-free)"] = all(check_cash_translatability(d, CaseGenerator(count=10)).verdict == "pass" for d in y_free)
    sf = {f"{d.name}/{d.dim_z}": check_self_financing(d, gen).verdict for d in builtins(1) + builtins(2)}
    outcome["self-financing"] = all(v == ("fail" if k.startswith("constant") else "pass") for k, v in sf.items())
    outcome["zero-interest"] = (
        check_zero_interest(make_abs_z(3.0)).verdict == "pass" and check_zero_interest(make_discount(0.05)).verdict == "fail"
    )
    zgen = CaseGenerator(count=40, min_steps=8, max_steps=8)
    outcome["component-independence"] = (
        check_component_independence(make_abs_z(1.0, 2, components=[0]), 1, zgen).verdict == "pass"
        and check_component_independence(make_abs_z(1.0, 2), 1, zgen).verdict == "fail"
    )
    ok = all(outcome.values())
    acceptance_log(5, "equivalence suite", ok, "; ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in outcome.items()))
    assert ok, outcome


def test_criterion_6_recovery(acceptance_log):
    samples = recover_surface(mechanism_from_driver(make_abs_z(3.0)), [-2, -1, 0, 1, 2], 0.0, 1.0)
    est = np.array([s.estimate for s in samples])
    surf_err = float(np.max(np.abs(est - [6, 3, 0, 3, 6])))
    rep = recover_by_representation(
        mechanism_from_driver(make_black_scholes(R, R, SIGMA)), 0.0, 1.0, 0.0,
        lambda x: np.zeros_like(x), lambda x: np.ones_like(x),
    )
    rel = abs(rep.estimate - (-R)) / R
    ok = surf_err <= SURFACE_TOL and rel <= RATE_REL_TOL
    acceptance_log(
        6,
        "recovery round trip",
        ok,
        f"surface {np.round(est, 6).tolist()} max err {surf_err:.1e}; representation {rep.estimate:.6f} vs -r, rel err {rel:.2%}",
    )
    assert ok


def test_criterion_7_pde(acceptance_log):
    lin_model = LatticeModel.create(TimeGrid(0.0, T, 2000), S0, SIGMA, R)
    lin = cross_check(lin_model, make_black_scholes(R, R, SIGMA), Payoff.call(K, T), 800)
    closed_err = abs(lin.pde_price - bs_call(S0, K, R, SIGMA, T))
    nl_model = LatticeModel.create(TimeGrid(0.0, T, 2000), S0, SIGMA, 0.0)
    nl = cross_check(nl_model, make_gmu(0.5), Payoff.put(K, T), 800, tolerance=PDE_NONLINEAR_TOL)
    ok = closed_err <= PDE_CLOSED_TOL and nl.gap <= PDE_NONLINEAR_TOL
    acceptance_log(
        7,
        "PDE cross-check",
        ok,
        f"linear PDE {lin.pde_price:.6f} err {closed_err:.1e} (tol {PDE_CLOSED_TOL}); "
        f"g_mu put lattice {nl.lattice_price:.5f} PDE {nl.pde_price:.5f} gap {nl.gap:.1e} (tol {PDE_NONLINEAR_TOL})",
    )
    assert ok


@pytest.mark.slow
def test_criterion_8_market_scan(acceptance_log):
    driver = make_black_scholes(R, R, SIGMA)
    chain = ChainSpec(tuple(float(k) for k in range(86, 118, 4)), (1, 30, 90), S0, SIGMA, steps=250)
    quotes = synthesize_quotes(driver, chain)
    cfg = ScanConfig(sigma_for_tree=SIGMA, mu=SCAN_MU, drift_for_tree=R, steps=250, jobs=4)
    clean = scan(quotes, cfg)
    short = clean.flagged_short_dated
    segregated = bool(short) and all(v.inequality.days < 2 for v in short) and all(
        v.short_dated for v in clean.verdicts if v.inequality.days < 2
    )
    recs = list(quotes.records)
    idx = next(i for i, q in enumerate(recs) if q.strike == 102 and q.option_type == "C" and q.expiry == max(r.expiry for r in recs))
    broken = dataclasses.replace(recs[idx], price=recs[idx].price + 3.0)
    recs[idx] = broken
    dirty = scan(QuoteSet(tuple(recs)), cfg)
    at_pair = [v for v in dirty.violations if v.inequality.expiry == broken.expiry and 102.0 in (v.inequality.strike_i, v.inequality.strike_j)]
    flagged = [f for f in dirty.flagged_monotonicity if f.expiry == broken.expiry and 102.0 in (f.strike_low, f.strike_high)]
    ok = (
        clean.total == 3 * 7 * 8 * 7
        and not clean.violations
        and not clean.unevaluated
        and segregated
        and bool(at_pair)
        and bool(flagged)
    )
    acceptance_log(
        8,
        "market scan soundness",
        ok,
        f"clean: {clean.total} inequalities, {len(clean.violations)} violations, {len(short)} short-dated segregated; "
        f"injected call(102) break: {len(dirty.violations)} violations ({len(at_pair)} at injected strike), "
        f"{len(flagged)} monotonicity flags",
    )
    assert ok
