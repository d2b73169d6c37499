"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

The lines are repeated in the terminal summary (see conftest.py).
"""

import itertools
import math

import numpy as np

from doubleirs.baselines import (
    NonCooperativePower,
    SingleIrsPower,
    asymptotic_gamma_baseline,
    gamma_dnc,
    gamma_sgl_pure_nlos,
    optimal_phases_dnc,
    optimal_phases_sgl,
    single_irs_scenario,
)
from doubleirs.cli import SweepSpec, run_sweep
from doubleirs.config import resolve_scenario
from doubleirs.montecarlo import McConfig, estimate_gamma_mc, verify_analytic
from doubleirs.optimize import (
    OptimizerConfig,
    closed_form_case1,
    closed_form_case2,
    closed_form_case3,
    run_optimizer,
)
from doubleirs.power import DoubleIrsPower, asymptotic_gamma_dirc, average_power
from doubleirs.scenario import ArraySpec, LinkFading, PhaseShifts, Regime

from helpers import SUBCASE_ZERO_K, random_scenario, random_single_scenario
from oracles import grid_maximize_batch, rounding_loss_bound


def normalized(cfg):
    """Same geometry and Rician factors with every large-scale power set to 1."""
    return cfg.replace(fading={link: LinkFading(1.0, f.k, f.regime) for link, f in cfg.fading.items()})


def split_scenario(total):
    a = ArraySpec.with_size(total // 2)
    return resolve_scenario({"arrays": {"1": [a.rows, a.cols], "2": [a.rows, a.cols]}})


def slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


def increasing(xs):
    return all(b > a for a, b in zip(xs, xs[1:]))


# ------------------------------------------------------------ criterion 1

MC_SIZES = ((2, 2), (4, 4), (4, 4))
SINGLE_MC_SIZES = ((2, 2), (4, 8))


def _formula_scenarios():
    """(name, system, scenario factory, analytic evaluator) per formula."""
    double = lambda zero_k=(), regime=Regime.FINITE: (lambda rng: random_scenario(rng, MC_SIZES, zero_k, regime))
    single = lambda regime: (lambda rng: random_single_scenario(rng, SINGLE_MC_SIZES, regime))
    coop = lambda cfg, ph: average_power(cfg, ph)
    nc = lambda cfg, ph: NonCooperativePower(cfg)(ph)
    sgl = lambda cfg, ph: SingleIrsPower(cfg)(ph)
    return [
        ("dirs_c case0", "dirs_c", double(SUBCASE_ZERO_K["case0"]), coop),
        ("dirs_c case1", "dirs_c", double(SUBCASE_ZERO_K["case1"]), coop),
        ("dirs_c case2", "dirs_c", double(SUBCASE_ZERO_K["case2"]), coop),
        ("dirs_c case3", "dirs_c", double(), coop),
        ("dirs_c pure_los", "dirs_c", double(regime=Regime.PURE_LOS), coop),
        ("dirs_c pure_nlos", "dirs_c", double(regime=Regime.PURE_NLOS), coop),
        ("dirs_nc case0", "dirs_nc", double(("S1", "S2")), nc),
        ("dirs_nc case1", "dirs_nc", double(("2U",)), nc),
        ("dirs_nc case2", "dirs_nc", double(("1U",)), nc),
        ("dirs_nc case3", "dirs_nc", double(), nc),
        ("dirs_nc pure_los", "dirs_nc", double(regime=Regime.PURE_LOS), nc),
        ("dirs_nc pure_nlos", "dirs_nc", double(regime=Regime.PURE_NLOS), nc),
        ("sirs general", "sirs", single(Regime.FINITE), sgl),
        ("sirs pure_los", "sirs", single(Regime.PURE_LOS), sgl),
        ("sirs pure_nlos", "sirs", single(Regime.PURE_NLOS), sgl),
    ]


def test_criterion_1_analytic_matches_monte_carlo(acceptance):
    failures, worst, total = [], 0.0, 0
    for f_index, (name, system, make, analytic_fn) in enumerate(_formula_scenarios()):
        for s in range(5):
            rng = np.random.default_rng([1, f_index, s])
            cfg = make(rng)
            ph = PhaseShifts.random(cfg, rng)
            res = verify_analytic(analytic_fn(cfg, ph), cfg, ph, system, McConfig(num_samples=100_000, seed=1000 * f_index + s))
            total += 1
            if not res.exact:
                worst = max(worst, res.z)
            if not res.passed:
                # diagnostic only: an independent stream with 4x the samples
                again = verify_analytic(analytic_fn(cfg, ph), cfg, ph, system, McConfig(num_samples=400_000, seed=10**6 + s))
                failures.append(f"{name} #{s} z={res.z:.2f}; independent rerun at 4e5 samples gives z={again.z:.2f}")
    passed = not failures
    detail = f"{total - len(failures)}/{total} checks pass at 1e5 samples, largest z = {worst:.2f}"
    acceptance.record(1, "analytic vs Monte-Carlo", passed, detail, failures)
    assert passed, failures


# ------------------------------------------------------------ criterion 2

GRID_STEPS = 90
PAIR_SIZES = ((1, 2), (2, 1), (2, 2), (1, 3), (3, 1))


def _sizes_one(rng):
    """Sizes with the optimized IRS holding 2 to 4 elements."""
    return int(rng.integers(2, 5)), int(rng.integers(1, 5))


def _batch_double(model, irs=None, fixed=None):
    t1 = model.cfg.size("1")
    if irs is None:
        return lambda X: model.value_batch(np.exp(-1j * X[:, :t1]), np.exp(-1j * X[:, t1:]))
    W = np.exp(-1j * fixed)

    def f(X):
        V = np.exp(-1j * X)
        Wb = np.broadcast_to(W, (X.shape[0], W.size))
        return model.value_batch(V, Wb) if irs == 1 else model.value_batch(Wb, V)

    return f


def _sub_thm2(case, sub):
    def run(rng):
        t_opt, t_other = _sizes_one(rng)
        sizes = (t_opt, t_other) if case == 1 else (t_other, t_opt)
        cfg = random_scenario(rng, ((1, 2), (1, sizes[0]), (1, sizes[1])), SUBCASE_ZERO_K[sub])
        model = DoubleIrsPower(cfg)
        if case == 1:
            return closed_form_case1(model), _batch_double(model, 1, np.zeros(sizes[1]))
        return closed_form_case2(model), _batch_double(model, 2, np.zeros(sizes[0]))

    return run


def _sub_thm3(sub):
    def run(rng):
        t1, t2 = PAIR_SIZES[int(rng.integers(len(PAIR_SIZES)))]
        cfg = random_scenario(rng, ((1, 2), (1, t1), (1, t2)), SUBCASE_ZERO_K[sub])
        model = DoubleIrsPower(cfg)
        ph = closed_form_case3(model)
        return np.concatenate([ph.phi1, ph.phi2]), _batch_double(model)

    return run


def _sub_dnc(zero_k, method="closed_form", pair=False):
    def run(rng):
        if pair:
            t1, t2 = PAIR_SIZES[int(rng.integers(len(PAIR_SIZES)))]
        else:
            t_opt, t_other = _sizes_one(rng)
            t1, t2 = (t_opt, t_other) if "2U" in zero_k else (t_other, t_opt)
        cfg = random_scenario(rng, ((1, 2), (1, t1), (1, t2)), zero_k)
        model = NonCooperativePower(cfg)
        ph = optimal_phases_dnc(cfg, method=method)
        if pair:
            return np.concatenate([ph.phi1, ph.phi2]), _batch_double(model)
        if "2U" in zero_k:
            return ph.phi1, _batch_double(model, 1, ph.phi2)
        return ph.phi2, _batch_double(model, 2, ph.phi1)

    return run


def _sub_sgl(regime):
    def run(rng):
        cfg = random_single_scenario(rng, ((1, 2), (1, int(rng.integers(2, 5)))), regime=regime)
        model = SingleIrsPower(cfg)
        return optimal_phases_sgl(cfg).phi0, lambda X: model.value_batch(np.exp(-1j * X))

    return run


def _grid_check(run, seed):
    rng = np.random.default_rng(seed)
    x, f = run(rng)
    value = float(f(x[None, :])[0])
    best, _ = grid_maximize_batch(f, x.size, GRID_STEPS)
    bound = rounding_loss_bound(f, x, GRID_STEPS)
    tiny = 1e-10 * abs(value)
    ok = best - value <= bound + tiny and value - best <= bound + tiny
    return ok, (best - value) / max(bound, 1e-300)


def test_criterion_2_closed_forms_match_grid_search(acceptance):
    subcases = [
        ("cooperative case 1, 1U without LoS", _sub_thm2(1, "case1_k1u")),
        ("cooperative case 1, 12 without LoS", _sub_thm2(1, "case1_k12")),
        ("cooperative case 2, S2 without LoS", _sub_thm2(2, "case2_ks2")),
        ("cooperative case 2, 12 without LoS", _sub_thm2(2, "case2_k12")),
        ("cooperative case 3, S2/1U without LoS", _sub_thm3("case3_ks2_k1u")),
        ("cooperative case 3, 12/SU without LoS", _sub_thm3("case3_k12_ksu")),
        ("non-cooperative case 1", _sub_dnc(("2U",))),
        ("non-cooperative case 2", _sub_dnc(("1U",))),
        ("non-cooperative case 3, two-offset formula", _sub_dnc((), "closed_form", pair=True)),
        ("single IRS, general", _sub_sgl(Regime.FINITE)),
        ("single IRS, pure LoS", _sub_sgl(Regime.PURE_LOS)),
    ]
    notes, failed = [], []
    for k, (name, run) in enumerate(subcases):
        results = [_grid_check(run, [2, k, s]) for s in range(10)]
        ok = all(r[0] for r in results)
        worst = max(r[1] for r in results)
        notes.append(f"{'ok  ' if ok else 'FAIL'} {name}: max (grid best - closed form) / bound = {worst:.3g}")
        if not ok:
            failed.append(name)
    # the jointly optimal offsets, reported alongside the formula it replaces
    extra = [_grid_check(_sub_dnc((), "exact", pair=True), [2, 99, s]) for s in range(10)]
    notes.append(
        f"{'ok  ' if all(r[0] for r in extra) else 'FAIL'} non-cooperative case 3, exact offset optimizer "
        f"(supplementary): max ratio = {max(r[1] for r in extra):.3g}"
    )
    passed = not failed
    detail = f"{len(subcases) - len(failed)}/{len(subcases)} sub-cases within the grid bound at {GRID_STEPS} steps/axis"
    acceptance.record(2, "closed-form optimality vs exhaustive grid", passed, detail, notes)
    assert passed, failed


# ------------------------------------------------------------ criterion 3


def _sizes_small(rng):
    return (1, int(rng.integers(1, 9))), (1, int(rng.integers(1, 9)))


def test_criterion_3_coordinate_ascent(acceptance):
    notes, problems = [], []
    # monotone traces with a per-update ascent check
    for name, zero_k, regime in (
        ("single-IRS ascent (case 1)", ("2U",), Regime.FINITE),
        ("single-IRS ascent (case 2)", ("S1",), Regime.FINITE),
        ("joint ascent (case 3)", (), Regime.FINITE),
        ("block ascent (pure LoS)", (), Regime.PURE_LOS),
    ):
        worst_drop = 0.0
        for s in range(10):
            rng = np.random.default_rng([3, len(notes), s])
            s1, s2 = _sizes_small(rng)
            cfg = random_scenario(rng, ((2, 2), s1, s2), zero_k, regime)
            opt = OptimizerConfig(init_mode="random", seed=s, check_ascent=True, rel_tolerance=1e-12)
            try:
                trace = run_optimizer(cfg, opt, force_iterative=True)
            except AssertionError as exc:
                problems.append(f"{name} #{s}: {exc}")
                continue
            obj = np.array(trace.objectives)
            drop = float(np.max(obj[:-1] - obj[1:]) / np.max(np.abs(obj))) if obj.size > 1 else 0.0
            worst_drop = max(worst_drop, drop)
            if drop > 1e-10:
                problems.append(f"{name} #{s}: relative drop {drop:.2e}")
        notes.append(f"{name}: largest relative decrease between passes {worst_drop:.2e}")
    # iterative solvers from zeros against the closed forms
    worst_ratio = math.inf
    tight = OptimizerConfig(rel_tolerance=1e-12, max_iterations=10_000)
    for k, sub in enumerate(("case1_k12", "case1_k1u", "case2_ks2", "case2_k12", "case3_ks2_k1u", "case3_k12_ksu")):
        sub_worst = math.inf
        for s in range(10):
            rng = np.random.default_rng([3, 100, k, s])
            s1, s2 = _sizes_small(rng)
            cfg = random_scenario(rng, ((2, 2), s1, s2), SUBCASE_ZERO_K[sub])
            closed = run_optimizer(cfg).objective
            iterative = run_optimizer(cfg, tight, force_iterative=True).objective
            ratio = iterative / closed
            sub_worst = min(sub_worst, ratio)
            if ratio < 1 - 1e-6:
                problems.append(f"{sub} #{s}: ratio {ratio:.9f}")
        notes.append(f"from zeros, {sub}: worst iterative/closed-form ratio {sub_worst:.9f}")
        worst_ratio = min(worst_ratio, sub_worst)
    passed = not problems
    detail = f"ascent holds on all traces; worst iterative/closed-form ratio {worst_ratio:.9f}"
    if not passed:
        detail = f"{len(problems)} problem(s)"
    acceptance.record(3, "coordinate and block ascent", passed, detail, notes + problems)
    assert passed, problems


# ------------------------------------------------------------ criterion 4

SCALING_T = (64, 144, 256)


def test_criterion_4_scaling_laws(acceptance):
    coop, nc, sgl = [], [], []
    lead = {"coop": [], "nc": [], "nc_coupled": [], "sgl": []}
    for total in SCALING_T:
        cfg = normalized(split_scenario(total))
        coop.append(run_optimizer(cfg).objective)
        lead["coop"].append(asymptotic_gamma_dirc(cfg))
        nc.append(gamma_dnc(cfg, optimal_phases_dnc(cfg)))
        lead["nc"].append(asymptotic_gamma_baseline("dirs_nc", cfg))
        lead["nc_coupled"].append(asymptotic_gamma_baseline("dirs_nc", cfg, exact_coupling=True))
        scfg = single_irs_scenario(cfg, "pos1")
        sgl.append(SingleIrsPower(scfg)(optimal_phases_sgl(scfg)))
        lead["sgl"].append(asymptotic_gamma_baseline("sirs_pos1", scfg))
    rows = [
        ("cooperative double IRS", coop, lead["coop"], 4),
        ("non-cooperative double IRS", nc, lead["nc"], 2),
        ("single IRS", sgl, lead["sgl"], 2),
    ]
    notes, passed = [], True
    for name, values, leading, exponent in rows:
        gaps = [abs(v / l - 1) for v, l in zip(values, leading)]
        s = slope(SCALING_T, values)
        ok = decreasing(gaps) and abs(s - exponent) <= 0.3
        passed &= ok
        notes.append(
            f"{'ok  ' if ok else 'FAIL'} {name}: |gamma*/leading - 1| = "
            + ", ".join(f"{g:.4g}" for g in gaps)
            + f"; slope {s:.3f} (expected {exponent})"
        )
    gaps = [abs(v / l - 1) for v, l in zip(nc, lead["nc_coupled"])]
    notes.append(
        f"{'ok  ' if decreasing(gaps) else 'FAIL'} non-cooperative, cross term weighted by the BS correlation "
        "(supplementary): " + ", ".join(f"{g:.4g}" for g in gaps)
    )
    real = [split_scenario(t) for t in SCALING_T]
    real_coop = [run_optimizer(c).objective for c in real]
    notes.append(f"cooperative double IRS at the physical path losses (supplementary): slope {slope(SCALING_T, real_coop):.3f}")
    detail = "unit large-scale powers, T1 = T2 = T/2, T in {64, 144, 256}"
    acceptance.record(4, "scaling laws", passed, detail, notes)
    assert passed


# ------------------------------------------------------------ criterion 5


def test_criterion_5_reduction_identities(acceptance):
    worst_nc, worst_sgl = 0.0, 0.0
    for s in range(20):
        rng = np.random.default_rng([5, s])
        regime = (Regime.FINITE, Regime.PURE_LOS, Regime.PURE_NLOS)[s % 3]
        cfg = random_scenario(rng, ((2, 2), (2, 3), (3, 2)), regime=regime)
        ph = PhaseShifts.random(cfg, rng)
        no_link = cfg.with_fading(**{"12": LinkFading(0.0, 0.0, cfg.fading["12"].regime)})
        a, b = gamma_dnc(cfg, ph), average_power(no_link, ph)
        worst_nc = max(worst_nc, abs(a - b) / abs(b))

        nlos = random_scenario(rng, ((2, 2), (2, 3), (3, 2)), regime=Regime.PURE_NLOS)
        alpha = {link: nlos.fading[link].alpha for link in nlos.fading}
        product = alpha["S1"] * alpha["1U"]
        nlos = nlos.with_fading(**{"2U": LinkFading(product / alpha["S2"], 0.0, Regime.PURE_NLOS)})
        sgl = single_irs_scenario(nlos, "pos1")
        a = gamma_sgl_pure_nlos(sgl)
        b = gamma_dnc(nlos, PhaseShifts.zeros(nlos))
        worst_sgl = max(worst_sgl, abs(a - b) / abs(b))
    passed = worst_nc <= 1e-12 and worst_sgl <= 1e-12
    detail = f"non-cooperative vs inter-IRS power 0: max rel diff {worst_nc:.1e}; single vs double all-NLoS: {worst_sgl:.1e}"
    acceptance.record(5, "reduction identities", passed, detail)
    assert passed


# ------------------------------------------------------------ criterion 6

DESK = {"arrays": {"1": [6, 6], "2": [6, 6]}}
MIRRORED = {
    "links": {
        link: {"distance": d, "angles": {"aoa_h": 0.0, "aoa_v": 0.0, "aod_h": 0.0, "aod_v": 0.0}}
        for link, d in {"S1": 8.0, "2U": 8.0, "S2": 45.0, "1U": 45.0, "12": 40.0, "SU": 50.0}.items()
    }
}


def _table(rows):
    return {(r[1], r[2], r[3], r[4]): r[5] for r in rows}


def test_criterion_6_qualitative_trends(acceptance):
    opt, mc = OptimizerConfig(), McConfig(num_samples=10_000, seed=0)
    notes, verdicts = [], {}

    # (a) optimized vs random phases over transmit power
    points = (-5, 0, 5, 10, 15)
    spec = SweepSpec("P_S", points, designs=("optimized", "random"), metrics=("rate_mc",))
    t = _table(run_sweep(DESK, spec, opt, mc))
    margins = [t[(p, "dirs_c", "optimized", "rate_mc")] - t[(p, "dirs_c", "random", "rate_mc")] for p in points]
    verdicts["a"] = all(m > 0 for m in margins)
    notes.append(f"(a) optimized - random rate over P_S {points} dBm: " + ", ".join(f"{m:.3f}" for m in margins))

    # (b) cooperative vs non-cooperative over the total element count
    totals = (36, 72, 144)
    spec = SweepSpec("T_total", totals, systems=("dirs_c", "dirs_nc"), metrics=("rate_mc", "rate_bound"))
    t = _table(run_sweep({}, spec, opt, mc))
    gaps = [t[(n, "dirs_c", "optimized", "rate_mc")] - t[(n, "dirs_nc", "optimized", "rate_mc")] for n in totals]
    bound_gaps = [t[(n, "dirs_c", "optimized", "rate_bound")] - t[(n, "dirs_nc", "optimized", "rate_bound")] for n in totals]
    verdicts["b"] = all(g >= 0 for g in gaps) and increasing(gaps)
    notes.append(f"(b) cooperative - non-cooperative Monte-Carlo rate at T = {totals}: " + ", ".join(f"{g:.4f}" for g in gaps))
    notes.append("(b) same gap in the rate bound: " + ", ".join(f"{g:.4f}" for g in bound_gaps))

    # (c) mirrored deployment, T1 + T2 = 72
    splits = tuple(range(12, 61, 6))
    spec = SweepSpec("T1_split", splits, metrics=("rate_mc",), total=72)
    t = _table(run_sweep(MIRRORED, spec, opt, mc))
    rates = [t[(s, "dirs_c", "optimized", "rate_mc")] for s in splits]
    peak = splits[int(np.argmax(rates))]
    verdicts["c"] = peak == 36
    notes.append(f"(c) rate peaks at T1 = {peak} over T1 in {splits[0]}..{splits[-1]} (total 72)")

    # (d) Monte-Carlo rate vs its Jensen bound at the default deployment
    spec = SweepSpec("P_S", (5,), metrics=("rate_mc", "rate_bound"))
    t = _table(run_sweep(DESK, spec, opt, mc))
    diff = t[(5, "dirs_c", "optimized", "rate_bound")] - t[(5, "dirs_c", "optimized", "rate_mc")]
    verdicts["d"] = 0 <= diff < 0.15
    notes.append(f"(d) rate bound - Monte-Carlo rate = {diff:.4f} bit/s/Hz")

    passed = all(verdicts.values())
    detail = ", ".join(f"({k}) {'pass' if v else 'fail'}" for k, v in verdicts.items())
    acceptance.record(6, "qualitative trends at T1 = T2 = 36", passed, detail, notes)
    assert passed, verdicts


# ------------------------------------------------------------ criterion 7


def test_criterion_7_phase_invariance(acceptance):
    notes, passed = [], True
    for k, (name, zero_k, regime) in enumerate(
        (("case 0", SUBCASE_ZERO_K["case0"], Regime.FINITE), ("pure NLoS", (), Regime.PURE_NLOS))
    ):
        rng = np.random.default_rng([7, k])
        cfg = random_scenario(rng, MC_SIZES, zero_k, regime)
        draws = [PhaseShifts.random(cfg, rng) for _ in range(50)]
        values = {average_power(cfg, ph) for ph in draws}
        # common random numbers: every draw sees the same fading realizations
        mc = McConfig(num_samples=10_000, seed=77)
        ests = [estimate_gamma_mc(cfg, ph, "dirs_c", mc) for ph in draws]
        z = max(
            abs(a.mean - b.mean) / math.hypot(a.std_error, b.std_error) for a, b in itertools.combinations(ests, 2)
        )
        ok = len(values) == 1 and z <= 3.0
        passed &= ok
        notes.append(f"{'ok  ' if ok else 'FAIL'} {name}: {len(values)} distinct analytic value(s), max pairwise z = {z:.3f}")
    notes.append(
        "1225 pairs per regime: for 50 independent unbiased estimates the largest pairwise z exceeds 3 "
        "with probability about 0.63"
    )
    acceptance.record(7, "phase invariance", passed, "50 random phase draws per regime", notes)
    assert passed
