"""Self-verification registry: every module's invariants plus the exact
acceptance checks, as named pass/fail probes runnable from the CLI.

Each check is a function taking a RandomSource and returning (passed, detail).
Checks are deterministic given the seed; the registry order is fixed so the
verify command's output is stable byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable

import numpy as np

from . import adversaries, analysis, core, experiments, learners
from .core import (
    MINUS,
    PLUS,
    BiasVector,
    BudgetViolationError,
    Example,
    HypothesisClass,
    ProductBiasDistribution,
    RandomSource,
    Sample,
    ball_enumerate,
    bayes_loss,
    dist_tv,
    full_alphabet,
    hamming_distance,
    population_loss,
)
from .learners import ExpMechanismConfig, ExpMechanismLearner


def _random_class(gen, max_domain=10, max_size=64) -> HypothesisClass:
    n = int(gen.integers(1, max_domain + 1))
    want = int(gen.integers(1, min(max_size, 2 ** n) + 1))
    rows = {}
    while len(rows) < want:
        row = tuple(int(v) for v in gen.choice((-1, 1), size=n))
        rows[row] = None
    return HypothesisClass(list(rows))


def _random_sample(gen, domain_size: int, n: int) -> Sample:
    pts = gen.integers(0, domain_size, size=n)
    labs = gen.choice((-1, 1), size=n)
    return Sample(pts, labs)


# ---------------------------------------------------------------------------
# domain-core invariants


def check_atoms_sum(rng: RandomSource):
    gen = rng.generator()
    for _ in range(50):
        d = int(gen.integers(1, 7))
        coords = [Fraction(int(gen.integers(-8, 9)), 16) for _ in range(d)]
        dist = ProductBiasDistribution(BiasVector(coords))
        total = sum(w for _, w in dist.atoms())
        if total != 1:
            return False, f"atom mass {total} != 1 at u={coords}"
    return True, "atom masses sum to 1 exactly on 50 random exact biases"


def check_bayes_brute(rng: RandomSource):
    gen = rng.generator()
    worst = 0.0
    for _ in range(30):
        d = int(gen.integers(1, 9))
        coords = [float(gen.uniform(-0.5, 0.5)) for _ in range(d)]
        dist = ProductBiasDistribution(BiasVector(coords))
        best = min(population_loss(core.Hypothesis(list(signs)), dist)
                   for signs in iproduct((-1, 1), repeat=d))
        worst = max(worst, abs(float(best) - float(bayes_loss(dist))))
    ok = worst <= 1e-12
    return ok, f"max |bayes - brute min over 2^d| = {worst:.2e}"


def check_hamming_metric(rng: RandomSource):
    gen = rng.generator()
    for _ in range(100):
        d, n = int(gen.integers(1, 4)), int(gen.integers(1, 8))
        a, b, c = (_random_sample(gen, d, n) for _ in range(3))
        if hamming_distance(a, a) != 0:
            return False, "d(a,a) != 0"
        if hamming_distance(a, b) != hamming_distance(b, a):
            return False, "asymmetric"
        if hamming_distance(a, c) > hamming_distance(a, b) + hamming_distance(b, c):
            return False, "triangle inequality violated"
    return True, "identity, symmetry, triangle hold exactly on 100 random triples"


def _ball_reference(sample: Sample, k: int, alphabet) -> set:
    """Independent recursive ball generator (position-by-position)."""
    results = set()

    def recurse(i, changed, rows):
        if changed > k:
            return
        if i == len(sample):
            results.add(tuple(rows))
            return
        orig = sample.example(i)
        for a in alphabet:
            recurse(i + 1, changed + (a != orig), rows + [a])

    recurse(0, 0, [])
    return results


def check_ball_oracle(rng: RandomSource):
    gen = rng.generator()
    for _ in range(20):
        d, n = int(gen.integers(1, 3)), int(gen.integers(1, 5))
        s = _random_sample(gen, d, n)
        eta = float(gen.uniform(0.0, 0.9))
        alphabet = full_alphabet(d)
        ball = ball_enumerate(s, eta, alphabet, max_corruptions=None)
        got = {tuple(b.examples()) for b in ball}
        if len(got) != len(ball):
            return False, "duplicate samples in ball"
        want = _ball_reference(s, math.floor(eta * n), alphabet)
        if got != want:
            return False, f"ball mismatch at n={n}, eta={eta:.3f}"
        if ball[0] != s:
            return False, "ball does not start at the clean sample"
    return True, "matches recursive reference on 20 random balls (n <= 4)"


def check_draw_reproducible(rng: RandomSource):
    dist = ProductBiasDistribution(BiasVector([Fraction(1, 4), Fraction(-1, 8)]))
    a = core.draw_sample(dist, 64, rng.child("x"))
    b = core.draw_sample(dist, 64, rng.child("x"))
    c = core.draw_sample(dist, 64, rng.child("y"))
    if a != b:
        return False, "identical (seed, stream) produced different samples"
    if a == c:
        return False, "distinct streams produced identical samples"
    return True, "same stream bit-identical, distinct streams differ"


# ---------------------------------------------------------------------------
# learner invariants and exact acceptance checks


def _random_mechanism_instance(gen, max_domain=10, max_size=64, max_n=50):
    hclass = _random_class(gen, max_domain=max_domain, max_size=max_size)
    n = int(gen.integers(1, max_n + 1))
    sample = _random_sample(gen, hclass.domain_size, n)
    eta = float(gen.uniform(0.02, 0.9))
    return hclass, sample, ExpMechanismConfig(eta)


def check_dist_simplex(rng: RandomSource):
    gen = rng.generator()
    for _ in range(50):
        hclass, sample, config = _random_mechanism_instance(gen)
        p = learners.exp_mechanism_dist(hclass, sample, config)
        if p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
            return False, "not a probability vector"
        losses = learners.empirical_loss_counts(hclass, sample)
        order = np.argsort(losses, kind="stable")
        if np.any(np.diff(p[order]) > 1e-15):
            return False, "selection probability increases with loss"
    return True, "probability simplex and loss-monotonicity on 50 random instances"


def acceptance_exp_loss_guarantee(rng: RandomSource, instances: int = 200):
    """Exact mechanism guarantee: E[L_S] <= min_h L_S(h) + log(m)/t."""
    gen = rng.generator()
    worst = math.inf
    for _ in range(instances):
        hclass, sample, config = _random_mechanism_instance(gen)
        p = learners.exp_mechanism_dist(hclass, sample, config)
        losses = learners.empirical_losses(hclass, sample)
        expected = math.fsum(float(pi) * float(li) for pi, li in zip(p, losses))
        t = config.temperature(hclass.size)
        slack_term = math.log(hclass.size) / t if hclass.size > 1 else 0.0
        slack = float(min(losses)) + slack_term - expected
        worst = min(worst, slack)
    ok = worst >= -1e-12
    return ok, f"min slack over {instances} instances = {worst:.3e} (>= -1e-12 required)"


def _random_tiny_instance(gen):
    d = int(gen.integers(1, 3))
    want = int(gen.integers(1, 2 ** d + 1))
    rows = {}
    while len(rows) < want:
        rows[tuple(int(v) for v in gen.choice((-1, 1), size=d))] = None
    hclass = HypothesisClass(list(rows))
    n = int(gen.integers(2, 7))
    sample = _random_sample(gen, d, n)
    eta = float(gen.uniform(0.05, 0.5))
    return hclass, sample, ExpMechanismConfig(eta)


def acceptance_ratio_stability(rng: RandomSource, instances: int = 100):
    """Selection-probability ratio bound over full corruption balls, in log space."""
    gen = rng.generator()
    worst = 0.0
    for _ in range(instances):
        hclass, sample, config = _random_tiny_instance(gen)
        t = config.temperature(hclass.size)
        bound = 2.0 * t * float(config.eta)
        la = learners.exp_mechanism_log_dist(hclass, sample, config)
        for other in ball_enumerate(sample, config.eta, full_alphabet(hclass.domain_size)):
            lb = learners.exp_mechanism_log_dist(hclass, other, config)
            dev = float(np.max(np.abs(la - lb))) - bound
            worst = max(worst, dev)
    ok = worst <= 1e-9
    return ok, f"max log-ratio excursion past 2*t*eta = {worst:.3e} (<= 1e-9 required)"


def acceptance_flip_bound(rng: RandomSource, instances: int = 100):
    """Coupled prediction flip probability <= 4 sqrt(eta log m) over full balls."""
    gen = rng.generator()
    worst = -math.inf
    for _ in range(instances):
        hclass, sample, config = _random_tiny_instance(gen)
        bound = learners.flip_bound(config, hclass.size)
        for other in ball_enumerate(sample, config.eta, full_alphabet(hclass.domain_size)):
            for x in range(hclass.domain_size):
                flip = learners.flip_probability(hclass, sample, other, x, config)
                worst = max(worst, flip - bound)
    ok = worst <= 1e-12
    return ok, f"max flip excess over 4*t*eta = {worst:.3e} (<= 1e-12 required)"


def check_flip_chain(rng: RandomSource):
    """Flip <= 2(1 - exp(-2 t eta)) <= 4 t eta, the full chain."""
    gen = rng.generator()
    for _ in range(40):
        hclass, sample, config = _random_tiny_instance(gen)
        t = config.temperature(hclass.size)
        te = t * float(config.eta)
        mid = 2.0 * (1.0 - math.exp(-2.0 * te))
        if mid > 4.0 * te + 1e-12:
            return False, "middle bound exceeds 4*t*eta"
        for other in ball_enumerate(sample, config.eta, full_alphabet(hclass.domain_size)):
            for x in range(hclass.domain_size):
                flip = learners.flip_probability(hclass, sample, other, x, config)
                if flip > mid + 1e-12:
                    return False, f"flip {flip} exceeds 2(1-exp(-2 t eta)) = {mid}"
    return True, "flip <= 2(1-exp(-2*t*eta)) <= 4*t*eta on 40 random instances"


def check_subsample_law(rng: RandomSource):
    from itertools import combinations

    n1, k, draws = 6, 2, 6000
    counts = {c: 0 for c in combinations(range(n1), k)}
    gen = rng.generator()
    for _ in range(draws):
        subset = tuple(sorted(int(v) for v in gen.choice(n1, size=k, replace=False)))
        counts[subset] += 1
    total = math.comb(n1, k)
    expect = draws / total
    sigma = math.sqrt(draws * (1 / total) * (1 - 1 / total))
    worst = max(abs(c - expect) for c in counts.values())
    ok = worst <= 4.5 * sigma
    return ok, f"max |count - {expect:.0f}| = {worst:.0f} over {total} subsets (4.5 sigma = {4.5*sigma:.0f})"


def check_public_monotone(rng: RandomSource):
    gen = rng.generator()
    for _ in range(200):
        p1, p2 = sorted(gen.random(2))
        r = float(gen.random())
        s = Sample([0], [PLUS])
        lo = learners.public_transform(lambda *_: float(p1), s, 0, r)
        hi = learners.public_transform(lambda *_: float(p2), s, 0, r)
        if lo == PLUS and hi == MINUS:
            return False, "raising the oracle value flipped +1 to -1"
        r1, r2 = sorted(gen.random(2))
        a = learners.public_transform(lambda *_: float(p1), s, 0, float(r1))
        b = learners.public_transform(lambda *_: float(p1), s, 0, float(r2))
        if a == MINUS and b == PLUS:
            return False, "raising r flipped -1 to +1"
    return True, "monotone in oracle value and in r on 200 random quadruples"


# ---------------------------------------------------------------------------
# adversary invariants


def check_attack_membership(rng: RandomSource):
    gen = rng.generator()
    for _ in range(40):
        d, n = int(gen.integers(1, 3)), int(gen.integers(2, 7))
        s = _random_sample(gen, d, n)
        eta = float(gen.uniform(0.05, 0.6))
        budget = adversaries.AttackBudget(eta)
        target = Example(int(gen.integers(0, d)), int(gen.choice((-1, 1))))
        greedy = adversaries.greedy_flip_attack(s, target, budget)
        if hamming_distance(s, greedy) > Fraction(budget.max_corruptions(n), n):
            return False, "greedy attack left the budget ball"
        hclass = HypothesisClass.full(d)
        learner = ExpMechanismLearner(hclass, ExpMechanismConfig(eta))
        brute = adversaries.brute_force_attack(learner.prediction_prob, s, target, budget,
                                               full_alphabet(d))
        if hamming_distance(s, brute) > Fraction(budget.max_corruptions(n), n):
            return False, "brute-force attack left the budget ball"
    return True, "greedy and brute-force outputs stay within the ball (40 instances)"


def check_brute_dominates(rng: RandomSource):
    gen = rng.generator()
    for _ in range(25):
        d, n = int(gen.integers(1, 3)), int(gen.integers(2, 6))
        s = _random_sample(gen, d, n)
        eta = float(gen.uniform(0.1, 0.6))
        budget = adversaries.AttackBudget(eta)
        target = Example(int(gen.integers(0, d)), int(gen.choice((-1, 1))))
        hclass = HypothesisClass.full(d)
        learner = ExpMechanismLearner(hclass, ExpMechanismConfig(eta))

        def err(sample):
            p = learner.prediction_prob(sample, target.point)
            return 1.0 - p if target.label == PLUS else p

        brute = adversaries.brute_force_attack(learner.prediction_prob, s, target, budget,
                                               full_alphabet(d))
        greedy = adversaries.greedy_flip_attack(s, target, budget)
        if err(brute) < err(greedy) - 1e-12:
            return False, f"greedy beat brute force ({err(greedy)} > {err(brute)})"
    return True, "brute-force error >= greedy error on 25 tiny instances"


def check_scheme_budget(rng: RandomSource):
    for eta in (Fraction(1, 64), Fraction(1, 100), Fraction(1, 16)):
        scheme, hard = adversaries.build_scheme_1d(eta)
        moves = [abs(scheme.apply(y, u) - u) for u in scheme.grid() for y in (MINUS, PLUS)]
        if max(moves) != eta or min(moves) != eta:
            return False, f"grid moves are not exactly eta at eta={eta}"
        for u in (scheme.endpoint, -scheme.endpoint, Fraction(3, 7), scheme.eta):
            for y in (MINUS, PLUS):
                if scheme.apply(y, u) != u:
                    return False, f"off-grid point {u} moved"
    return True, "every grid move is exactly eta; off-grid points are fixed"


def check_hard_distribution(rng: RandomSource):
    for eta in (Fraction(1, 64), Fraction(1, 30), Fraction(1, 16)):
        scheme, hard = adversaries.build_scheme_1d(eta)
        if sum(hard.weights()) != 1:
            return False, "weights do not sum to 1"
        span = (2 * scheme.m + 1) ** 2 * eta
        if span > 1 or 4 * span < 1:
            return False, f"grid span violates [sqrt(eta)/2, sqrt(eta)] at eta={eta}"
        values = hard.values()
        if values != tuple(sorted(values)):
            return False, "atoms not in ascending order"
        if values[0] != -scheme.endpoint or values[-1] != scheme.endpoint:
            return False, "endpoints missing"
    return True, "mass 1, span within [sqrt(eta)/2, sqrt(eta)], endpoints present"


def check_coupling(rng: RandomSource):
    ua = BiasVector([Fraction(0)])
    ub = BiasVector([Fraction(1, 16)])
    da, db = ProductBiasDistribution(ua), ProductBiasDistribution(ub)
    tv = dist_tv(ua, ub)
    draws = 20_000
    agree = 0
    count_a_plus = 0
    count_b_plus = 0
    for t in range(draws):
        za, zb = adversaries.maximal_coupling_draw(da, db, rng.child("mc", t))
        agree += za == zb
        count_a_plus += za.label == PLUS
        count_b_plus += zb.label == PLUS
    sigma = math.sqrt(draws * float(tv) * (1 - float(tv)))
    if abs(agree - draws * (1 - float(tv))) > 4.5 * sigma:
        return False, f"agreement rate off: {agree}/{draws} vs 1-TV={1-float(tv)}"
    for count, dist in ((count_a_plus, da), (count_b_plus, db)):
        p = float(dist.atom_probability(0, PLUS))
        s = math.sqrt(draws * p * (1 - p))
        if abs(count - draws * p) > 4.5 * s:
            return False, "marginal +1 frequency off"
    za, zb = adversaries.maximal_coupling_draw(da, da, rng.child("same"))
    if za != zb:
        return False, "identical distributions must agree surely"
    return True, f"agreement within 4.5 sigma of 1-TV and exact marginals at {draws} draws"


# ---------------------------------------------------------------------------
# analysis invariants and exact acceptance checks


def acceptance_growth_bound(rng: RandomSource, classes: int = 50, subsets: int = 20):
    """Restriction sizes never exceed the binomial-sum growth bound."""
    gen = rng.generator()
    for _ in range(classes):
        hclass = _random_class(gen, max_domain=10, max_size=8)  # size <= 8 forces VC <= 3
        vc = analysis.vc_dimension(hclass)
        for _ in range(subsets):
            size = int(gen.integers(1, hclass.domain_size + 1))
            pts = tuple(sorted(set(int(p) for p in gen.integers(0, hclass.domain_size, size=size))))
            reps = analysis.restrict_dedupe(hclass, pts).representatives
            if reps.size > analysis.sauer_bound(len(pts), vc):
                return False, f"|H_X| = {reps.size} > bound at |X|={len(pts)}, vc={vc}"
    return True, f"{classes} classes x {subsets} subsets within the binomial-sum bound (exact)"


def check_vc_known(rng: RandomSource):
    single = HypothesisClass([[1, 1, 1]])
    if analysis.vc_dimension(single) != 0:
        return False, "singleton class must have VC dimension 0"
    consts = HypothesisClass([[1, 1, 1], [-1, -1, -1]])
    if analysis.vc_dimension(consts) != 1:
        return False, "two constants must have VC dimension 1"
    full = HypothesisClass.full(3)
    if analysis.vc_dimension(full) != 3:
        return False, "full class on 3 points must have VC dimension 3"
    return True, "singleton 0, two constants 1, full class N"


def check_cover_basics(rng: RandomSource):
    gen = rng.generator()
    for _ in range(20):
        hclass = _random_class(gen, max_domain=6, max_size=12)
        if analysis.cover_radius(hclass, hclass) != 0:
            return False, "self-cover radius must be 0"
        rows = hclass.values
        half = HypothesisClass(rows[: max(1, hclass.size // 2)])
        r_small = analysis.cover_radius(hclass, hclass)
        r_large = analysis.cover_radius(hclass, half)
        if r_large < r_small:
            return False, "shrinking the cover reduced the radius"
    return True, "self-cover 0; radius monotone under cover shrinking (20 classes, exact)"


def check_estimate_f_range(rng: RandomSource):
    hclass = HypothesisClass([[1], [-1]])
    learner = ExpMechanismLearner(hclass, ExpMechanismConfig(Fraction(1, 64)))
    u = BiasVector([Fraction(1, 8)])
    a = analysis.estimate_F(learner, u, 32, 400, rng.child("fa"))
    b = analysis.estimate_F(learner, u, 32, 400, rng.child("fa"))
    if a.values != b.values:
        return False, "estimate_F not reproducible for a fixed stream"
    if any(abs(v) > 0.5 for v in a.values):
        return False, "F estimate left [-1/2, 1/2]"
    return True, f"reproducible, F = {a.values[0]:+.4f} within range"


def check_oblivious_zero(rng: RandomSource):
    u = BiasVector([Fraction(1, 4), Fraction(-3, 8)])
    scheme = adversaries.identity_scheme(2)

    def bayes_f(i, ub):
        return (0.5 if ub.coords[i] > 0 else -0.5), 0.0

    value, err = analysis.oblivious_excess(bayes_f, u, scheme)
    ok = abs(value) <= 1e-15 and err == 0.0
    return ok, f"identity scheme + Bayes F gives excess {value:.2e}"


def check_stability_certificate(rng: RandomSource):
    gen = rng.generator()
    for _ in range(25):
        hclass, sample, config = _random_tiny_instance(gen)
        ball = ball_enumerate(sample, config.eta, full_alphabet(hclass.domain_size))
        other = ball[int(gen.integers(0, len(ball)))]
        report = analysis.stability_certificate(hclass, sample, other, config)
        if not (report.claim_ok and report.flip_ok):
            return False, "certificate failed on an in-ball pair"
    return True, "ratio and flip certificates hold on 25 random in-ball pairs"


# ---------------------------------------------------------------------------
# experiment invariants and exact acceptance checks


def check_budget_guard(rng: RandomSource):
    class Violator(adversaries.Adversary):
        name = "violator"

        def attack(self, sample, target, gen=None):
            return sample.replace_many(range(len(sample)),
                                       [Example(target.point, -target.label)] * len(sample))

    dist = ProductBiasDistribution(BiasVector([Fraction(1, 4)]))
    learner = ExpMechanismLearner(HypothesisClass.full(1), ExpMechanismConfig(Fraction(1, 8)))
    try:
        experiments.mc_adversarial_loss(learner, Violator(), dist, 8, Fraction(1, 8), 3,
                                        rng.child("guard"))
    except BudgetViolationError:
        return True, "oversized corruption raises BudgetViolationError"
    return False, "budget violation passed silently"


def check_mc_extremes(rng: RandomSource):
    dist = ProductBiasDistribution(BiasVector([Fraction(1, 2)]))
    wrong = learners.ConstantLearner(MINUS)
    est = experiments.mc_adversarial_loss(wrong, adversaries.IdentityAdversary(), dist,
                                          8, Fraction(1, 8), 50, rng.child("wrong"))
    if est.mean != 1.0:
        return False, f"constant-wrong learner at u=1/2 scored {est.mean} != 1"
    dist2 = ProductBiasDistribution(BiasVector([Fraction(1, 4), Fraction(-1, 8)]))
    oracle = learners.BayesLearner(dist2.bias.coords)
    est2 = experiments.mc_adversarial_loss(oracle, adversaries.IdentityAdversary(), dist2,
                                           8, Fraction(1, 8), 400, rng.child("bayes"))
    # scores are 0/1 over the test draw, so excess is 0 only in expectation
    margin = (est2.ci_high - est2.ci_low) / 2 / experiments.Z95 * 4.5
    if abs(est2.excess) > margin:
        return False, f"Bayes learner excess {est2.excess:.4f} outside 4.5 sigma ({margin:.4f})"
    return True, "constant-wrong at u=1/2 errs surely; Bayes excess within 4.5 sigma of 0"


def check_oracle_agreement(rng: RandomSource):
    eta = Fraction(1, 3)
    dist = ProductBiasDistribution(BiasVector([Fraction(1, 8)]))
    hclass = HypothesisClass.full(1)
    learner = ExpMechanismLearner(hclass, ExpMechanismConfig(eta))
    exact = experiments.exhaustive_adversarial_loss(learner.prediction_prob, dist, eta, 3)
    adversary = adversaries.BruteForceAdversary(learner.prediction_prob,
                                                adversaries.AttackBudget(eta), full_alphabet(1))
    est = experiments.mc_adversarial_loss(learner, adversary, dist, 3, eta, 4000,
                                          rng.child("agree"))
    half = est.ci_high - est.mean
    # 3 sigma ~ 1.53 * the 95% half-width
    ok = abs(est.mean - exact) <= 1.6 * half + 1e-9
    return ok, f"MC {est.mean:.5f} vs exact {exact:.5f} (95% half-width {half:.5f})"


def check_monotone_budget(rng: RandomSource):
    dist = ProductBiasDistribution(BiasVector([Fraction(1, 8)]))
    learner = ExpMechanismLearner(HypothesisClass.full(1), ExpMechanismConfig(Fraction(1, 4)))
    losses = [experiments.exhaustive_adversarial_loss(learner.prediction_prob, dist, eta, 4)
              for eta in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))]
    deltas = [b - a for a, b in zip(losses, losses[1:])]
    ok = all(delta >= -1e-12 for delta in deltas)
    return ok, f"losses {['%.4f' % l for l in losses]} nondecreasing in eta"


def acceptance_equivalence(rng: RandomSource = None, sizes=(2, 4, 8),
                           etas=(Fraction(1, 4), Fraction(1, 2)), grid_points: int = 11):
    """Sample-ball-at-2eta vs restricted oblivious-at-eta, exact, all cells."""
    worst = math.inf
    cells = 0
    for n in sizes:
        for eta in etas:
            for j in range(grid_points):
                u = Fraction(-1, 2) + Fraction(j, grid_points - 1)
                hclass = HypothesisClass.full(1)
                learner = ExpMechanismLearner(hclass, ExpMechanismConfig(eta))
                report = experiments.equivalence_check(learner.prediction_prob, u, eta, n)
                worst = min(worst, report.slack)
                cells += 1
                if not report.holds:
                    return False, f"violated at n={n}, eta={eta}, u={u}: slack {report.slack:.3e}"
    return True, f"holds in all {cells} cells; min slack {worst:.4f}"


def acceptance_public_domination(rng: RandomSource = None, sizes=(2, 4, 8),
                                 etas=(Fraction(1, 4), Fraction(1, 2)), grid_points: int = 11):
    """Public-coin thresholded risk never exceeds the private-coin risk, exactly."""
    worst = -math.inf
    cells = 0
    for n in sizes:
        for eta in etas:
            for j in range(grid_points):
                u = Fraction(-1, 2) + Fraction(j, grid_points - 1)
                dist = ProductBiasDistribution(BiasVector([u]))
                hclass = HypothesisClass.full(1)
                learner = ExpMechanismLearner(hclass, ExpMechanismConfig(eta))
                pub = experiments.exhaustive_public_loss(learner.prediction_prob, dist, eta, n)
                priv = experiments.exhaustive_adversarial_loss(learner.prediction_prob, dist, eta, n)
                worst = max(worst, pub - priv)
                cells += 1
                if pub > priv + 1e-9:
                    return False, f"public {pub} > private {priv} at n={n}, eta={eta}, u={u}"
    return True, f"public <= private in all {cells} cells; max gap {worst:.3e}"


def check_sweep_deterministic(rng: RandomSource):
    grid = experiments.SweepGrid(etas=(Fraction(1, 8),), dims=(1,), sizes=(16,),
                                 trials=40, seed=rng.seed)
    a = experiments.run_sweep(grid)
    b = experiments.run_sweep(grid)
    if [r.mean for r in a] != [r.mean for r in b]:
        return False, "same grid and seed produced different results"
    return True, "repeated sweep bit-identical"


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


REGISTRY: list[tuple[str, Callable]] = [
    ("core.atoms-sum", check_atoms_sum),
    ("core.bayes-brute", check_bayes_brute),
    ("core.hamming-metric", check_hamming_metric),
    ("core.ball-oracle", check_ball_oracle),
    ("core.draw-reproducible", check_draw_reproducible),
    ("learners.dist-simplex", check_dist_simplex),
    ("learners.mechanism-loss-guarantee", acceptance_exp_loss_guarantee),
    ("learners.ratio-stability", acceptance_ratio_stability),
    ("learners.flip-bound", acceptance_flip_bound),
    ("learners.flip-chain", check_flip_chain),
    ("learners.subsample-law", check_subsample_law),
    ("learners.public-monotone", check_public_monotone),
    ("adversaries.attack-membership", check_attack_membership),
    ("adversaries.brute-dominates", check_brute_dominates),
    ("adversaries.scheme-budget", check_scheme_budget),
    ("adversaries.hard-distribution", check_hard_distribution),
    ("adversaries.coupling", check_coupling),
    ("analysis.growth-bound", acceptance_growth_bound),
    ("analysis.vc-known", check_vc_known),
    ("analysis.cover-basics", check_cover_basics),
    ("analysis.estimate-f", check_estimate_f_range),
    ("analysis.oblivious-zero", check_oblivious_zero),
    ("analysis.stability-certificate", check_stability_certificate),
    ("experiments.budget-guard", check_budget_guard),
    ("experiments.mc-extremes", check_mc_extremes),
    ("experiments.oracle-agreement", check_oracle_agreement),
    ("experiments.monotone-budget", check_monotone_budget),
    ("experiments.equivalence", acceptance_equivalence),
    ("experiments.public-domination", acceptance_public_domination),
    ("experiments.sweep-deterministic", check_sweep_deterministic),
]


def run_checks(seed: int = 1729, names: list[str] | None = None,
               inject_fault: str | None = None) -> list[CheckResult]:
    """Run the registry (or a named subset) and collect results.

    `inject_fault` forces the named check to report failure; it exists so the
    failure-reporting path itself can be exercised end to end.
    """
    known = {name for name, _ in REGISTRY}
    if inject_fault is not None and inject_fault not in known:
        raise ValueError(f"unknown check {inject_fault!r}")
    if names is not None:
        missing = set(names) - known
        if missing:
            raise ValueError(f"unknown checks: {sorted(missing)}")
    results = []
    for name, fn in REGISTRY:
        if names is not None and name not in names:
            continue
        rng = RandomSource(seed, core.stable_stream_id("verify", name))
        passed, detail = fn(rng)
        if inject_fault == name:
            passed, detail = False, "injected fault"
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))
    return results
