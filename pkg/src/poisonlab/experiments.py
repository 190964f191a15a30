"""Experiment harness: Monte Carlo adversarial risk, exact desk-scale
evaluators, bound-verification experiments, and deterministic parameter sweeps.

Scores are Rao-Blackwellized wherever the learner admits it: a trial records
the exact conditional error probability at the drawn test example rather than
a sampled 0/1 outcome, which shrinks confidence intervals at no cost in bias.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, NamedTuple, Sequence

from .core import (
    MINUS,
    PLUS,
    BiasVector,
    BudgetViolationError,
    EnumerationTooLargeError,
    HypothesisClass,
    PreconditionError,
    ProductBiasDistribution,
    RandomSource,
    Sample,
    Scalar,
    ball_enumerate,
    bayes_loss,
    draw_example,
    draw_sample_with,
    full_alphabet,
    hamming_distance,
    stable_stream_id,
)
from .learners import (
    BayesLearner,
    CoupledExpMechanismLearner,
    ExpMechanismConfig,
    ExpMechanismLearner,
    Learner,
    MajorityVoteLearner,
    VcLearnerConfig,
    VcSubsampleLearner,
)
from .adversaries import (
    Adversary,
    AttackBudget,
    BruteForceAdversary,
    GreedyFlipAdversary,
    IdentityAdversary,
    PoisoningSchemeD,
    build_scheme_1d,
    lift_scheme,
)
from .analysis import estimate_F, oblivious_excess

Z95 = 1.959963984540054


def normal_ci(values: Sequence[float], clip01: bool = True) -> tuple[float, float, float]:
    """Mean and normal-approximation 95% CI from per-trial scores."""
    t = len(values)
    mean = math.fsum(values) / t
    if t > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (t - 1)
        half = Z95 * math.sqrt(var / t)
    else:
        half = 0.0
    lo, hi = mean - half, mean + half
    if clip01:
        lo, hi = max(0.0, lo), min(1.0, hi)
    return mean, lo, hi


def wilson_ci(successes: int, trials: int) -> tuple[float, float, float]:
    """Wilson score 95% interval for a Bernoulli mean; stable near 0 and 1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    z2 = Z95 * Z95
    phat = successes / trials
    denom = 1 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = Z95 * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    # the score interval provably contains phat; widening repairs float rounding
    lo = min(phat, max(0.0, center - half))
    hi = max(phat, min(1.0, center + half))
    return phat, lo, hi


def score_ci(values: Sequence[float]) -> tuple[float, float, float]:
    """Wilson for genuinely 0/1 scores, normal approximation otherwise."""
    if all(v in (0.0, 1.0) for v in values):
        return wilson_ci(sum(int(v) for v in values), len(values))
    return normal_ci(values)


@dataclass(frozen=True)
class ExcessEstimate:
    """One Monte Carlo measurement of adversarial risk.

    `mean` and its CI refer to the adversarial error probability; `excess`
    subtracts the clean Bayes loss, with CI endpoints shifted accordingly.
    """

    mean: float
    ci_low: float
    ci_high: float
    bayes: float
    excess: float
    excess_ci_low: float
    excess_ci_high: float
    trials: int
    seed: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isnan(self.mean):
            assert self.ci_low <= self.mean <= self.ci_high
            assert self.excess_ci_low <= self.excess <= self.excess_ci_high


def _estimate_from_scores(scores: Sequence[float], bayes: float, trials: int,
                          seed: int, metadata: dict) -> ExcessEstimate:
    mean, lo, hi = score_ci(scores)
    return ExcessEstimate(mean=mean, ci_low=lo, ci_high=hi, bayes=bayes,
                          excess=mean - bayes, excess_ci_low=lo - bayes,
                          excess_ci_high=hi - bayes, trials=trials, seed=seed,
                          metadata=metadata)


def mc_adversarial_loss(learner: Learner, adversary: Adversary,
                        dist: ProductBiasDistribution, n: int, eta: Scalar,
                        trials: int, rng: RandomSource,
                        metadata: dict | None = None) -> ExcessEstimate:
    """Monte Carlo adversarial risk of the learner against the adversary.

    Each trial draws a clean sample and a test example, lets the adversary
    corrupt the sample knowing both, verifies the corruption stayed inside the
    eta-ball (a violation is a hard failure, not a warning), and scores the
    learner's conditional error probability at the test example.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    budget = Fraction(eta)
    bayes = float(bayes_loss(dist))
    scores: list[float] = []
    for t in range(trials):
        gen = rng.child("trial", t).generator()
        clean = draw_sample_with(dist, n, gen)
        target = draw_example(dist, gen)
        corrupted = adversary.attack(clean, target, gen)
        moved = hamming_distance(clean, corrupted)
        if moved > budget:
            raise BudgetViolationError(
                f"adversary {adversary.name} moved {moved} > eta={budget} on trial {t}")
        p = learner.prediction_prob(corrupted, target.point, gen)
        scores.append(1.0 - p if target.label == PLUS else float(p))
    meta = {"learner": learner.name, "adversary": adversary.name,
            "n": n, "eta": str(budget), "d": dist.dimension, "stream": rng.stream}
    meta.update(metadata or {})
    return _estimate_from_scores(scores, bayes, trials, rng.seed, meta)


# ---------------------------------------------------------------------------
# exact evaluators at desk scale

PredictionOracle = Callable[[Sample, int], float]


def _enumerate_samples(dist: ProductBiasDistribution, n: int, cap: int):
    """All atom sequences of length n with their product weights; zero-weight
    sequences are skipped."""
    atoms = dist.atoms()
    if len(atoms) ** n > cap:
        raise EnumerationTooLargeError(f"{len(atoms) ** n} samples exceed cap {cap}")
    for combo in product(atoms, repeat=n):
        weight = 1
        for _, prob in combo:
            weight = weight * prob
        if weight == 0:
            continue
        yield Sample.from_examples([ex for ex, _ in combo]), weight


def exhaustive_adversarial_loss(p_oracle: PredictionOracle, dist: ProductBiasDistribution,
                                eta: Scalar, n: int, cap: int = 100_000) -> float:
    """Exact adversarial risk for a private-coin learner given by its
    +1-probability oracle: expectation over every sample and test atom of the
    supremum of the error probability over the corruption ball."""
    alphabet = full_alphabet(dist.dimension)
    p_cache: dict[bytes, float] = {}

    def prob(s: Sample, x: int) -> float:
        key = s.key() + bytes([x])
        if key not in p_cache:
            p_cache[key] = float(p_oracle(s, x))
        return p_cache[key]

    acc = []
    for sample, w in _enumerate_samples(dist, n, cap):
        ball = ball_enumerate(sample, eta, alphabet, max_corruptions=None)
        for (example, q) in dist.atoms():
            worst = 0.0
            for corrupted in ball:
                p = prob(corrupted, example.point)
                err = 1.0 - p if example.label == PLUS else p
                if err > worst:
                    worst = err
            acc.append(float(w * q) * worst)
    return math.fsum(acc)


def exhaustive_public_loss(p_oracle: PredictionOracle, dist: ProductBiasDistribution,
                           eta: Scalar, n: int, cap: int = 100_000) -> float:
    """Exact adversarial risk of the thresholded public-coin learner.

    With the coin r public, the adversary corrupts after seeing r; the rule
    errs for some ball element iff r falls past the extremal +1-probability
    over the ball, so the inner expectation over r is a ball-extremum measure
    (1 - min p for a +1 target, max p for a -1 target).
    """
    alphabet = full_alphabet(dist.dimension)
    p_cache: dict[bytes, float] = {}

    def prob(s: Sample, x: int) -> float:
        key = s.key() + bytes([x])
        if key not in p_cache:
            p_cache[key] = float(p_oracle(s, x))
        return p_cache[key]

    acc = []
    for sample, w in _enumerate_samples(dist, n, cap):
        ball = ball_enumerate(sample, eta, alphabet, max_corruptions=None)
        for (example, q) in dist.atoms():
            probs = [prob(corrupted, example.point) for corrupted in ball]
            value = 1.0 - min(probs) if example.label == PLUS else max(probs)
            acc.append(float(w * q) * value)
    return math.fsum(acc)


def exhaustive_clean_loss(p_oracle: PredictionOracle, dist: ProductBiasDistribution,
                          n: int, cap: int = 100_000) -> float:
    """Exact clean risk (no corruption) of the learner's prediction law."""
    acc = []
    for sample, w in _enumerate_samples(dist, n, cap):
        for (example, q) in dist.atoms():
            p = float(p_oracle(sample, example.point))
            err = 1.0 - p if example.label == PLUS else p
            acc.append(float(w * q) * err)
    return math.fsum(acc)


# ---------------------------------------------------------------------------
# equivalence of the sample-ball and oblivious threat models


@dataclass(frozen=True)
class EquivalenceReport:
    u: Scalar
    eta: Fraction
    n: int
    left_loss: float
    guard: float
    right_restricted: float
    slack: float
    holds: bool


def equivalence_check(p_oracle: PredictionOracle, u: Scalar, eta: Scalar, n: int,
                      tol: float = 1e-9, cap: int = 100_000) -> EquivalenceReport:
    """Exact check that doubling the sample-ball budget dominates the
    oblivious model: L_{2 eta}(sample-ball) + exp(-n eta / 3) >= the oblivious
    loss restricted to grid-scheme outputs.

    Single-point domain. The left side enumerates every sample and its
    2-eta-ball exactly; the right side takes, per test label, the worst of
    the candidate biases {u, scheme(-1, u), scheme(+1, u)} (a subset of the
    eta-ball around u, so the restriction can only lower the right side).
    """
    eta = Fraction(eta)
    uf = Fraction(u)
    dist = ProductBiasDistribution(BiasVector([uf]))
    left = exhaustive_adversarial_loss(p_oracle, dist, 2 * eta, n, cap=cap)
    guard = math.exp(-n * float(eta) / 3.0)
    scheme, _ = build_scheme_1d(eta)
    candidates = {uf, Fraction(scheme.apply(MINUS, uf)), Fraction(scheme.apply(PLUS, uf))}

    def mean_error(bias: Fraction, y: int) -> float:
        shifted = ProductBiasDistribution(BiasVector([bias]))
        acc = []
        for sample, w in _enumerate_samples(shifted, n, cap):
            p = float(p_oracle(sample, 0))
            err = 1.0 - p if y == PLUS else p
            acc.append(float(w) * err)
        return math.fsum(acc)

    right_terms = []
    for y in (PLUS, MINUS):
        weight = float(Fraction(1, 2) + y * uf)
        worst = max(mean_error(c, y) for c in candidates)
        right_terms.append(weight * worst)
    right = math.fsum(right_terms)
    slack = left + guard - right
    return EquivalenceReport(u=uf, eta=eta, n=n, left_loss=left, guard=guard,
                             right_restricted=right, slack=slack, holds=slack >= -tol)


# ---------------------------------------------------------------------------
# rate thresholds


def lower_bound_threshold(eta: Scalar, d: int) -> float:
    """sqrt(d * eta) / 16, the guaranteed mean excess of grid poisoning."""
    return math.sqrt(float(eta) * d) / 16.0


def curve_threshold(eta: Scalar, d: int) -> float:
    """sqrt(d * eta) / 36, the per-bias recurring-excess threshold."""
    return math.sqrt(float(eta) * d) / 36.0


def vc_excess_bound(eta: Scalar, d: int) -> float:
    """36 sqrt(eta d) log(e / (eta d)), the poisoned excess rate of the
    split-and-subsample rule."""
    x = float(eta) * d
    if not 0 < x < 1:
        raise ValueError("eta * d must lie in (0, 1)")
    return 36.0 * math.sqrt(x) * math.log(math.e / x)


# ---------------------------------------------------------------------------
# lower bound experiment


@dataclass(frozen=True)
class LowerBoundReport:
    eta: Fraction
    dimension: int
    n: int
    trials_outer: int
    trials_f: int
    mean: float
    ci_low: float
    ci_high: float
    threshold: float
    passed: bool
    f_points: int
    seed: int


def lower_bound_experiment(learner: Learner, eta: Scalar, d: int, n: int,
                           trials_outer: int, trials_f: int, rng: RandomSource,
                           f_chunks: int = 16) -> LowerBoundReport:
    """Mean oblivious excess of the learner under lifted grid poisoning.

    Draws u from the product of hard distributions `trials_outer` times and
    evaluates the oblivious excess with F values estimated by `estimate_F`.
    The hard distribution has finite support, so each required (coordinate,
    shifted bias) pair is estimated once with `trials_f` trials and cached;
    the CI combines the outer sampling variance with the propagated standard
    errors of the cached estimates (the excess is linear in F).
    """
    eta = Fraction(eta)
    if not d * eta < 1:
        raise PreconditionError("requires eta < 1/d")
    inner, hard = build_scheme_1d(d * eta)
    scheme = lift_scheme(inner, d)
    threshold = lower_bound_threshold(eta, d)

    cache: dict[tuple, tuple[float, float]] = {}
    coef_acc: dict[tuple, float] = {}

    def f_oracle(i: int, shifted: BiasVector) -> tuple[float, float]:
        key = (i, shifted.key())
        if key not in cache:
            table = estimate_F(learner, shifted, n, trials_f,
                               rng.child("F", i, repr(key[1])), points=[i], chunks=f_chunks)
            cache[key] = (table.values[0], table.std_errors[0])
        return cache[key]

    excesses: list[float] = []
    for t in range(trials_outer):
        gen = rng.child("outer", t).generator()
        u = BiasVector([hard.sample(gen) for _ in range(d)])
        terms = []
        for i in range(d):
            for y in (PLUS, MINUS):
                shifted = scheme.apply(i, y, u)
                fv, _ = f_oracle(i, shifted)
                coef = float((Fraction(1, 2) + y * u.coords[i]) / d)
                terms.append(coef * (0.5 - y * fv))
                key = (i, shifted.key())
                coef_acc[key] = coef_acc.get(key, 0.0) + (-y) * coef
        excesses.append(math.fsum(terms) - float(bayes_loss(ProductBiasDistribution(u))))

    mean = math.fsum(excesses) / trials_outer
    outer_var = (math.fsum((v - mean) ** 2 for v in excesses) / (trials_outer - 1) / trials_outer
                 if trials_outer > 1 else 0.0)
    f_var = math.fsum((acc / trials_outer * cache[key][1]) ** 2
                      for key, acc in coef_acc.items())
    half = Z95 * math.sqrt(outer_var + f_var)
    return LowerBoundReport(
        eta=eta, dimension=d, n=n, trials_outer=trials_outer, trials_f=trials_f,
        mean=mean, ci_low=mean - half, ci_high=mean + half, threshold=threshold,
        passed=mean >= threshold - half, f_points=len(cache), seed=rng.seed)


# ---------------------------------------------------------------------------
# upper bound experiment


@dataclass(frozen=True)
class UpperBoundReport:
    eta: Fraction
    dimension: int
    n: int
    bound: float
    cells: tuple[tuple[BiasVector, ExcessEstimate], ...]
    max_excess: float
    max_excess_ci_high: float
    passed: bool


UPPER_BIAS_GRID = (Fraction(-1, 2), Fraction(-1, 4), Fraction(0), Fraction(1, 4), Fraction(1, 2))


def upper_bound_experiment(eta: Scalar, d: int, n: int, trials: int, rng: RandomSource,
                           adversary_id: str = "greedy",
                           bias_grid: Sequence[Scalar] = UPPER_BIAS_GRID) -> UpperBoundReport:
    """Poisoned excess of the split-and-subsample rule over a bias grid.

    The class is the full sign-pattern class on d points (VC dimension d);
    each grid point u = (v, ..., v) gets its own Monte Carlo run against the
    chosen adversary. Passes when every cell's excess CI upper end clears the
    rate bound 36 sqrt(eta d) log(e/(eta d)).
    """
    eta = Fraction(eta)
    hclass = HypothesisClass.full(d)
    config = VcLearnerConfig(eta, d)
    learner = VcSubsampleLearner(hclass, config)
    bound = vc_excess_bound(eta, d)
    cells = []
    for idx, v in enumerate(bias_grid):
        u = BiasVector([v] * d)
        dist = ProductBiasDistribution(u)
        adversary = make_adversary(adversary_id, eta, learner, d)
        est = mc_adversarial_loss(learner, adversary, dist, n, eta, trials,
                                  rng.child("bias", idx),
                                  metadata={"experiment": "upper-bound", "bias": str(v)})
        cells.append((u, est))
    max_excess = max(est.excess for _, est in cells)
    max_hi = max(est.excess_ci_high for _, est in cells)
    return UpperBoundReport(eta=eta, dimension=d, n=n, bound=bound, cells=tuple(cells),
                            max_excess=max_excess, max_excess_ci_high=max_hi,
                            passed=max_hi <= bound)


# ---------------------------------------------------------------------------
# learning curve experiment


@dataclass(frozen=True)
class CurveReport:
    u: BiasVector
    sizes: tuple[int, ...]
    excesses: tuple[float, ...]
    std_errors: tuple[float, ...]
    threshold: float
    fraction_at_least: float


def learning_curve_experiment(learner: Learner, u: BiasVector, scheme: PoisoningSchemeD,
                              sizes: Sequence[int], trials_f: int,
                              rng: RandomSource) -> CurveReport:
    """Oblivious excess at a fixed bias across sample sizes.

    F is re-estimated per size at the scheme's shifted points; the report
    records the fraction of sizes whose excess clears sqrt(d eta)/36, the
    quantity the recurring-excess argument tracks.
    """
    d = scheme.dimension
    overall_eta = scheme.inner.eta / d if scheme.inner.eta else Fraction(0)
    threshold = curve_threshold(overall_eta, d) if overall_eta else 0.0
    points: list[tuple[int, float, float]] = []
    for n in sizes:
        cache: dict[tuple, tuple[float, float]] = {}

        def f_oracle(i: int, shifted: BiasVector, _n=n) -> tuple[float, float]:
            key = (i, shifted.key())
            if key not in cache:
                table = estimate_F(learner, shifted, _n, trials_f,
                                   rng.child("curve", _n, i, repr(key[1])), points=[i])
                cache[key] = (table.values[0], table.std_errors[0])
            return cache[key]

        value, err = oblivious_excess(f_oracle, u, scheme)
        points.append((n, value, err))
    excesses = tuple(p[1] for p in points)
    return CurveReport(u=u, sizes=tuple(p[0] for p in points), excesses=excesses,
                       std_errors=tuple(p[2] for p in points), threshold=threshold,
                       fraction_at_least=sum(1 for e in excesses if e >= threshold) / len(points))


# ---------------------------------------------------------------------------
# sweeps

LEARNER_IDS = ("exp-mech", "coupled", "vc", "majority", "bayes")
ADVERSARY_IDS = ("identity", "greedy", "brute-force")


def make_learner(learner_id: str, hclass: HypothesisClass, eta: Fraction, n: int,
                 bias: Sequence[Scalar]) -> Learner:
    if learner_id == "exp-mech":
        return ExpMechanismLearner(hclass, ExpMechanismConfig(eta))
    if learner_id == "coupled":
        return CoupledExpMechanismLearner(hclass, ExpMechanismConfig(eta))
    if learner_id == "vc":
        return VcSubsampleLearner(hclass, VcLearnerConfig(eta, hclass.domain_size))
    if learner_id == "majority":
        return MajorityVoteLearner(min(n, math.ceil(1 / eta)))
    if learner_id == "bayes":
        return BayesLearner(bias)
    raise ValueError(f"unknown learner {learner_id!r}; known: {', '.join(LEARNER_IDS)}")


def make_adversary(adversary_id: str, eta: Fraction, learner: Learner, d: int) -> Adversary:
    if adversary_id == "identity":
        return IdentityAdversary()
    if adversary_id == "greedy":
        return GreedyFlipAdversary(AttackBudget(eta))
    if adversary_id == "brute-force":
        oracle = getattr(learner, "mean_prediction_prob", None)
        if oracle is None:
            raise PreconditionError(
                f"brute-force attack needs an averaged prediction oracle; "
                f"learner {learner.name!r} has none")
        return BruteForceAdversary(oracle, AttackBudget(eta), full_alphabet(d))
    raise ValueError(f"unknown adversary {adversary_id!r}; known: {', '.join(ADVERSARY_IDS)}")


class SweepCell(NamedTuple):
    eta: Fraction
    d: int
    n: int
    learner: str
    adversary: str


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian sweep description. Cell sample sizes come from `sizes` when
    given, else from the rule n = ceil(size_rule_c / eta)."""

    etas: tuple
    dims: tuple
    sizes: tuple | None = None
    size_rule_c: int = 4
    learners: tuple = ("exp-mech",)
    adversaries: tuple = ("greedy",)
    trials: int = 10_000
    seed: int = 1729
    bias: Fraction = Fraction(1, 4)

    def cells(self) -> list[SweepCell]:
        out = []
        for eta in self.etas:
            eta = Fraction(eta)
            ns = self.sizes if self.sizes else (math.ceil(self.size_rule_c / eta),)
            for d in self.dims:
                for n in ns:
                    for learner in self.learners:
                        for adversary in self.adversaries:
                            out.append(SweepCell(eta, int(d), int(n), learner, adversary))
        return out


def run_cell(grid: SweepGrid, cell: SweepCell) -> ExcessEstimate:
    """One sweep cell; stream id is a stable hash of the cell parameters, so
    results do not depend on execution order or worker count."""
    stream = stable_stream_id("sweep", str(cell.eta), cell.d, cell.n, cell.learner,
                              cell.adversary, grid.trials, str(grid.bias))
    rng = RandomSource(grid.seed, stream)
    meta = {"experiment": "sweep", "bias": str(grid.bias)}
    try:
        hclass = HypothesisClass.full(cell.d)
        bias = BiasVector([Fraction(grid.bias)] * cell.d)
        dist = ProductBiasDistribution(bias)
        learner = make_learner(cell.learner, hclass, cell.eta, cell.n, bias.coords)
        adversary = make_adversary(cell.adversary, cell.eta, learner, cell.d)
        return mc_adversarial_loss(learner, adversary, dist, cell.n, cell.eta,
                                   grid.trials, rng, metadata=meta)
    except (PreconditionError, EnumerationTooLargeError, ValueError) as exc:
        nan = float("nan")
        meta.update({"learner": cell.learner, "adversary": cell.adversary,
                     "n": cell.n, "eta": str(cell.eta), "d": cell.d,
                     "stream": stream, "error": f"{type(exc).__name__}: {exc}"})
        return ExcessEstimate(mean=nan, ci_low=nan, ci_high=nan, bayes=nan, excess=nan,
                              excess_ci_low=nan, excess_ci_high=nan, trials=0,
                              seed=grid.seed, metadata=meta)


def _run_cell_star(args: tuple[SweepGrid, SweepCell]) -> ExcessEstimate:
    return run_cell(*args)


def run_sweep(grid: SweepGrid, workers: int = 1) -> list[ExcessEstimate]:
    """Run every cell; output order is the canonical grid order regardless of
    scheduling, and per-cell streams make the values worker-count invariant."""
    cells = grid.cells()
    if workers <= 1:
        return [run_cell(grid, cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell_star, [(grid, cell) for cell in cells]))
