"""Learning under instance-targeted data poisoning over finite domains.

Library plus CLI for simulating robust learners (exponential-mechanism
selection, coupled-threshold prediction, split-and-subsample VC learning)
against sample-targeted and oblivious grid-poisoning adversaries, with exact
desk-scale evaluators and a deterministic Monte Carlo harness.
"""

from .adversaries import (
    Adversary,
    AttackBudget,
    BruteForceAdversary,
    GreedyFlipAdversary,
    HardBiasDistribution,
    IdentityAdversary,
    PoisoningScheme1D,
    PoisoningSchemeD,
    brute_force_attack,
    build_scheme_1d,
    greedy_flip_attack,
    identity_scheme,
    lift_scheme,
    maximal_coupling_draw,
)
from .analysis import (
    FTable,
    RestrictionClass,
    StabilityReport,
    cover_radius,
    estimate_F,
    exact_f_value,
    oblivious_excess,
    restrict_dedupe,
    sauer_bound,
    sauer_bound_growth,
    stability_certificate,
    uniform_cover_bound,
    vc_dimension,
)
from .core import (
    MINUS,
    PLUS,
    BiasVector,
    BudgetViolationError,
    DimensionMismatchError,
    DomainMismatchError,
    EnumerationTooLargeError,
    Example,
    Hypothesis,
    HypothesisClass,
    PreconditionError,
    ProductBiasDistribution,
    RandomSource,
    Sample,
    ball_enumerate,
    bayes_loss,
    dist_tv,
    draw_sample,
    full_alphabet,
    hamming_distance,
    population_loss,
    sample_loss,
    stable_stream_id,
)
from .experiments import (
    ADVERSARY_IDS,
    LEARNER_IDS,
    CurveReport,
    EquivalenceReport,
    ExcessEstimate,
    LowerBoundReport,
    SweepCell,
    SweepGrid,
    UpperBoundReport,
    curve_threshold,
    equivalence_check,
    exhaustive_adversarial_loss,
    exhaustive_clean_loss,
    exhaustive_public_loss,
    learning_curve_experiment,
    lower_bound_experiment,
    lower_bound_threshold,
    make_adversary,
    make_learner,
    mc_adversarial_loss,
    run_cell,
    run_sweep,
    upper_bound_experiment,
    vc_excess_bound,
)
from .learners import (
    BayesLearner,
    ConstantLearner,
    CoupledExpMechanismLearner,
    ExpMechanismConfig,
    ExpMechanismLearner,
    Learner,
    MajorityVoteLearner,
    VcLearnerConfig,
    VcSubsampleLearner,
    coupled_predict,
    exp_mechanism_dist,
    exp_mechanism_log_dist,
    exp_mechanism_sample,
    flip_bound,
    flip_probability,
    predict_prob,
    public_transform,
)
from .verify import run_checks

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
