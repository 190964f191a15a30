"""Attackers: sample corruptions within a Hamming budget, and distribution-level
poisoning maps on bias vectors.

Sample-level attackers see the training sample and the test example (point and
true label) and may rewrite at most floor(eta * n) rows. Distribution-level
poisoning is represented by exact grid schemes: maps from a bias coordinate to
a nearby one, built on a grid of even multiples of eta so every application
moves a coordinate by exactly eta or not at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import (
    MINUS,
    PLUS,
    BiasVector,
    Example,
    PreconditionError,
    ProductBiasDistribution,
    RandomSource,
    Sample,
    Scalar,
    ball_enumerate,
)

Predictor = Callable[[Sample, int], float]


@dataclass(frozen=True)
class AttackBudget:
    """Normalized corruption budget eta in [0, 1)."""

    eta: Scalar

    def __post_init__(self):
        if not 0 <= self.eta < 1:
            raise ValueError("eta must lie in [0, 1)")

    def max_corruptions(self, n: int) -> int:
        return math.floor(self.eta * n)


def brute_force_attack(predictor: Predictor, sample: Sample, target: Example,
                       budget: AttackBudget, alphabet: Sequence[Example],
                       cap: int = 10_000_000, max_corruptions: int | None = 3) -> Sample:
    """Exact worst-case corruption: argmax of the learner's error probability
    at the target over the whole budget ball.

    `predictor(S', x)` must return the +1-prediction probability; the error
    probability at target (x, y) is then (1 - y * (2p - 1)) / 2. Ties keep the
    first maximizer in the ball's canonical enumeration order, so the clean
    sample itself wins when nothing strictly improves.
    """
    ball = ball_enumerate(sample, budget.eta, alphabet, cap=cap, max_corruptions=max_corruptions)
    best = sample
    best_err = -1.0
    for candidate in ball:
        p = predictor(candidate, target.point)
        err = 1.0 - p if target.label == PLUS else p
        if err > best_err:
            best = candidate
            best_err = err
    return best


def greedy_flip_attack(sample: Sample, target: Example, budget: AttackBudget,
                       alphabet: Sequence[Example] | None = None) -> Sample:
    """Heuristic corruption: rewrite rows to (target point, opposite label).

    Preference order: first examples already at the target point carrying the
    target's label, then arbitrary other rows; rows that already read
    (target point, opposite label) are never touched, so a fully poisoned
    sample is a fixed point. Ascending index within each phase keeps the
    attack deterministic.
    """
    n = len(sample)
    limit = budget.max_corruptions(n)
    if limit == 0:
        return sample
    x, y = target.point, target.label
    poisoned = Example(x, -y)
    if alphabet is not None and poisoned not in alphabet:
        raise ValueError("alphabet does not admit the poisoned example")
    at_target_with_y = np.flatnonzero((sample.points == x) & (sample.labels == y)).tolist()
    elsewhere = np.flatnonzero(sample.points != x).tolist()
    chosen = (at_target_with_y + elsewhere)[:limit]
    if not chosen:
        return sample
    return sample.replace_many(chosen, [poisoned] * len(chosen))


# ---------------------------------------------------------------------------
# grid poisoning schemes on bias coordinates


class PoisoningScheme1D:
    """Budget-eta map on a single bias coordinate, supported on the grid of
    even multiples {2i*eta : |i| <= m}.

    On the grid, a -1 test label pushes the coordinate up by eta and a +1
    label pushes it down (each poisons toward more mass on the wrong label);
    off the grid, including at the hard distribution's endpoints
    +-(2m+1)*eta, the map is the identity. All arithmetic is exact.
    """

    def __init__(self, eta: Fraction, m: int, requested_eta: Fraction):
        self.eta = Fraction(eta)
        self.m = int(m)
        self.requested_eta = Fraction(requested_eta)
        self.capped = self.eta != self.requested_eta
        if self.m < 1:
            raise ValueError("grid needs m >= 1")

    @property
    def endpoint(self) -> Fraction:
        return (2 * self.m + 1) * self.eta

    def grid(self) -> tuple[Fraction, ...]:
        return tuple(2 * i * self.eta for i in range(-self.m, self.m + 1))

    def apply(self, label: int, u: Scalar) -> Scalar:
        if label not in (MINUS, PLUS):
            raise ValueError("label must be -1 or +1")
        q = Fraction(u) / self.eta
        on_grid = q.denominator == 1 and q.numerator % 2 == 0 and abs(q.numerator) <= 2 * self.m
        if not on_grid:
            return u
        step = 1 if label == MINUS else -1
        return (q.numerator + step) * self.eta


class HardBiasDistribution:
    """Finitely supported law on bias coordinates: uniform on the scheme grid
    (total mass 1/2) plus the two endpoints +-(2m+1)*eta at mass 1/4 each."""

    def __init__(self, scheme: PoisoningScheme1D):
        grid_weight = Fraction(1, 2 * (2 * scheme.m + 1))
        atoms = [(-scheme.endpoint, Fraction(1, 4))]
        atoms += [(u, grid_weight) for u in scheme.grid()]
        atoms.append((scheme.endpoint, Fraction(1, 4)))
        self.atoms = tuple(atoms)
        assert sum(w for _, w in self.atoms) == 1

    def values(self) -> tuple[Fraction, ...]:
        return tuple(u for u, _ in self.atoms)

    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for _, w in self.atoms)

    def sample(self, gen: np.random.Generator) -> Fraction:
        """Inverse-CDF draw over the fixed ascending atom order."""
        r = gen.random()
        cum = Fraction(0)
        for u, w in self.atoms:
            cum += w
            if r < cum:
                return u
        return self.atoms[-1][0]


def build_scheme_1d(eta: Scalar) -> tuple[PoisoningScheme1D, HardBiasDistribution]:
    """Construct the 1-D grid scheme and its hard distribution at budget eta.

    Budgets above 1/16 are capped at 1/16 (the construction needs the grid
    span (2m+1)*eta to fit inside [sqrt(eta)/2, sqrt(eta)], which forces
    eta <= 1/16); the scheme records both budgets. m is the largest integer
    with (2m+1)^2 * eta <= 1.
    """
    requested = Fraction(eta)
    if requested <= 0:
        raise ValueError("eta must be positive")
    effective = min(requested, Fraction(1, 16))
    root = math.isqrt(math.floor(1 / effective))
    odd = root if root % 2 == 1 else root - 1
    m = (odd - 1) // 2
    while (2 * (m + 1) + 1) ** 2 * effective <= 1:
        m += 1
    while m >= 1 and (2 * m + 1) ** 2 * effective > 1:
        m -= 1
    if m < 1 or 4 * (2 * m + 1) ** 2 * effective < 1:
        raise AssertionError(f"no valid grid size for eta={effective}")  # unreachable for eta <= 1/16
    scheme = PoisoningScheme1D(effective, m, requested)
    return scheme, HardBiasDistribution(scheme)


class PoisoningSchemeD:
    """Coordinate lift of a 1-D scheme: poisoning test example (i, y) applies
    the inner map to coordinate i and leaves the rest untouched, so each
    application moves the bias vector by at most inner.eta / d in the
    normalized l1 metric."""

    def __init__(self, inner: PoisoningScheme1D, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        if inner.eta >= 1:
            raise PreconditionError("inner budget must be < 1")
        self.inner = inner
        self.dimension = dimension

    @property
    def eta(self) -> Fraction:
        """Overall budget per application: inner.eta / d."""
        return self.inner.eta / self.dimension

    def apply(self, i: int, label: int, u: BiasVector) -> BiasVector:
        if u.dimension != self.dimension:
            raise ValueError("bias vector dimension mismatch")
        if not 0 <= i < self.dimension:
            raise ValueError(f"coordinate {i} outside dimension {self.dimension}")
        return u.replace(i, self.inner.apply(label, u.coords[i]))


def lift_scheme(inner: PoisoningScheme1D, dimension: int) -> PoisoningSchemeD:
    return PoisoningSchemeD(inner, dimension)


class _IdentityInner:
    eta = Fraction(0)

    def apply(self, label: int, u: Scalar) -> Scalar:
        return u


def identity_scheme(dimension: int) -> PoisoningSchemeD:
    """Zero-budget scheme: every map is the identity."""
    return PoisoningSchemeD(_IdentityInner(), dimension)


def maximal_coupling_draw(dist_a: ProductBiasDistribution, dist_b: ProductBiasDistribution,
                          rng: RandomSource) -> tuple[Example, Example]:
    """One draw from a maximal coupling of two product bias distributions.

    A single shared uniform is inverted against the overlap measure
    min(p, q) first and the two excess measures past it, over the fixed
    canonical atom order. The draws agree with probability exactly 1 - TV and
    each marginal is exact.
    """
    if dist_a.dimension != dist_b.dimension:
        raise ValueError("distributions must share a domain")
    atoms = [ex for ex, _ in dist_a.atoms()]
    p = [w for _, w in dist_a.atoms()]
    q = [w for _, w in dist_b.atoms()]
    overlap = [min(a, b) for a, b in zip(p, q)]
    total_overlap = sum(overlap)
    r = rng.generator().random()
    if r < total_overlap:
        cum = 0
        for ex, w in zip(atoms, overlap):
            cum += w
            if r < cum:
                return ex, ex
        return atoms[-1], atoms[-1]

    def invert_excess(measure, v):
        cum = 0
        chosen = None
        for ex, w in zip(atoms, measure):
            cum += w
            if v < cum and w > 0:
                chosen = ex
                break
        if chosen is None:
            chosen = next(ex for ex, w in reversed(list(zip(atoms, measure))) if w > 0)
        return chosen

    v = r - total_overlap
    excess_a = [a - o for a, o in zip(p, overlap)]
    excess_b = [b - o for b, o in zip(q, overlap)]
    return invert_excess(excess_a, v), invert_excess(excess_b, v)


# ---------------------------------------------------------------------------
# adversary adapters used by the Monte Carlo harness


class Adversary:
    name = "adversary"

    def attack(self, sample: Sample, target: Example, gen: np.random.Generator) -> Sample:
        raise NotImplementedError


class IdentityAdversary(Adversary):
    name = "identity"

    def attack(self, sample: Sample, target: Example, gen=None) -> Sample:
        return sample


class GreedyFlipAdversary(Adversary):
    name = "greedy"

    def __init__(self, budget: AttackBudget):
        self.budget = budget

    def attack(self, sample: Sample, target: Example, gen=None) -> Sample:
        return greedy_flip_attack(sample, target, self.budget)


class BruteForceAdversary(Adversary):
    name = "brute-force"

    def __init__(self, predictor: Predictor, budget: AttackBudget, alphabet: Sequence[Example],
                 cap: int = 10_000_000, max_corruptions: int | None = 3):
        self.predictor = predictor
        self.budget = budget
        self.alphabet = list(alphabet)
        self.cap = cap
        self.max_corruptions = max_corruptions

    def attack(self, sample: Sample, target: Example, gen=None) -> Sample:
        return brute_force_attack(self.predictor, sample, target, self.budget,
                                  self.alphabet, cap=self.cap,
                                  max_corruptions=self.max_corruptions)
