"""Shapley allocations of gradient-based importance.

``shapley_from_gradients`` distributes a total budget built from mixed second
moments of (dependency-aware) gradient components; the allocation satisfies
the efficiency, dummy and symmetry axioms exactly at the sample level.
``shapley_exact`` evaluates the classical subset-enumeration formula for an
arbitrary non-negative coalition value, used as the variance-based reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    DegenerateModelError,
    InvalidInputError,
    SizeLimitError,
)

EXACT_DIM_LIMIT = 20


@dataclass(frozen=True)
class ShapleyResult:
    effects: np.ndarray
    budget: float
    order: int = 2
    normalized: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.effects.shape[0]


def _with_normalization(effects: np.ndarray, budget: float, order: int) -> ShapleyResult:
    normalized = effects / budget if budget > 0.0 else None
    return ShapleyResult(effects, float(budget), order, normalized)


def normalize(result: ShapleyResult) -> ShapleyResult:
    """Divide effects by the total budget; zero budget is degenerate."""
    if result.budget <= 0.0:
        raise DegenerateModelError("total importance budget is zero")
    return _with_normalization(result.effects, result.budget, result.order)


def _gradient_moments(grads) -> np.ndarray:
    g = np.atleast_2d(np.asarray(grads, dtype=float))
    if g.ndim != 2 or g.shape[0] < 1:
        raise InvalidInputError("gradient samples must form a non-empty (n, d) array")
    return g


def shapley_from_gradients(grads) -> ShapleyResult:
    """Second-order allocation from gradient samples.

    Effect j is the mean squared j-th gradient component plus half the mean
    absolute mixed products with every other component; the budget sums the
    mean absolute products over unordered component pairs, so effects sum to
    the budget identically.
    """
    g = _gradient_moments(grads)
    n, d = g.shape
    a = np.abs(g).T @ np.abs(g) / n  # a[j, k] = mean |g_j g_k|; diagonal = mean g_j^2
    effects = np.diag(a) + 0.5 * (a.sum(axis=1) - np.diag(a))
    budget = float((a.sum() + np.trace(a)) / 2.0)
    return _with_normalization(effects, budget, 2)


def shapley_from_gradients_third_order(grads) -> ShapleyResult:
    """Second-order allocation plus third-order absolute interaction terms.

    Adds one third of the mean absolute triple products over component pairs
    excluding j.  With d = 2 it coincides with the second-order allocation.
    The budget is the sum of the effects (no separate closed display exists
    for the third-order total).
    """
    g = _gradient_moments(grads)
    n, d = g.shape
    base = shapley_from_gradients(g)
    effects = base.effects.copy()
    if d >= 3:
        ag = np.abs(g)
        for j in range(d):
            others = [k for k in range(d) if k != j]
            for k1, k2 in combinations(others, 2):
                effects[j] += np.mean(ag[:, j] * ag[:, k1] * ag[:, k2]) / 3.0
    budget = float(effects.sum())
    return _with_normalization(effects, budget, 3)


def shapley_exact(values, d: int) -> ShapleyResult:
    """Subset-enumeration Shapley allocation of a coalition value.

    ``values`` maps a frozenset of 0-based indices to a non-negative number
    with values(empty) = 0.  Enumeration is O(2^d) and guarded at d = 20.
    """
    if d < 1:
        raise InvalidInputError("d must be positive")
    if d > EXACT_DIM_LIMIT:
        raise SizeLimitError(f"subset enumeration is limited to d <= {EXACT_DIM_LIMIT}")

    cache: dict[int, float] = {}

    def eta(mask: int) -> float:
        if mask not in cache:
            members = frozenset(i for i in range(d) if mask >> i & 1)
            val = float(values(members))
            if val < 0.0:
                raise InvalidInputError("coalition values must be non-negative")
            cache[mask] = val
        return cache[mask]

    if abs(eta(0)) > 1e-12:
        raise InvalidInputError("the empty coalition must have zero value")

    effects = np.zeros(d)
    for j in range(d):
        others = [i for i in range(d) if i != j]
        for mask_rest in range(1 << (d - 1)):
            mask = 0
            size = 0
            for pos, i in enumerate(others):
                if mask_rest >> pos & 1:
                    mask |= 1 << i
                    size += 1
            gain = eta(mask | (1 << j)) - eta(mask)
            effects[j] += gain / math.comb(d - 1, size)
        effects[j] /= d
    budget = eta((1 << d) - 1)
    return _with_normalization(effects, budget, 2)


def bivariate_variance_value(rho: float):
    """Coalition value of the linear model of two unit-variance Gaussians with
    correlation rho: the variance explained by conditioning on the coalition."""
    if not -1.0 <= rho <= 1.0:
        raise InvalidInputError("rho must lie in [-1, 1]")
    table = {
        frozenset(): 0.0,
        frozenset({0}): 1.0,
        frozenset({1}): rho * rho,
        frozenset({0, 1}): 1.0,
    }
    return lambda members: table[frozenset(members)]
