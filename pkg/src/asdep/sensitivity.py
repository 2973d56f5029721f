"""Sensitivity-functional subspaces and derivative-based index bounds.

The central object is the d x d second-moment matrix of per-input total
sensitivity functionals (the output change when one input is resampled).  Its
eigenvectors give directions that capture output variance; its diagonal holds
the non-normalized total Sobol' indices.  Three estimators are provided:

* ``total_covariance`` -- unbiased pick-freeze estimator from paired samples;
* ``total_covariance_derivative`` -- derivative-based form for independent
  inputs, using CDF kernels instead of conditional expectations;
* ``total_covariance_dependent`` -- derivative-based form for dependent
  inputs, routed through a dependency model's conditional transforms.

The module also computes classical derivative-based upper bounds on total
Sobol' indices together with the distribution-specific sharp constants.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dependency import GaussianDependency, assemble
from .distributions import GaussianLaw, IndependentLaw, InputLaw, RngStream
from .errors import InvalidInputError, NumericError
from .linalg import Spectrum, symmetrize
from .mc import accumulate_chunks


@dataclass(frozen=True)
class TotalCovEstimate:
    """Symmetric estimate of the total-sensitivity second-moment matrix."""

    matrix: np.ndarray
    kind: str
    n_model_evals: int
    se: np.ndarray | None = None


@dataclass(frozen=True)
class SensitivityScores:
    """Eigenvalue-weighted per-input scores of a sensitivity moment matrix."""

    theta: np.ndarray
    total_variance: float
    ratio: np.ndarray


@dataclass(frozen=True)
class BoundReport:
    """Per-input total indices with derivative-based upper bounds.

    ``ub`` is the universal CDF-kernel bound, ``uba`` its L1 counterpart, and
    ``c1`` the distribution-specific constant multiplying the plain L2
    derivative measure ``nu``.
    """

    s_t: np.ndarray
    s_t_se: np.ndarray
    s_first: np.ndarray
    s_first_se: np.ndarray
    ub: np.ndarray
    ub_se: np.ndarray
    uba: np.ndarray
    uba_se: np.ndarray
    nu: np.ndarray
    mu_star: np.ndarray
    c1: np.ndarray
    variance: float
    abs_deviation: float
    n_model_evals: int


def pick_freeze_deltas(f, xs, xs2) -> np.ndarray:
    """Per-sample vector of output changes when one coordinate is resampled.

    Entry (i, k) is f(X_i) - f(X_i with coordinate k replaced from the second
    sample).  Costs n (d + 1) model evaluations.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    xs2 = np.atleast_2d(np.asarray(xs2, dtype=float))
    if xs.shape != xs2.shape:
        raise InvalidInputError("paired samples must have identical shapes")
    n, d = xs.shape
    base = np.asarray(f(xs), dtype=float)
    deltas = np.empty((n, d))
    for k in range(d):
        sub = xs.copy()
        sub[:, k] = xs2[:, k]
        deltas[:, k] = base - np.asarray(f(sub), dtype=float)
    return deltas


def total_covariance(deltas) -> TotalCovEstimate:
    """Unbiased pick-freeze estimate: average outer products of the per-sample
    delta vectors with halved diagonal."""
    s = np.atleast_2d(np.asarray(deltas, dtype=float))
    n, d = s.shape
    if n < 2:
        raise InvalidInputError("need at least two samples")
    outer_mean = s.T @ s / n
    outer_sq_mean = (s * s).T @ (s * s) / n
    halving = np.where(np.eye(d, dtype=bool), 0.5, 1.0)
    matrix = symmetrize(outer_mean * halving)
    se = np.sqrt(np.maximum(outer_sq_mean - outer_mean**2, 0.0) / n) * halving
    return TotalCovEstimate(matrix, "pick-freeze-independent", n * (d + 1), se)


def _cdf_kernel_rows(law, xs, xs2, values_at, values_sub):
    """Shared CDF-kernel assembly for the derivative-based estimators.

    values_at[:, j] holds the coordinate-j derivative at the original point,
    values_sub[:, j] the derivative at the point with coordinate j resampled.
    Rows with a vanishing marginal density are rejected.
    """
    n, d = xs.shape
    F1 = np.empty((n, d))
    F2 = np.empty((n, d))
    p1 = np.empty((n, d))
    p2 = np.empty((n, d))
    for j in range(d):
        marg = law.marginal(j)
        F1[:, j] = marg.cdf(xs[:, j])
        F2[:, j] = marg.cdf(xs2[:, j])
        p1[:, j] = marg.pdf(xs[:, j])
        p2[:, j] = marg.pdf(xs2[:, j])
    ok = np.all((p1 > 0.0) & (p2 > 0.0), axis=1)
    if not np.any(ok):
        raise NumericError("all draws fell outside the support of a marginal")
    xs, xs2 = xs[ok], xs2[ok]
    F1, F2, p1, p2 = F1[ok], F2[ok], p1[ok], p2[ok]
    values_at, values_sub = values_at[ok], values_sub[ok]
    n = xs.shape[0]

    fmin = np.where(xs <= xs2, F1, F2)
    diag_terms = values_at * values_sub * (fmin - F1 * F2) / (p1 * p2)
    kappa = (F2 - (xs2 >= xs)) / p2
    t = values_sub * kappa

    sum_outer = t.T @ t
    sum_outer_sq = (t * t).T @ (t * t)
    np.fill_diagonal(sum_outer, diag_terms.sum(axis=0))
    np.fill_diagonal(sum_outer_sq, (diag_terms * diag_terms).sum(axis=0))
    mean = sum_outer / n
    se = np.sqrt(np.maximum(sum_outer_sq / n - mean**2, 0.0) / n)
    return symmetrize(mean), se, n


def total_covariance_derivative(
    gradfn,
    law: IndependentLaw,
    n: int,
    rng: RngStream = RngStream(0),
) -> TotalCovEstimate:
    """Derivative-based estimate for independent inputs.

    Diagonal entries pair the coordinate derivative at the original point with
    the derivative after resampling that coordinate, weighted by the
    min-CDF kernel; off-diagonals combine per-coordinate resampled derivatives
    through the signed CDF kernel.  Targets the same matrix as the
    pick-freeze estimator.
    """
    if not isinstance(law, IndependentLaw):
        raise InvalidInputError("this estimator requires independent inputs")
    if n < 2:
        raise InvalidInputError("need at least two samples")
    d = law.dim
    xs = law.sample(n, rng.child(0))
    xs2 = law.sample(n, rng.child(1))

    grads_at = np.asarray(gradfn(xs), dtype=float)
    values_sub = np.empty((n, d))
    for j in range(d):
        sub = xs.copy()
        sub[:, j] = xs2[:, j]
        values_sub[:, j] = np.asarray(gradfn(sub), dtype=float)[:, j]
    mean, se, kept = _cdf_kernel_rows(law, xs, xs2, grads_at, values_sub)
    return TotalCovEstimate(mean, "derivative-independent", kept * (d + 1), se)


def total_covariance_dependent(
    gradfn,
    dep: GaussianDependency,
    n: int,
    rng: RngStream = RngStream(0),
) -> TotalCovEstimate:
    """Derivative-based estimate for dependent inputs.

    Each joint draw X yields, per coordinate j, the noise vector of the
    dependency model; the coordinate is then resampled from its marginal while
    the noise is held fixed, and coordinate derivatives are taken through the
    dependency map (Jacobian-weighted full gradients).  One joint draw is
    shared by all coordinates of a sample; the resampled coordinates are drawn
    independently of each other, as the kernel factorization requires.
    """
    if n < 2:
        raise InvalidInputError("need at least two samples")
    d = dep.dim
    law = dep.law()
    xs = law.sample(n, rng.child(0))
    gen = rng.child(1).generator()
    xs2 = np.column_stack(
        [law.marginal(j).sample(n, gen) for j in range(d)]
    )

    grads_at = np.asarray(gradfn(xs), dtype=float) @ dep.jacobian
    values_sub = np.empty((n, d))
    for j in range(d):
        z = dep.inverse_transform(j, xs)
        rest = dep.conditional_transform(j, xs2[:, j], z)
        pts = assemble(j, xs2[:, j], rest)
        values_sub[:, j] = np.asarray(gradfn(pts), dtype=float) @ dep.jacobian[:, j]
    mean, se, kept = _cdf_kernel_rows(law, xs, xs2, grads_at, values_sub)
    return TotalCovEstimate(mean, "derivative-dependent", kept * (d + 1), se)


def sensitivity_scores(spectrum: Spectrum, m: int, var_m: float) -> SensitivityScores:
    """Per-input scores from the leading m eigenpairs, normalized by variance.

    With m = d the score of input j equals the matrix diagonal entry j, i.e.
    the non-normalized total index (total Sobol' index for independent inputs,
    its dependent analogue otherwise).
    """
    if var_m <= 0.0:
        raise InvalidInputError("var_m must be positive")
    if not 1 <= m <= spectrum.dim:
        raise InvalidInputError(f"m must lie in [1, {spectrum.dim}], got {m}")
    v = spectrum.eigenvectors[:, :m]
    theta = (v * v) @ spectrum.eigenvalues[:m]
    return SensitivityScores(theta, var_m, theta / var_m)


def sobol_indices_pick_freeze(
    f,
    law: InputLaw,
    n: int,
    rng: RngStream = RngStream(0),
):
    """First-order and total Sobol' indices by pick-freeze, with standard errors.

    Returns (s_first, s_first_se, s_total, s_total_se, variance).
    """
    if n < 2:
        raise InvalidInputError("need at least two samples")
    xs = law.sample(n, rng.child(0))
    xs2 = law.sample(n, rng.child(1))
    d = xs.shape[1]
    y = np.asarray(f(xs), dtype=float)
    y2 = np.asarray(f(xs2), dtype=float)
    var = float(np.var(y, ddof=1))
    if var <= 0.0:
        raise NumericError("output variance is zero; indices are undefined")

    s_first = np.empty(d)
    s_first_se = np.empty(d)
    s_total = np.empty(d)
    s_total_se = np.empty(d)
    for j in range(d):
        frozen = xs2.copy()
        frozen[:, j] = xs[:, j]
        yj = np.asarray(f(frozen), dtype=float)
        prod = (y - y.mean()) * (yj - y2.mean())
        s_first[j] = prod.mean() / var
        s_first_se[j] = prod.std(ddof=1) / np.sqrt(n) / var

        sub = xs.copy()
        sub[:, j] = xs2[:, j]
        ysub = np.asarray(f(sub), dtype=float)
        half_sq = 0.5 * (y - ysub) ** 2
        s_total[j] = half_sq.mean() / var
        s_total_se[j] = half_sq.std(ddof=1) / np.sqrt(n) / var
    return s_first, s_first_se, s_total, s_total_se, var


def dgsm_bounds(
    f,
    gradfn,
    law: IndependentLaw,
    n: int,
    rng: RngStream = RngStream(0),
) -> BoundReport:
    """Monte Carlo derivative-based bounds on total Sobol' indices.

    All expectations share one paired input sample.  The CDF-ratio suprema in
    the constant c1 use closed forms per marginal family (uniform, Gaussian);
    other families raise an unsupported-distribution error.
    """
    if not isinstance(law, IndependentLaw):
        raise InvalidInputError("bounds require independent inputs")
    if n < 2:
        raise InvalidInputError("need at least two samples")
    d = law.dim
    xs = law.sample(n, rng.child(0))
    y = np.asarray(f(xs), dtype=float)
    var = float(np.var(y, ddof=1))
    if var <= 0.0:
        # constant model: every index and bound vanishes
        zeros = np.zeros(d)
        return BoundReport(
            zeros, zeros, zeros, zeros, zeros, zeros, zeros, zeros, zeros, zeros,
            np.array([_c1_constant(law.marginal(j)) for j in range(d)]),
            0.0, 0.0, n,
        )
    abs_dev = float(np.mean(np.abs(y - y.mean())))

    g = np.asarray(gradfn(xs), dtype=float)
    nu = np.mean(g * g, axis=0)
    mu_star = np.mean(np.abs(g), axis=0)

    ub = np.empty(d)
    ub_se = np.empty(d)
    uba = np.empty(d)
    uba_se = np.empty(d)
    c1 = np.empty(d)
    for j in range(d):
        marg = law.marginal(j)
        fj = marg.cdf(xs[:, j])
        pj = marg.pdf(xs[:, j])
        if np.any(pj <= 0.0):
            raise NumericError("a draw fell outside the support of a marginal")
        w = fj * (1.0 - fj)
        ub_samples = g[:, j] ** 2 * w / pj**2 / (2.0 * var)
        ub[j] = ub_samples.mean()
        ub_se[j] = ub_samples.std(ddof=1) / np.sqrt(n)
        uba_samples = 2.0 * np.abs(g[:, j]) * w / pj / abs_dev
        uba[j] = uba_samples.mean()
        uba_se[j] = uba_samples.std(ddof=1) / np.sqrt(n)
        c1[j] = _c1_constant(marg)

    s_first, s_first_se, s_total, s_total_se, _ = sobol_indices_pick_freeze(
        f, law, n, rng.child(2)
    )
    evals = n * (2 * (d + 1) + 1)
    return BoundReport(
        s_total, s_total_se, s_first, s_first_se, ub, ub_se, uba, uba_se,
        nu, mu_star, c1, var, abs_dev, evals,
    )


def _c1_constant(marginal) -> float:
    ratio = marginal.sup_cdf_ratio()
    ratio_sq = marginal.sup_cdf_ratio_sq()
    return min(4.0 * ratio**2, 0.5 * ratio_sq)


def absolute_indices(
    f,
    law: InputLaw,
    n: int,
    k_inner: int,
    rng: RngStream = RngStream(0),
):
    """L1 first-order and total indices via nested conditional-mean estimates.

    Inner conditional expectations use k_inner resamples, which biases the
    absolute values upward by O(1/sqrt(k_inner)); intended for invariant
    checks, not production estimates.
    """
    if n < 2 or k_inner < 2:
        raise InvalidInputError("need at least two samples at both levels")
    d = law.dim
    xs = law.sample(n, rng.child(0))
    y = np.asarray(f(xs), dtype=float)
    mu = y.mean()
    denom = float(np.mean(np.abs(y - mu)))
    if denom <= 0.0:
        raise NumericError("mean absolute deviation is zero")

    s_first = np.empty(d)
    s_total = np.empty(d)
    for j in range(d):
        inner = law.sample(n * k_inner, rng.child(10 + j)).reshape(n, k_inner, d)
        # total: resample coordinate j only
        pts = np.repeat(xs[:, None, :], k_inner, axis=1).copy()
        pts[:, :, j] = inner[:, :, j]
        vals = np.asarray(f(pts.reshape(n * k_inner, d)), dtype=float).reshape(n, k_inner)
        s_total[j] = np.mean(np.abs(y - vals.mean(axis=1))) / denom
        # first order: keep coordinate j, resample the rest
        pts = inner.copy()
        pts[:, :, j] = xs[:, j][:, None]
        vals = np.asarray(f(pts.reshape(n * k_inner, d)), dtype=float).reshape(n, k_inner)
        s_first[j] = np.mean(np.abs(vals.mean(axis=1) - mu)) / denom
    return s_first, s_total
