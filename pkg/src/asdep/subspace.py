"""Active subspaces: eigenvector splitting, per-input scores, derivative-based
sensitivity measures and the conditional-expectation approximation on a
retained subspace."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import GaussianLaw, IndependentLaw, InputLaw, RngStream
from .errors import InvalidInputError, NumericError
from .linalg import Spectrum

DEFAULT_INACTIVE_DRAWS = 100


@dataclass(frozen=True)
class ActiveSubspace:
    """Leading/trailing eigenvector split of a symmetric moment matrix."""

    spectrum: Spectrum
    ell: int
    active: np.ndarray      # d x ell
    inactive: np.ndarray    # d x (d - ell)

    @property
    def dim(self) -> int:
        return self.spectrum.dim


@dataclass(frozen=True)
class DgsmValues:
    """L2 and L1 derivative-based sensitivity measures per input."""

    l2: np.ndarray
    l1: np.ndarray


def split_subspace(spectrum: Spectrum, ell: int) -> ActiveSubspace:
    d = spectrum.dim
    if not 1 <= ell <= d:
        raise InvalidInputError(f"ell must lie in [1, {d}], got {ell}")
    v = spectrum.eigenvectors
    return ActiveSubspace(spectrum, ell, v[:, :ell].copy(), v[:, ell:].copy())


def active_scores(spectrum: Spectrum, m: int) -> np.ndarray:
    """Per-input scores summing the first m eigenvalue-weighted squared loadings."""
    if not 1 <= m <= spectrum.dim:
        raise InvalidInputError(f"m must lie in [1, {spectrum.dim}], got {m}")
    v = spectrum.eigenvectors[:, :m]
    return (v * v) @ spectrum.eigenvalues[:m]


def dgsm_values(grads) -> DgsmValues:
    """Derivative-based measures from gradient samples: mean squares and mean
    absolute values of each gradient component."""
    g = np.asarray(grads, dtype=float)
    if g.ndim != 2 or g.shape[0] < 1:
        raise InvalidInputError("gradient samples must form a non-empty (n, d) array")
    return DgsmValues(np.mean(g * g, axis=0), np.mean(np.abs(g), axis=0))


def _inactive_draws(law: InputLaw, sub: ActiveSubspace, count: int, gen) -> np.ndarray:
    """Draws of the inactive projection R = W_inactive^T X.

    For Gaussian laws R is sampled from its exact Gaussian marginal; for other
    independent inputs a fresh draw of X is projected, which ignores the
    conditioning on the active coordinates (the standard practical surrogate).
    """
    w_in = sub.inactive
    moments = law.gaussian_moments() if hasattr(law, "gaussian_moments") else None
    if moments is not None:
        mean, cov = moments
        mu_r = w_in.T @ mean
        cov_r = w_in.T @ cov @ w_in
        try:
            chol = np.linalg.cholesky(cov_r + 1e-14 * np.eye(cov_r.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericError("projected covariance is not positive definite") from exc
        z = gen.standard_normal((count, w_in.shape[1]))
        return mu_r + z @ chol.T
    if isinstance(law, IndependentLaw):
        cols = [m.sample(count, gen) for m in law.marginals]
        return np.column_stack(cols) @ w_in
    raise InvalidInputError(f"unsupported input law {type(law).__name__}")


def subspace_approximation(
    f,
    x,
    sub: ActiveSubspace,
    law: InputLaw,
    ns: int = DEFAULT_INACTIVE_DRAWS,
    rng: RngStream = RngStream(0),
):
    """Conditional-expectation approximation of f on the active subspace.

    Each point keeps its active projection and averages f over ns draws of the
    inactive coordinates.  With ell = d the inactive block is empty and f(x)
    is returned exactly.  Accepts one point of shape (d,) or a batch (n, d).
    """
    if ns < 1:
        raise InvalidInputError("ns must be positive")
    single = np.asarray(x, dtype=float).ndim == 1
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    if xs.shape[1] != sub.dim:
        raise InvalidInputError("points must have d columns")
    if sub.ell == sub.dim:
        vals = np.asarray(f(xs), dtype=float)
        return float(vals[0]) if single else vals

    n = xs.shape[0]
    gen = rng.generator()
    base = xs @ sub.active @ sub.active.T
    r = _inactive_draws(law, sub, n * ns, gen).reshape(n, ns, -1)
    points = base[:, None, :] + r @ sub.inactive.T
    vals = np.asarray(f(points.reshape(n * ns, sub.dim)), dtype=float).reshape(n, ns)
    out = vals.mean(axis=1)
    return float(out[0]) if single else out


def approximation_error(f, approx, xs) -> float:
    """Mean squared gap between the model and an approximation over a sample."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] < 1:
        raise InvalidInputError("need at least one evaluation point")
    truth = np.asarray(f(xs), dtype=float)
    guess = np.asarray(approx(xs), dtype=float)
    return float(np.mean((truth - guess) ** 2))


def subspace_error(
    f,
    sub: ActiveSubspace,
    law: InputLaw,
    xs,
    ns: int = DEFAULT_INACTIVE_DRAWS,
    rng: RngStream = RngStream(0),
) -> float:
    """approximation_error specialized to the conditional subspace approximation."""
    return approximation_error(
        f, lambda pts: subspace_approximation(f, pts, sub, law, ns=ns, rng=rng), xs
    )
