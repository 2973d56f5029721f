"""Gaussian dependency models.

A dependency model writes the remaining coordinates of a random vector as a
deterministic map of one coordinate and independent noise,
``X_rest = T_j(X_j, Z)``.  For a joint Gaussian the map is the conditional
mean plus a Cholesky factor of the conditional covariance.  From the stacked
coordinate derivatives of those maps one obtains a Jacobian, a tensor metric
``G`` and a dependency-aware gradient ``G^+ grad``; with independent inputs
``G`` is the identity and everything reduces to the plain gradient.
"""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from scipy.linalg import solve_triangular

from .distributions import GaussianLaw, InputLaw
from .errors import InvalidInputError, NumericError
from .linalg import ensure_symmetric, pseudo_inverse, symmetrize

METRIC_PINV_TOL = 1e-12


class DependencyModel(ABC):
    """Interface all dependency structures provide.

    ``conditional_transform`` and ``inverse_transform`` must round-trip:
    ``inverse_transform(j, assemble(j, x_j, conditional_transform(j, x_j, z)))``
    equals ``z`` to numerical precision.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def conditional_transform(self, j: int, x_j, z) -> np.ndarray:
        """Map coordinate values and independent noise to the other coordinates."""

    @abstractmethod
    def inverse_transform(self, j: int, x) -> np.ndarray:
        """Recover the independent noise from full sample points."""

    @abstractmethod
    def jacobian_column(self, j: int) -> np.ndarray:
        """Derivative of the full coordinate vector with respect to coordinate j."""


def dependent_jacobian(cov) -> np.ndarray:
    """Jacobian stacking the coordinate derivatives of a Gaussian model.

    Column j equals cov[:, j] / cov[j, j]; the diagonal is one by construction.
    """
    sigma = ensure_symmetric(cov, "covariance")
    diag = np.diag(sigma)
    if np.any(diag <= 0.0):
        raise InvalidInputError("covariance diagonal must be strictly positive")
    return sigma / diag[None, :]


def tensor_metric(jacobian) -> np.ndarray:
    """Metric G = J^T J induced by the dependency Jacobian."""
    j = np.asarray(jacobian, dtype=float)
    if j.ndim != 2 or j.shape[0] != j.shape[1]:
        raise InvalidInputError("jacobian must be square")
    return symmetrize(j.T @ j)


def dependent_gradient(grad, metric_inv) -> np.ndarray:
    """Premultiply plain gradients by the (pseudo-)inverse metric.

    Accepts a single gradient of shape (d,) or a stack of shape (n, d).
    """
    g = np.asarray(grad, dtype=float)
    ginv = np.asarray(metric_inv, dtype=float)
    if g.shape[-1] != ginv.shape[0]:
        raise InvalidInputError("gradient length must match the metric dimension")
    return g @ ginv


def dependent_partials(grad, jacobian) -> np.ndarray:
    """Coordinate partial derivatives J^T grad accounting for dependence."""
    g = np.asarray(grad, dtype=float)
    j = np.asarray(jacobian, dtype=float)
    if g.shape[-1] != j.shape[0]:
        raise InvalidInputError("gradient length must match the jacobian dimension")
    return g @ j


def assemble(j: int, x_j, rest) -> np.ndarray:
    """Insert coordinate-j values into rest vectors to form full points."""
    x_j = np.atleast_1d(np.asarray(x_j, dtype=float))
    rest = np.atleast_2d(np.asarray(rest, dtype=float))
    n, dm1 = rest.shape
    out = np.empty((n, dm1 + 1))
    out[:, :j] = rest[:, :j]
    out[:, j] = x_j
    out[:, j + 1 :] = rest[:, j:]
    return out


def drop_coordinate(j: int, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.delete(x, j, axis=1)


class GaussianDependency(DependencyModel):
    """Dependency model of a positive-definite joint Gaussian.

    All derived factors (Jacobian, metric, inverse metric, per-coordinate
    conditional Cholesky factors) are computed eagerly, so instances are
    immutable after construction and safe to share between threads.
    """

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float)
        self.cov = ensure_symmetric(cov, "covariance")
        d = self.cov.shape[0]
        if self.mean.shape != (d,):
            raise InvalidInputError("mean length must match the covariance dimension")
        try:
            np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError as exc:
            raise NumericError("covariance is not positive definite") from exc
        self.jacobian = dependent_jacobian(self.cov)
        self.metric = tensor_metric(self.jacobian)
        self.metric_inv = pseudo_inverse(self.metric, tol=METRIC_PINV_TOL)
        self._cond_chol: list[np.ndarray] = []
        self._cond_slope: list[np.ndarray] = []
        for j in range(d):
            keep = [k for k in range(d) if k != j]
            s_jj = self.cov[j, j]
            s_rj = self.cov[keep, j]
            cond = self.cov[np.ix_(keep, keep)] - np.outer(s_rj, s_rj) / s_jj
            cond = symmetrize(cond)
            try:
                chol = np.linalg.cholesky(cond)
            except np.linalg.LinAlgError as exc:
                raise NumericError(
                    f"conditional covariance for coordinate {j} is not positive definite"
                ) from exc
            self._cond_chol.append(chol)
            self._cond_slope.append(s_rj / s_jj)

    @property
    def dim(self) -> int:
        return self.mean.size

    def law(self) -> GaussianLaw:
        return GaussianLaw(self.mean, self.cov)

    def jacobian_column(self, j: int) -> np.ndarray:
        return self.jacobian[:, j].copy()

    def metric_trace_stat(self) -> float:
        """trace(G^-1 T G^-1) with T the all-ones matrix (constant in x here)."""
        w = self.metric_inv @ np.ones(self.dim)
        return float(w @ w)

    def _conditional_mean(self, j: int, x_j) -> np.ndarray:
        x_j = np.atleast_1d(np.asarray(x_j, dtype=float))
        keep = [k for k in range(self.dim) if k != j]
        return self.mean[keep][None, :] + np.outer(x_j - self.mean[j], self._cond_slope[j])

    def conditional_transform(self, j: int, x_j, z) -> np.ndarray:
        self._check_index(j)
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != self.dim - 1:
            raise InvalidInputError("noise must have d-1 columns")
        return self._conditional_mean(j, x_j) + z @ self._cond_chol[j].T

    def inverse_transform(self, j: int, x) -> np.ndarray:
        self._check_index(j)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise InvalidInputError("points must have d columns")
        resid = drop_coordinate(j, x) - self._conditional_mean(j, x[:, j])
        try:
            z = solve_triangular(self._cond_chol[j], resid.T, lower=True)
        except Exception as exc:  # singular triangular factor
            raise NumericError("conditional factor is singular") from exc
        return z.T

    def _check_index(self, j: int):
        if not 0 <= j < self.dim:
            raise InvalidInputError(f"coordinate index {j} out of range")


def dependency_for(law: InputLaw) -> GaussianDependency | None:
    """Dependency model implied by an input law; None for independent inputs."""
    if isinstance(law, GaussianLaw) and law.correlated:
        return GaussianDependency(law.mean, law.cov)
    return None
