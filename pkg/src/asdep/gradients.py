"""Monte Carlo gradient estimation and gradient second-moment matrices.

Three routes produce the d x d matrix ``E[g g^T]`` of (dependency-aware)
gradients whose eigenvectors span the active subspace:

* ``gradient_matrix_from_samples`` -- average outer products of exact
  gradient samples (used when an analytic gradient is available);
* ``gradient_matrix_plugin`` -- same average, but each gradient is itself a
  central-difference estimate over spherical perturbations;
* ``gradient_matrix_direct`` -- a one-shot product-form estimator built from
  a finite-difference stencil, which avoids squaring a noisy gradient and
  keeps the bias dimension-free.

All model evaluations are vectorized: functions receive (n, d) arrays and
return length-n arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dependency import GaussianDependency
from .distributions import InputLaw, RngStream, SphericalSampler
from .errors import DegenerateStencilError, InvalidInputError
from .linalg import symmetrize
from .mc import accumulate_chunks

DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class Stencil:
    """Finite-difference nodes and weights for first-derivative extraction.

    The weights solve the Vandermonde moment constraints
    ``sum_l zeta_l beta_l^r = delta_{r,1}`` for r = 0..L-1, which cancels all
    polynomial bias terms below order L except the first derivative.
    """

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return self.nodes.shape[0]

    def residual(self) -> float:
        powers = np.vander(self.nodes, self.order, increasing=True).T
        rhs = np.zeros(self.order)
        rhs[1] = 1.0
        return float(np.max(np.abs(powers @ self.weights - rhs)))

    def abs_weight_node_sum(self) -> float:
        """sum over node pairs l1 <= l2 of |zeta_l1 zeta_l2| beta_l1^2 beta_l2^2."""
        wb2 = np.abs(self.weights) * self.nodes**2
        total = 0.0
        for i in range(self.order):
            for j in range(i, self.order):
                total += wb2[i] * wb2[j]
        return total


def solve_stencil(nodes) -> Stencil:
    beta = np.asarray(nodes, dtype=float).ravel()
    if beta.size < 2:
        raise DegenerateStencilError(
            "at least two nodes are required; a single node forces zero weights"
        )
    if np.unique(beta).size != beta.size:
        raise InvalidInputError("stencil nodes must be pairwise distinct")
    if not np.all(np.isfinite(beta)):
        raise InvalidInputError("stencil nodes must be finite")
    powers = np.vander(beta, beta.size, increasing=True).T
    rhs = np.zeros(beta.size)
    rhs[1] = 1.0
    zeta = np.linalg.solve(powers, rhs)
    stencil = Stencil(beta, zeta)
    if stencil.residual() > 1e-10:
        raise InvalidInputError("stencil constraints could not be solved accurately")
    return stencil


def central_stencil() -> Stencil:
    return solve_stencil([1.0, -1.0])


@dataclass(frozen=True)
class EstimatorConfig:
    """Hyper-parameters shared by the Monte Carlo estimators.

    h         -- finite-difference bandwidth
    sigma2    -- componentwise variance of the spherical perturbations
    n         -- number of (outer) samples
    tau       -- bandwidth exponent, h ~ n^-tau with tau in (1/4, 1)
    k0        -- centering constant; None means "mean of the model over the
                 drawn input sample", which reduces cancellation error
    m2        -- assumed second-order smoothness constant for the sigma2 rule
    n_inner   -- perturbations per point for the plug-in route
    threads   -- worker count for chunked accumulation
    """

    h: float
    sigma2: float
    n: int
    tau: float = DEFAULT_TAU
    k0: float | None = None
    m2: float = 1.0
    n_inner: int | None = None
    threads: int = 1

    def __post_init__(self):
        if self.h <= 0.0:
            raise InvalidInputError("h must be positive")
        if self.sigma2 <= 0.0:
            raise InvalidInputError("sigma2 must be positive")
        if self.n < 1:
            raise InvalidInputError("n must be positive")
        if not 0.25 < self.tau < 1.0:
            raise InvalidInputError("tau must lie in (1/4, 1)")
        if self.m2 <= 0.0:
            raise InvalidInputError("m2 must be positive")
        if self.n_inner is not None and self.n_inner < 1:
            raise InvalidInputError("n_inner must be positive")
        if self.threads < 1:
            raise InvalidInputError("threads must be positive")

    def inner_count(self, dim: int) -> int:
        return self.n_inner if self.n_inner is not None else max(dim, 32)


@dataclass(frozen=True)
class GradientMatrixEstimate:
    """Symmetrized estimate of E[g g^T] with evaluation-count metadata."""

    matrix: np.ndarray
    n_model_evals: int
    method: str
    config: EstimatorConfig | None = None


def select_hyperparameters(
    d: int,
    n: int,
    m2: float = 1.0,
    stencil: Stencil | None = None,
    metric_stat: float | None = None,
    tau: float = DEFAULT_TAU,
    sigma2_cap: float | None = None,
) -> tuple[float, float]:
    """Bandwidth and perturbation variance from the mean-squared-error rule.

    ``metric_stat`` is the expected trace of G^-1 T G^-1 (T the all-ones
    matrix); it equals d for independent inputs, giving the d^3 variant of the
    variance bound.  Returns (h, sigma2) with h = n^-tau.
    """
    if d < 1 or n < 1:
        raise InvalidInputError("d and n must be positive")
    if m2 <= 0.0:
        raise InvalidInputError("m2 must be positive")
    if not 0.25 < tau < 1.0:
        raise InvalidInputError("tau must lie in (1/4, 1)")
    stencil = stencil or central_stencil()
    stat = float(d) if metric_stat is None else float(metric_stat)
    if stat <= 0.0:
        raise InvalidInputError("metric_stat must be positive")
    sigma2 = 1.0 / (d**2 * m2**2 * stencil.abs_weight_node_sum() * stat)
    if sigma2_cap is not None:
        if sigma2_cap <= 0.0:
            raise InvalidInputError("sigma2_cap must be positive")
        sigma2 = min(sigma2, sigma2_cap)
    return float(n) ** (-tau), sigma2


def metric_trace_stat(dep: GaussianDependency | None, d: int) -> float:
    """E[trace(G^-1 T G^-1)]; the Gaussian metric is constant so this is exact."""
    if dep is None:
        return float(d)
    return dep.metric_trace_stat()


def _metric_inv(dep: GaussianDependency | None):
    return None if dep is None else dep.metric_inv


def estimate_gradient(
    f,
    x,
    cfg: EstimatorConfig,
    dep: GaussianDependency | None = None,
    rng: RngStream = RngStream(0),
) -> np.ndarray:
    """Central-difference gradient estimate at one point.

    Uses cfg.n spherical perturbation pairs (2 n model evaluations) and
    premultiplies by the inverse tensor metric for dependent inputs.
    """
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    sampler = SphericalSampler(d, cfg.sigma2)
    v = sampler.sample(rng.child(0), cfg.n)
    diffs = f(x[None, :] + cfg.h * v) - f(x[None, :] - cfg.h * v)
    grad = (diffs[:, None] * v).sum(axis=0) / (2.0 * cfg.n * cfg.h * cfg.sigma2)
    ginv = _metric_inv(dep)
    return grad if ginv is None else ginv @ grad


def sample_gradients(
    gradfn,
    law: InputLaw,
    n: int,
    dep: GaussianDependency | None = None,
    rng: RngStream = RngStream(0),
) -> tuple[np.ndarray, np.ndarray]:
    """Draw inputs and evaluate (dependency-aware) gradients at them.

    Returns (points, gradients), each of shape (n, d).
    """
    if n < 1:
        raise InvalidInputError("n must be positive")
    xs = law.sample(n, rng.child(0))
    g = np.asarray(gradfn(xs), dtype=float)
    if g.shape != xs.shape:
        raise InvalidInputError("gradient function must return an (n, d) array")
    ginv = _metric_inv(dep)
    return xs, (g if ginv is None else g @ ginv)


def sample_estimated_gradients(
    f,
    law: InputLaw,
    cfg: EstimatorConfig,
    dep: GaussianDependency | None = None,
    rng: RngStream = RngStream(0),
) -> tuple[np.ndarray, np.ndarray, int]:
    """Draw cfg.n inputs and estimate the gradient at each by central
    differences with cfg.inner_count(d) perturbation pairs.

    Returns (points, gradients, model_evaluations).
    """
    d = law.dim
    inner = cfg.inner_count(d)
    sampler = SphericalSampler(d, cfg.sigma2)
    ginv = _metric_inv(dep)
    xs = law.sample(cfg.n, rng.child(0))
    v = sampler.sample(rng.child(1), cfg.n * inner).reshape(cfg.n, inner, d)
    plus = (xs[:, None, :] + cfg.h * v).reshape(cfg.n * inner, d)
    minus = (xs[:, None, :] - cfg.h * v).reshape(cfg.n * inner, d)
    diffs = (f(plus) - f(minus)).reshape(cfg.n, inner)
    grads = (diffs[:, :, None] * v).sum(axis=1) / (2.0 * inner * cfg.h * cfg.sigma2)
    if ginv is not None:
        grads = grads @ ginv
    return xs, grads, 2 * cfg.n * inner


def gradient_matrix_from_samples(grads) -> GradientMatrixEstimate:
    """Average outer products of exact gradient samples."""
    g = np.asarray(grads, dtype=float)
    if g.ndim != 2 or g.shape[0] < 1:
        raise InvalidInputError("gradient samples must form a non-empty (n, d) array")
    m = symmetrize(g.T @ g / g.shape[0])
    return GradientMatrixEstimate(m, g.shape[0], "analytic")


def gradient_matrix_plugin(
    f,
    law: InputLaw,
    cfg: EstimatorConfig,
    dep: GaussianDependency | None = None,
    rng: RngStream = RngStream(0),
) -> GradientMatrixEstimate:
    """Plug-in estimate: average outer products of per-point gradient estimates.

    Each of the cfg.n outer points uses cfg.inner_count(d) perturbation pairs,
    so the run costs 2 * n * inner model evaluations.
    """
    if cfg.n < 2:
        raise InvalidInputError("plug-in estimation needs at least two outer points")
    d = law.dim
    inner = cfg.inner_count(d)
    sampler = SphericalSampler(d, cfg.sigma2)
    ginv = _metric_inv(dep)

    def worker(count, stream):
        xs = law.sample(count, stream.child(0))
        v = sampler.sample(stream.child(1), count * inner).reshape(count, inner, d)
        plus = (xs[:, None, :] + cfg.h * v).reshape(count * inner, d)
        minus = (xs[:, None, :] - cfg.h * v).reshape(count * inner, d)
        diffs = (f(plus) - f(minus)).reshape(count, inner)
        grads = (diffs[:, :, None] * v).sum(axis=1) / (2.0 * inner * cfg.h * cfg.sigma2)
        if ginv is not None:
            grads = grads @ ginv
        return grads.T @ grads, 2.0 * count * inner

    total, evals = accumulate_chunks(worker, cfg.n, rng, cfg.threads)
    return GradientMatrixEstimate(symmetrize(total / cfg.n), int(evals), "plugin", cfg)


def gradient_matrix_direct(
    f,
    law: InputLaw,
    cfg: EstimatorConfig,
    dep: GaussianDependency | None = None,
    stencil: Stencil | None = None,
    rng: RngStream = RngStream(0),
) -> GradientMatrixEstimate:
    """Direct product-form estimate of the gradient second-moment matrix.

    For each sample the model is probed along stencil multiples of two
    independent spherical perturbations V and V'; the stencil-weighted sums of
    centered model values play the role of directional derivatives and their
    product reconstructs one rank-one contribution
    ``u u' G^-1 V V'^T G^-1 / (h^2 sigma^4)``.  The two perturbation factors
    are independent, so no squared single-point noise enters and the bias
    stays of finite-difference order.  The accumulated matrix is symmetrized,
    because each rank-one term is not symmetric sample by sample.
    """
    stencil = stencil or central_stencil()
    d = law.dim
    sampler = SphericalSampler(d, cfg.sigma2)
    ginv = _metric_inv(dep)

    def worker(count, stream):
        xs = law.sample(count, stream.child(0))
        v = sampler.sample(stream.child(1), count)
        v2 = sampler.sample(stream.child(2), count)
        evals = 0.0
        if cfg.k0 is None:
            k0 = float(np.mean(f(xs)))
            evals += count
        else:
            k0 = cfg.k0
        u = np.zeros(count)
        u2 = np.zeros(count)
        for b, z in zip(stencil.nodes, stencil.weights):
            u += z * (f(xs + cfg.h * b * v) - k0)
            u2 += z * (f(xs + cfg.h * b * v2) - k0)
            evals += 2.0 * count
        core = (v * u[:, None]).T @ (v2 * u2[:, None])
        return core, evals

    core, evals = accumulate_chunks(worker, cfg.n, rng, cfg.threads)
    m = core / (cfg.h**2 * cfg.sigma2**2 * cfg.n)
    if ginv is not None:
        m = ginv @ m @ ginv
    return GradientMatrixEstimate(symmetrize(m), int(evals), "direct", cfg)


def resolve_config(
    d: int,
    n: int,
    h: float | None = None,
    sigma2: float | None = None,
    tau: float | None = None,
    k0: float | None = None,
    m2: float = 1.0,
    n_inner: int | None = None,
    threads: int = 1,
    stencil: Stencil | None = None,
    metric_stat: float | None = None,
) -> EstimatorConfig:
    """Fill missing (h, sigma2) from the mean-squared-error selection rule."""
    tau = DEFAULT_TAU if tau is None else tau
    auto_h, auto_s2 = select_hyperparameters(
        d, n, m2=m2, stencil=stencil, metric_stat=metric_stat, tau=tau
    )
    cfg = EstimatorConfig(
        h=auto_h if h is None else h,
        sigma2=auto_s2 if sigma2 is None else sigma2,
        n=n,
        tau=tau,
        k0=k0,
        m2=m2,
        n_inner=n_inner,
        threads=threads,
    )
    return cfg


def with_n(cfg: EstimatorConfig, n: int) -> EstimatorConfig:
    return replace(cfg, n=n)
