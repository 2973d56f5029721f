"""Marginal distributions, input laws, seeded RNG streams and the spherical
perturbation sampler used by every gradient estimator.

Random draws come from counter-based Philox streams addressed by a 64-bit seed
plus a path of child indices, so parallel workers get non-overlapping
deterministic substreams.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import InvalidInputError, NumericError, UnsupportedDistributionError


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by (seed, path of child indices)."""

    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must fit in an unsigned 64-bit integer")

    def child(self, index: int) -> "RngStream":
        if index < 0:
            raise InvalidInputError("stream index must be non-negative")
        return RngStream(self.seed, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=int(self.seed), spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))


class Marginal(ABC):
    """One-dimensional distribution with CDF, density and quantile."""

    @abstractmethod
    def cdf(self, x):
        ...

    @abstractmethod
    def pdf(self, x):
        ...

    @abstractmethod
    def quantile(self, p):
        ...

    @abstractmethod
    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        ...

    @abstractmethod
    def spec(self) -> dict:
        ...

    def sup_cdf_ratio(self) -> float:
        """sup over the support of F(x)(1 - F(x)) / pdf(x)."""
        raise UnsupportedDistributionError(
            f"no closed-form CDF-ratio supremum for {type(self).__name__}"
        )

    def sup_cdf_ratio_sq(self) -> float:
        """sup over the support of F(x)(1 - F(x)) / pdf(x)^2 (may be inf)."""
        raise UnsupportedDistributionError(
            f"no closed-form squared CDF-ratio supremum for {type(self).__name__}"
        )


@dataclass(frozen=True)
class Uniform(Marginal):
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidInputError("uniform marginal needs lower < upper")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lower) / self.width, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, 1.0 / self.width, 0.0)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise InvalidInputError("quantile argument must lie in [0, 1]")
        return self.lower + self.width * p

    def sample(self, n, gen):
        return self.lower + self.width * gen.random(n)

    def spec(self):
        return {"kind": "uniform", "lower": self.lower, "upper": self.upper}

    def sup_cdf_ratio(self):
        # F(1-F)/pdf = (x-a)(b-x)/(b-a), maximized at the midpoint
        return self.width / 4.0

    def sup_cdf_ratio_sq(self):
        return self.width**2 / 4.0


@dataclass(frozen=True)
class Gaussian(Marginal):
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if self.variance <= 0.0:
            raise InvalidInputError("gaussian marginal needs positive variance")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mean) / self.sigma)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise InvalidInputError("gaussian quantile argument must lie in (0, 1)")
        return self.mean + self.sigma * ndtri(p)

    def sample(self, n, gen):
        return self.mean + self.sigma * gen.standard_normal(n)

    def spec(self):
        return {"kind": "gaussian", "mean": self.mean, "variance": self.variance}

    def sup_cdf_ratio(self):
        # maximum of F(1-F)/pdf sits at the mean
        return 0.25 * self.sigma * math.sqrt(2.0 * math.pi)

    def sup_cdf_ratio_sq(self):
        # F(1-F)/pdf^2 grows without bound in the tails
        return math.inf


@dataclass(frozen=True)
class IndependentLaw:
    """Product law of independent marginals."""

    marginals: tuple[Marginal, ...]

    def __post_init__(self):
        if not self.marginals:
            raise InvalidInputError("need at least one marginal")
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def marginal(self, j: int) -> Marginal:
        return self.marginals[j]

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        gen = rng.generator()
        return np.column_stack([m.sample(n, gen) for m in self.marginals])

    def gaussian_moments(self):
        """(mean, covariance) when every marginal is Gaussian, else None."""
        if all(isinstance(m, Gaussian) for m in self.marginals):
            mean = np.array([m.mean for m in self.marginals])
            cov = np.diag([m.variance for m in self.marginals])
            return mean, cov
        return None

    def spec(self):
        return {"kind": "independent", "marginals": [m.spec() for m in self.marginals]}


class GaussianLaw:
    """Joint Gaussian law with a positive-definite covariance."""

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        if self.mean.ndim != 1:
            raise InvalidInputError("mean must be a vector")
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise InvalidInputError("covariance shape must match the mean length")
        if not np.all(np.isfinite(self.mean)) or not np.all(np.isfinite(self.cov)):
            raise InvalidInputError("gaussian law entries must be finite")
        if np.any(np.abs(self.cov - self.cov.T) > 1e-12 * np.maximum(1.0, np.abs(self.cov))):
            raise InvalidInputError("covariance must be symmetric")
        try:
            self._chol = np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError as exc:
            raise NumericError("covariance is not positive definite") from exc

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def correlated(self) -> bool:
        off = self.cov - np.diag(np.diag(self.cov))
        return bool(np.any(off != 0.0))

    def marginal(self, j: int) -> Gaussian:
        return Gaussian(float(self.mean[j]), float(self.cov[j, j]))

    def gaussian_moments(self):
        return self.mean, self.cov

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        gen = rng.generator()
        z = gen.standard_normal((n, self.dim))
        return self.mean + z @ self._chol.T

    def spec(self):
        return {"kind": "gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}


InputLaw = IndependentLaw | GaussianLaw


def sample_unit_sphere(d: int, rng: RngStream, n: int | None = None) -> np.ndarray:
    """Uniform draws on the unit sphere in R^d via normalized Gaussians."""
    if d < 1:
        raise InvalidInputError("dimension must be at least 1")
    count = 1 if n is None else int(n)
    gen = rng.generator()
    z = gen.standard_normal((count, d))
    norms = np.linalg.norm(z, axis=1)
    while np.any(norms == 0.0):  # probability zero, guards exact underflow
        bad = norms == 0.0
        z[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(z, axis=1)
    u = z / norms[:, None]
    return u[0] if n is None else u


@dataclass(frozen=True)
class SphericalSampler:
    """Spherical perturbations V = R * U with U uniform on the unit sphere and
    an independent radius R ~ uniform(0, sqrt(3 d sigma2)).

    This radius law gives componentwise variance sigma2; it is the only law the
    estimator guarantees cover, so others are rejected at construction.
    """

    dim: int
    sigma2: float
    radius_law: str = "uniform"

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError("dimension must be at least 1")
        if self.sigma2 <= 0.0:
            raise InvalidInputError("sigma2 must be positive")
        if self.radius_law != "uniform":
            raise InvalidInputError("only the uniform radius law is supported")

    @property
    def radius_bound(self) -> float:
        return math.sqrt(3.0 * self.dim * self.sigma2)

    def sample(self, rng: RngStream, n: int | None = None) -> np.ndarray:
        count = 1 if n is None else int(n)
        gen = rng.generator()
        z = gen.standard_normal((count, self.dim))
        norms = np.linalg.norm(z, axis=1)
        while np.any(norms == 0.0):
            bad = norms == 0.0
            z[bad] = gen.standard_normal((int(bad.sum()), self.dim))
            norms = np.linalg.norm(z, axis=1)
        u = z / norms[:, None]
        r = gen.uniform(0.0, self.radius_bound, count)
        v = r[:, None] * u
        return v[0] if n is None else v
