"""Benchmark function catalog.

Every entry bundles a vectorized evaluator, an analytic gradient where one
exists, the input law, and named closed-form reference quantities used by the
experiment runner and the test suite.  Evaluators accept (n, d) arrays and
return length-n arrays; a single (d,) point is also accepted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .distributions import Gaussian, GaussianLaw, IndependentLaw, InputLaw, RngStream, Uniform
from .errors import InvalidInputError, NotAvailableError

QUADRATIC_ROTATION_SEED = 1729

QUADRATIC_EIGENVALUES = {
    1: (150.0, 5.0, 0.5, 0.4, 0.1, 0.8, 0.01, 0.0009, 0.005, 0.008),
    2: (150.0, 140.0, 130.0, 120.0, 110.0, 100.0, 90.0, 145.0, 145.0, 125.0),
}

GSOBOL_COEFFS = {
    "a": (0.0, 0.0, 6.52, 6.52, 6.52, 6.52, 6.52, 6.52, 6.52, 6.52),
    "b": (50.0,) * 10,
    "c": (0.0,) * 10,
}

U_PRODUCT_WEIGHTS = (25.0, 25.0, 25.0, 25.0, 25.0, 37.0, 37.0, 37.0, 37.0, 37.0)


def _vectorized(fn):
    def wrapped(x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        out = fn(np.atleast_2d(arr))
        return float(out[0]) if single else out

    return wrapped


def _vectorized_grad(fn):
    def wrapped(x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        out = fn(np.atleast_2d(arr))
        return out[0] if single else out

    return wrapped


@dataclass(frozen=True)
class TestFunction:
    name: str
    dim: int
    fn: Callable
    grad: Callable | None
    law: InputLaw
    params: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidInputError(
                f"{self.name} expects points of dimension {self.dim}, got {x.shape[-1]}"
            )
        return self.fn(x)

    def gradient(self, x):
        if self.grad is None:
            raise NotAvailableError(f"{self.name} has no analytic gradient")
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidInputError(
                f"{self.name} expects points of dimension {self.dim}, got {x.shape[-1]}"
            )
        return self.grad(x)

    def reference(self, name: str):
        if name not in self.references:
            raise NotAvailableError(f"{self.name} has no reference '{name}'")
        value = self.references[name]
        return value() if callable(value) else value

    def spec(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dim,
            "params": dict(self.params),
            "input_law": self.law.spec(),
            "analytic_gradient": self.grad is not None,
            "references": sorted(self.references),
        }


def analytic_reference(f: TestFunction, name: str):
    return f.reference(name)


def orthogonal_rotation(d: int, seed: int = QUADRATIC_ROTATION_SEED) -> np.ndarray:
    """Deterministic orthogonal matrix from a seeded QR factorization."""
    gen = RngStream(seed).generator()
    q, r = np.linalg.qr(gen.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def quadratic_from_spectrum(rotation, eigenvalues) -> TestFunction:
    """Quadratic form 0.5 x^T A x with A assembled from a chosen spectrum.

    The rotation must be orthogonal; the reference gradient moment matrix is
    A^2 / 3 under inputs uniform on (-1, 1), so its eigenvalues are the squared
    assembly eigenvalues over three with the same eigenvectors.
    """
    p = np.asarray(rotation, dtype=float)
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    d = lam.size
    if p.shape != (d, d):
        raise InvalidInputError("rotation shape must match the eigenvalue count")
    if np.max(np.abs(p.T @ p - np.eye(d))) > 1e-10:
        raise InvalidInputError("rotation must be orthogonal within 1e-10")
    a = (p * lam) @ p.T
    a = 0.5 * (a + a.T)

    def fn(x):
        return 0.5 * np.einsum("ij,jk,ik->i", x, a, x)

    def grad(x):
        return x @ a

    c_matrix = a @ a / 3.0
    order = np.argsort(-(lam**2))
    references = {
        "A": a,
        "C": 0.5 * (c_matrix + c_matrix.T),
        "eigenvalues": np.sort(lam**2 / 3.0)[::-1],
        "eigenvectors": p[:, order],
        "M2": float(np.max(np.abs(lam))),
    }
    law = IndependentLaw(tuple(Uniform(-1.0, 1.0) for _ in range(d)))
    return TestFunction(
        "quadratic", d, _vectorized(fn), _vectorized_grad(grad), law, {}, references
    )


def _exclusive_products(factors: np.ndarray) -> np.ndarray:
    """Column j holds the product of all factor columns except j."""
    n, d = factors.shape
    out = np.empty((n, d))
    for j in range(d):
        out[:, j] = np.prod(np.delete(factors, j, axis=1), axis=1)
    return out


def make_linear_correlated(rho: float = 0.5) -> TestFunction:
    """First coordinate of a correlated standard bivariate Gaussian.

    The plain gradient is constant, so every dependency-aware quantity has a
    closed form; the catalog exposes them as references.
    """
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise InvalidInputError("rho must lie in (-1, 1)")
    law = GaussianLaw(np.zeros(2), np.array([[1.0, rho], [rho, 1.0]]))

    def fn(x):
        return x[:, 0].copy()

    def grad(x):
        g = np.zeros_like(x)
        g[:, 0] = 1.0
        return g

    s = 1.0 - rho * rho

    def dep_gradient():
        return np.array([1.0 + rho * rho, -2.0 * rho]) / s**2

    def c_prime():
        g = dep_gradient()
        return np.outer(g, g)

    def k_matrix():
        return np.array([[1.0, rho * rho], [rho * rho, rho * rho]])

    def dphi():
        c = (1.0 + rho * rho) / s**4
        return np.array(
            [
                c * (1.0 + rho * rho + abs(rho)),
                abs(rho) / s**4 * (4.0 * abs(rho) + 1.0 + rho * rho),
            ]
        )

    references = {
        "gradient": dep_gradient,
        "C_prime": c_prime,
        "K": k_matrix,
        "dphi": dphi,
        "duan_phi": np.array([1.0, 0.0]),
        "variance_shapley": np.array([1.0 - rho * rho / 2.0, rho * rho / 2.0]),
    }
    return TestFunction(
        "linear-correlated",
        2,
        _vectorized(fn),
        _vectorized_grad(grad),
        law,
        {"rho": rho},
        references,
    )


def make_linear_additive() -> TestFunction:
    """x1 + 2 x2 with standard Gaussian inputs; total indices are (0.2, 0.8)."""
    law = IndependentLaw((Gaussian(0.0, 1.0), Gaussian(0.0, 1.0)))

    def fn(x):
        return x[:, 0] + 2.0 * x[:, 1]

    def grad(x):
        g = np.empty_like(x)
        g[:, 0] = 1.0
        g[:, 1] = 2.0
        return g

    references = {
        "S_T": np.array([0.2, 0.8]),
        "K": np.diag([1.0, 4.0]),
        "variance": 5.0,
    }
    return TestFunction(
        "linear-additive", 2, _vectorized(fn), _vectorized_grad(grad), law, {}, references
    )


def make_quadratic(qtype: int = 1) -> TestFunction:
    qtype = int(qtype)
    if qtype not in QUADRATIC_EIGENVALUES:
        raise InvalidInputError("quadratic type must be 1 or 2")
    lam = QUADRATIC_EIGENVALUES[qtype]
    f = quadratic_from_spectrum(orthogonal_rotation(len(lam)), lam)
    return TestFunction(
        f"quadratic-type{qtype}",
        f.dim,
        f.fn,
        f.grad,
        f.law,
        {"type": qtype},
        f.references,
    )


def make_u_product() -> TestFunction:
    """Product of weighted standard-normal CDFs of each coordinate, with
    independent N(0, 4) inputs."""
    u = np.asarray(U_PRODUCT_WEIGHTS)
    d = u.size
    law = IndependentLaw(tuple(Gaussian(0.0, 4.0) for _ in range(d)))

    def factors(x):
        return u[None, :] * ndtr(x)

    def fn(x):
        return np.prod(factors(x), axis=1)

    def grad(x):
        phi = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
        return _exclusive_products(factors(x)) * u[None, :] * phi

    return TestFunction(
        "u-product", d, _vectorized(fn), _vectorized_grad(grad), law, {}, {}
    )


def make_gsobol(variant: str = "a") -> TestFunction:
    """Product benchmark |4x - 2| with per-coordinate attenuation, inputs
    uniform on (0, 1).  The derivative uses sign(4x - 2) with value 0 exactly
    at the kink, a valid weak-derivative representative."""
    variant = str(variant).lower()
    if variant not in GSOBOL_COEFFS:
        raise InvalidInputError("gsobol variant must be one of 'a', 'b', 'c'")
    a = np.asarray(GSOBOL_COEFFS[variant])
    d = a.size
    law = IndependentLaw(tuple(Uniform(0.0, 1.0) for _ in range(d)))

    def factors(x):
        return (np.abs(4.0 * x - 2.0) + a[None, :]) / (1.0 + a[None, :])

    def fn(x):
        return np.prod(factors(x), axis=1)

    def grad(x):
        slope = 4.0 * np.sign(4.0 * x - 2.0) / (1.0 + a[None, :])
        return _exclusive_products(factors(x)) * slope

    return TestFunction(
        f"gsobol-{variant}", d, _vectorized(fn), _vectorized_grad(grad), law,
        {"variant": variant}, {},
    )


def make_ub_equality_product(d: int = 2) -> TestFunction:
    """Product of centered CDFs of uniform inputs; the universal
    derivative-based upper bound on the total index is attained with equality."""
    d = int(d)
    if d < 1:
        raise InvalidInputError("d must be positive")
    law = IndependentLaw(tuple(Uniform(0.0, 1.0) for _ in range(d)))

    def fn(x):
        return np.prod(x - 0.5, axis=1)

    def grad(x):
        return _exclusive_products(x - 0.5)

    references = {
        "UB_equality": True,
        "S_T": np.ones(d),
        "variance": (1.0 / 12.0) ** d,
    }
    return TestFunction(
        "ub-equality-product", d, _vectorized(fn), _vectorized_grad(grad), law,
        {"d": d}, references,
    )


def make_product_evenodd() -> TestFunction:
    """Product of pure powers x1 x2^2 x3^3 x4^4 of standard Gaussians.

    Each factor is even or odd, so the gradient moment matrix is diagonal and
    the active directions coincide with the coordinate axes.
    """
    d = 4
    law = IndependentLaw(tuple(Gaussian(0.0, 1.0) for _ in range(d)))
    powers = np.arange(1, d + 1, dtype=float)

    def fn(x):
        return np.prod(x**powers[None, :], axis=1)

    def grad(x):
        g = _exclusive_products(x**powers[None, :])
        return g * powers[None, :] * x ** (powers[None, :] - 1.0)

    return TestFunction(
        "product-evenodd", d, _vectorized(fn), _vectorized_grad(grad), law,
        {}, {"C_diagonal": True},
    )


def make_additive_cubic() -> TestFunction:
    """Additive model sum_j c_j (x_j + x_j^3) of standard Gaussians; the
    total-sensitivity moment matrix is diagonal."""
    coeffs = np.array([1.0, 0.5, 2.0])
    d = coeffs.size
    law = IndependentLaw(tuple(Gaussian(0.0, 1.0) for _ in range(d)))

    def fn(x):
        return np.sum(coeffs[None, :] * (x + x**3), axis=1)

    def grad(x):
        return coeffs[None, :] * (1.0 + 3.0 * x * x)

    return TestFunction(
        "additive-cubic", d, _vectorized(fn), _vectorized_grad(grad), law,
        {}, {"K_diagonal": True},
    )


_BUILDERS: dict[str, Callable[..., TestFunction]] = {
    "linear-correlated": make_linear_correlated,
    "linear-additive": make_linear_additive,
    "quadratic-type1": lambda: make_quadratic(1),
    "quadratic-type2": lambda: make_quadratic(2),
    "u-product": make_u_product,
    "gsobol-a": lambda: make_gsobol("a"),
    "gsobol-b": lambda: make_gsobol("b"),
    "gsobol-c": lambda: make_gsobol("c"),
    "ub-equality-product": make_ub_equality_product,
    "product-evenodd": make_product_evenodd,
    "additive-cubic": make_additive_cubic,
}

_PARAM_NAMES = {
    "linear-correlated": {"rho"},
    "ub-equality-product": {"d"},
}


def function_names() -> list[str]:
    return sorted(_BUILDERS)


def get_function(name: str, **params) -> TestFunction:
    if name not in _BUILDERS:
        raise InvalidInputError(f"unknown test function '{name}'")
    allowed = _PARAM_NAMES.get(name, set())
    unknown = set(params) - allowed
    if unknown:
        raise InvalidInputError(
            f"unknown parameter(s) {sorted(unknown)} for function '{name}'"
        )
    return _BUILDERS[name](**params)


def list_functions() -> list[dict]:
    return [get_function(name).spec() for name in function_names()]
