"""Experiment drivers behind the service endpoints and the CLI.

Every driver takes a validated :class:`~asdep.schemas.RunConfig`, runs the
requested estimation with streams derived from the config seed, and returns a
:class:`~asdep.schemas.RunResult` whose CSV artifact embeds the resolved
config and library version.  Same config and seed give byte-identical CSVs.
"""
from __future__ import annotations

import json

import numpy as np

from . import __version__
from .dependency import GaussianDependency, dependency_for, dependent_gradient
from .distributions import GaussianLaw, RngStream
from .errors import InvalidInputError
from .gradients import (
    EstimatorConfig,
    central_stencil,
    gradient_matrix_direct,
    gradient_matrix_from_samples,
    gradient_matrix_plugin,
    metric_trace_stat,
    resolve_config,
    sample_estimated_gradients,
    sample_gradients,
    solve_stencil,
)
from .linalg import sym_eig
from .schemas import RunConfig, RunResult
from .sensitivity import (
    pick_freeze_deltas,
    sensitivity_scores,
    total_covariance,
    total_covariance_dependent,
    total_covariance_derivative,
    dgsm_bounds,
)
from .shapley import (
    bivariate_variance_value,
    normalize,
    shapley_exact,
    shapley_from_gradients,
    shapley_from_gradients_third_order,
)
from .subspace import split_subspace, subspace_error
from .testfns import get_function, list_functions

FIGURE3_DEFAULT_POINTS = 200
FIGURE3_GRADIENT_SAMPLES = 20000
FIGURE3_PICKFREEZE_SAMPLES = 5000
FIGURE2_GRADIENT_SAMPLES = 100000
FIGURE2_EVAL_BUDGET = 1000000
SECTION6_FUNCTIONS = (
    "quadratic-type1",
    "quadratic-type2",
    "u-product",
    "gsobol-a",
    "gsobol-b",
    "gsobol-c",
)


def fmt(x) -> str:
    return format(float(x), ".17g")


def render_csv(columns, rows, config: dict, comments=()) -> str:
    lines = [f"# asdep {__version__}", "# config: " + json.dumps(config, sort_keys=True)]
    lines.extend(f"# {c}" for c in comments)
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, str):
                cells.append(value)
            elif isinstance(value, (int, np.integer)):
                cells.append(str(int(value)))
            else:
                cells.append(fmt(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _function_from_config(cfg: RunConfig):
    if not cfg.function:
        raise InvalidInputError("a function name is required for this run")
    params = {k: (int(v) if k == "d" else v) for k, v in cfg.params.items()}
    f = get_function(cfg.function, **params)
    if cfg.cov is not None:
        mean = cfg.mean if cfg.mean is not None else [0.0] * f.dim
        law = GaussianLaw(np.asarray(mean), np.asarray(cfg.cov))
        if law.dim != f.dim:
            raise InvalidInputError("override law dimension must match the function dimension")
        f = type(f)(f.name, f.dim, f.fn, f.grad, law, f.params, f.references)
    return f


def _estimator_config(cfg: RunConfig, d: int, dep, stencil) -> EstimatorConfig:
    stat = metric_trace_stat(dep, d)
    return resolve_config(
        d,
        cfg.n,
        h=cfg.h,
        sigma2=cfg.sigma2,
        tau=cfg.tau,
        k0=cfg.k0,
        m2=cfg.m2,
        n_inner=cfg.n_inner,
        threads=cfg.threads,
        stencil=stencil,
        metric_stat=stat,
    )


def _spectrum_rows(eigenvalues):
    return [(k + 1, lam) for k, lam in enumerate(eigenvalues)]


def _ell_error_extra(cfg, f, spectrum, rng) -> dict[str, str]:
    if not cfg.ell_sweep:
        return {}
    ells = sorted(set(cfg.ell_sweep))
    if any(not 1 <= e <= f.dim for e in ells):
        raise InvalidInputError("ell_sweep entries must lie in [1, d]")
    xs = f.law.sample(FIGURE3_DEFAULT_POINTS, rng.child(90))
    rows = []
    for i, ell in enumerate(ells):
        sub = split_subspace(spectrum, ell)
        err = subspace_error(f, sub, f.law, xs, ns=cfg.ns, rng=rng.child(91 + i))
        rows.append((ell, err))
    return {"errors": render_csv(["ell", "err"], rows, cfg.resolved())}


def run_cprime(cfg: RunConfig) -> RunResult:
    f = _function_from_config(cfg)
    dep = dependency_for(f.law)
    rng = RngStream(cfg.seed)
    method = cfg.method or "cprime-plugin"
    stencil = solve_stencil(cfg.stencil.beta) if cfg.stencil else central_stencil()

    if method == "cprime-direct":
        est = gradient_matrix_direct(
            f, f.law, _estimator_config(cfg, f.dim, dep, stencil), dep, stencil, rng
        )
    elif method == "cprime-plugin":
        if cfg.gradients == "analytic":
            _, grads = sample_gradients(f.gradient, f.law, cfg.n, dep, rng)
            est = gradient_matrix_from_samples(grads)
        else:
            est = gradient_matrix_plugin(
                f, f.law, _estimator_config(cfg, f.dim, dep, stencil), dep, rng
            )
    else:
        raise InvalidInputError(f"method '{method}' is not a gradient-matrix method")

    spectrum = sym_eig(est.matrix)
    csv = render_csv(["k", "lambda"], _spectrum_rows(spectrum.eigenvalues), cfg.resolved())
    summary = {
        "function": f.name,
        "method": est.method,
        "matrix": est.matrix.tolist(),
        "eigenvalues": spectrum.eigenvalues.tolist(),
        "n_model_evals": est.n_model_evals,
    }
    return RunResult(
        kind="cprime",
        summary=summary,
        csv=csv,
        extras=_ell_error_extra(cfg, f, spectrum, rng.child(9)),
        resolved_config=cfg.resolved(),
        version=__version__,
        n_model_evals=est.n_model_evals,
    )


def run_sens(cfg: RunConfig) -> RunResult:
    f = _function_from_config(cfg)
    dep = dependency_for(f.law)
    rng = RngStream(cfg.seed)
    method = cfg.method or ("d-sigma-tot" if dep is not None else "sigma-tot")

    if method == "sigma-tot":
        if dep is not None:
            raise InvalidInputError(
                "the pick-freeze estimator assumes independent inputs; "
                "use method 'd-sigma-tot' for dependent laws"
            )
        xs = f.law.sample(cfg.n, rng.child(0))
        xs2 = f.law.sample(cfg.n, rng.child(1))
        est = total_covariance(pick_freeze_deltas(f, xs, xs2))
        y = f(xs)
    elif method == "d-sigma-tot":
        if dep is not None:
            est = total_covariance_dependent(f.gradient, dep, cfg.n, rng)
        else:
            est = total_covariance_derivative(f.gradient, f.law, cfg.n, rng)
        y = f(f.law.sample(cfg.n, rng.child(5)))
    else:
        raise InvalidInputError(f"method '{method}' is not a sensitivity-matrix method")

    var = float(np.var(y, ddof=1))
    spectrum = sym_eig(est.matrix)
    scores = sensitivity_scores(spectrum, spectrum.dim, var)
    csv = render_csv(["k", "lambda"], _spectrum_rows(spectrum.eigenvalues), cfg.resolved())
    summary = {
        "function": f.name,
        "method": est.kind,
        "matrix": est.matrix.tolist(),
        "eigenvalues": spectrum.eigenvalues.tolist(),
        "scores": scores.theta.tolist(),
        "score_ratios": scores.ratio.tolist(),
        "variance": var,
        "n_model_evals": est.n_model_evals,
    }
    return RunResult(
        kind="sens",
        summary=summary,
        csv=csv,
        extras=_ell_error_extra(cfg, f, spectrum, rng.child(9)),
        resolved_config=cfg.resolved(),
        version=__version__,
        n_model_evals=est.n_model_evals,
    )


def run_shapley(cfg: RunConfig) -> RunResult:
    f = _function_from_config(cfg)
    dep = dependency_for(f.law)
    rng = RngStream(cfg.seed)
    method = cfg.method or "shapley-db"

    if method == "shapley-db":
        evals = cfg.n
        if cfg.gradients == "analytic":
            _, grads = sample_gradients(f.gradient, f.law, cfg.n, dep, rng)
        else:
            ecfg = _estimator_config(cfg, f.dim, dep, None)
            _, grads, evals = sample_estimated_gradients(f, f.law, ecfg, dep, rng)
        result = (
            shapley_from_gradients(grads)
            if cfg.order == 2
            else shapley_from_gradients_third_order(grads)
        )
    elif method == "shapley-var":
        if f.name != "linear-correlated":
            raise InvalidInputError(
                "variance-based values are only available for 'linear-correlated'"
            )
        result = shapley_exact(bivariate_variance_value(f.params["rho"]), f.dim)
        evals = 0
    else:
        raise InvalidInputError(f"method '{method}' is not a shapley method")

    result = normalize(result)
    rows = [
        (j + 1, result.effects[j], result.normalized[j]) for j in range(result.dim)
    ]
    csv = render_csv(["j", "effect", "normalized"], rows, cfg.resolved())
    summary = {
        "function": f.name,
        "method": method,
        "effects": result.effects.tolist(),
        "normalized": result.normalized.tolist(),
        "budget": result.budget,
        "order": result.order,
        "n_model_evals": evals,
    }
    return RunResult(
        kind="shapley",
        summary=summary,
        csv=csv,
        resolved_config=cfg.resolved(),
        version=__version__,
        n_model_evals=evals,
    )


def run_bounds(cfg: RunConfig) -> RunResult:
    f = _function_from_config(cfg)
    if dependency_for(f.law) is not None:
        raise InvalidInputError("bounds require independent inputs")
    rng = RngStream(cfg.seed)
    report = dgsm_bounds(f, f.gradient, f.law, cfg.n, rng)
    rows = [
        (j + 1, report.s_t[j], report.ub[j], report.uba[j], report.nu[j], report.mu_star[j])
        for j in range(f.dim)
    ]
    csv = render_csv(["j", "S_T", "UB", "UBa", "nu", "mu_star"], rows, cfg.resolved())
    summary = {
        "function": f.name,
        "method": "bounds",
        "S_T": report.s_t.tolist(),
        "S_T_se": report.s_t_se.tolist(),
        "S_first": report.s_first.tolist(),
        "UB": report.ub.tolist(),
        "UB_se": report.ub_se.tolist(),
        "UBa": report.uba.tolist(),
        "nu": report.nu.tolist(),
        "mu_star": report.mu_star.tolist(),
        "C1": report.c1.tolist(),
        "variance": report.variance,
        "abs_deviation": report.abs_deviation,
        "n_model_evals": report.n_model_evals,
    }
    return RunResult(
        kind="bounds",
        summary=summary,
        csv=csv,
        resolved_config=cfg.resolved(),
        version=__version__,
        n_model_evals=report.n_model_evals,
    )


def _figure1(cfg: RunConfig) -> RunResult:
    rows = []
    for k in range(-98, 99):
        rho = k / 100.0
        f = get_function("linear-correlated", rho=rho)
        dep = dependency_for(f.law)
        plain = np.array([[1.0, 0.0]])
        duan = normalize(shapley_from_gradients(plain))
        if dep is None:
            ours = duan
        else:
            g = dependent_gradient(plain, dep.metric_inv)
            ours = normalize(shapley_from_gradients(g))
        var_based = shapley_exact(bivariate_variance_value(rho), 2)
        rows.append(
            (
                rho,
                duan.normalized[0],
                duan.normalized[1],
                ours.normalized[0],
                ours.normalized[1],
                var_based.effects[0],
                var_based.effects[1],
            )
        )
    csv = render_csv(
        ["rho", "phi1_duan", "phi2_duan", "dphi1", "dphi2", "shapley_var1", "shapley_var2"],
        rows,
        cfg.resolved(),
        comments=[
            "rho grid -0.98..0.98 step 0.01; |rho| >= 0.99 excluded "
            "(the closed forms blow up like (1-rho^2)^-4 near |rho| = 1)"
        ],
    )
    summary = {"figure": 1, "rows": len(rows)}
    return RunResult(
        kind="reproduce",
        summary=summary,
        csv=csv,
        resolved_config=cfg.resolved(),
        version=__version__,
        n_model_evals=0,
    )


def _figure2(cfg: RunConfig) -> RunResult:
    n_grad = cfg.n if "n" in cfg.model_fields_set else FIGURE2_GRADIENT_SAMPLES
    rows = []
    total_evals = 0
    rng = RngStream(cfg.seed)
    for fi, name in enumerate(SECTION6_FUNCTIONS):
        f = get_function(name)
        frng = rng.child(fi)
        _, grads = sample_gradients(f.gradient, f.law, n_grad, None, frng.child(0))
        est = gradient_matrix_from_samples(grads)
        total_evals += est.n_model_evals
        spec_db = sym_eig(est.matrix)
        try:
            true_eigs = f.reference("eigenvalues")
        except Exception:
            true_eigs = None
        for k, lam in enumerate(spec_db.eigenvalues):
            truth = "" if true_eigs is None else fmt(true_eigs[k])
            rows.append((name, "gradient", k + 1, fmt(lam), truth))

        n_pf = max(2, FIGURE2_EVAL_BUDGET // (f.dim + 1))
        xs = f.law.sample(n_pf, frng.child(1))
        xs2 = f.law.sample(n_pf, frng.child(2))
        sens_est = total_covariance(pick_freeze_deltas(f, xs, xs2))
        total_evals += sens_est.n_model_evals
        spec_s = sym_eig(sens_est.matrix)
        for k, lam in enumerate(spec_s.eigenvalues):
            rows.append((name, "sensitivity", k + 1, fmt(lam), ""))
    csv = render_csv(
        ["function", "method", "k", "lambda_est", "lambda_true"],
        rows,
        cfg.resolved(),
        comments=[
            f"gradient route: {n_grad} exact-gradient samples per function",
            "sensitivity route: pick-freeze within a 1e6 evaluation budget",
            "lambda_true is empty where no closed form exists",
        ],
    )
    summary = {"figure": 2, "rows": len(rows), "n_model_evals": total_evals}
    return RunResult(
        kind="reproduce",
        summary=summary,
        csv=csv,
        resolved_config=cfg.resolved(),
        version=__version__,
        n_model_evals=total_evals,
    )


def _figure3(cfg: RunConfig) -> RunResult:
    n_points = cfg.n if "n" in cfg.model_fields_set else FIGURE3_DEFAULT_POINTS
    rows = []
    total_evals = 0
    rng = RngStream(cfg.seed)
    for fi, name in enumerate(SECTION6_FUNCTIONS):
        f = get_function(name)
        frng = rng.child(fi)
        _, grads = sample_gradients(
            f.gradient, f.law, FIGURE3_GRADIENT_SAMPLES, None, frng.child(0)
        )
        spec_a = sym_eig(gradient_matrix_from_samples(grads).matrix)
        xs = f.law.sample(FIGURE3_PICKFREEZE_SAMPLES, frng.child(1))
        xs2 = f.law.sample(FIGURE3_PICKFREEZE_SAMPLES, frng.child(2))
        spec_s = sym_eig(total_covariance(pick_freeze_deltas(f, xs, xs2)).matrix)
        pts = f.law.sample(n_points, frng.child(3))
        for ell in range(1, f.dim + 1):
            err_a = subspace_error(
                f, split_subspace(spec_a, ell), f.law, pts, ns=cfg.ns,
                rng=frng.child(10 + ell),
            )
            err_s = subspace_error(
                f, split_subspace(spec_s, ell), f.law, pts, ns=cfg.ns,
                rng=frng.child(40 + ell),
            )
            total_evals += 2 * n_points * cfg.ns if ell < f.dim else 2 * n_points
            rows.append((name, ell, err_a, err_s))
    csv = render_csv(
        ["function", "ell", "err_a", "err_s"],
        rows,
        cfg.resolved(),
        comments=[
            f"{n_points} evaluation points per function, {cfg.ns} inactive draws per point",
            f"subspaces estimated with {FIGURE3_GRADIENT_SAMPLES} gradient samples "
            f"and {FIGURE3_PICKFREEZE_SAMPLES} pick-freeze samples",
        ],
    )
    summary = {"figure": 3, "rows": len(rows), "n_model_evals": total_evals}
    return RunResult(
        kind="reproduce",
        summary=summary,
        csv=csv,
        resolved_config=cfg.resolved(),
        version=__version__,
        n_model_evals=total_evals,
    )


def run_reproduce(cfg: RunConfig) -> RunResult:
    if cfg.figure == 1:
        return _figure1(cfg)
    if cfg.figure == 2:
        return _figure2(cfg)
    if cfg.figure == 3:
        return _figure3(cfg)
    raise InvalidInputError("reproduce requires --figure 1, 2 or 3")


RUNNERS = {
    "cprime": run_cprime,
    "sens": run_sens,
    "shapley": run_shapley,
    "bounds": run_bounds,
    "reproduce": run_reproduce,
}


def run(kind: str, cfg: RunConfig) -> RunResult:
    if kind not in RUNNERS:
        raise InvalidInputError(f"unknown run kind '{kind}'")
    return RUNNERS[kind](cfg)


def functions_info() -> list[dict]:
    return list_functions()
