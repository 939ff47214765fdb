"""Numerical core: rank correlations, scaling, least squares, simplex search,
and a log-normal chi-square goodness-of-fit test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# scipy.special is imported where used: it dominates start-up time of the CLI

__all__ = [
    "CorrelationResult",
    "GofResult",
    "LstsqResult",
    "RankDeficientError",
    "SimplexConfig",
    "SimplexResult",
    "chi2_sf",
    "fractional_ranks",
    "kendall_tau",
    "linear_regression",
    "lognormal_gof",
    "minmax_scale",
    "nelder_mead",
    "pearson_r",
    "spearman_rho",
]


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    n: int
    p_value: float
    method: str


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d sequences of equal length")
    if len(x) < 2:
        raise ValueError("need at least 2 paired observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("zero variance")
    return x, y


def fractional_ranks(values, descending: bool = False) -> np.ndarray:
    """1-based ranks with ties sharing the average of the positions they span."""
    v = np.asarray(values, dtype=float)
    if descending:
        v = -v
    order = np.argsort(v, kind="mergesort")
    sorted_v = v[order]
    ranks = np.empty(len(v), dtype=float)
    i = 0
    n = len(v)
    while i < n:
        j = i
        while j + 1 < n and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _tie_sizes(v: np.ndarray) -> np.ndarray:
    _, counts = np.unique(v, return_counts=True)
    return counts[counts > 1].astype(float)


# above this size pair signs are summed row by row to bound memory
_PAIRWISE_LIMIT = 2000


def kendall_tau(x, y) -> CorrelationResult:
    """Kendall tau-b with tie correction and a two-sided normal-approximation p-value.

    tau_b = (C - D) / sqrt((n0 - n1) (n0 - n2)) where n1, n2 count pairs tied
    in x and in y respectively.
    """
    x, y = _paired(x, y)
    n = len(x)
    if n <= _PAIRWISE_LIMIT:
        i, j = np.triu_indices(n, 1)
        s = int(np.sum(np.sign(x[j] - x[i]) * np.sign(y[j] - y[i])))
    else:
        s = 0
        for i in range(n - 1):
            s += int(np.sum(np.sign(x[i + 1:] - x[i]) * np.sign(y[i + 1:] - y[i])))
    n0 = n * (n - 1) / 2.0
    tx = _tie_sizes(x)
    ty = _tie_sizes(y)
    n1 = float(np.sum(tx * (tx - 1) / 2.0))
    n2 = float(np.sum(ty * (ty - 1) / 2.0))
    tau = s / math.sqrt((n0 - n1) * (n0 - n2))
    tau = min(1.0, max(-1.0, tau))

    v0 = n * (n - 1) * (2 * n + 5)
    vt = float(np.sum(tx * (tx - 1) * (2 * tx + 5)))
    vu = float(np.sum(ty * (ty - 1) * (2 * ty + 5)))
    var_s = (v0 - vt - vu) / 18.0
    var_s += float(np.sum(tx * (tx - 1))) * float(np.sum(ty * (ty - 1))) / (2.0 * n * (n - 1))
    if n > 2:
        var_s += (float(np.sum(tx * (tx - 1) * (tx - 2))) * float(np.sum(ty * (ty - 1) * (ty - 2)))
                  / (9.0 * n * (n - 1) * (n - 2)))
    if var_s > 0:
        z = s / math.sqrt(var_s)
        p = math.erfc(abs(z) / math.sqrt(2.0))
    else:
        p = 1.0
    return CorrelationResult(tau, n, min(1.0, p), "kendall_b")


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    # rescale so squares of tiny or huge deviations neither underflow nor overflow
    sx, sy = np.max(np.abs(dx)), np.max(np.abs(dy))
    if sx > 0:
        dx = dx / sx
    if sy > 0:
        dy = dy / sy
    r = float(np.dot(dx, dy) / math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy))))
    return min(1.0, max(-1.0, r))


def _t_pvalue(r: float, n: int) -> float:
    df = n - 2
    if df <= 0:
        return 1.0
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    from scipy import special
    return float(min(1.0, 2.0 * special.stdtr(df, -abs(t))))


def pearson_r(x, y) -> CorrelationResult:
    x, y = _paired(x, y)
    r = _pearson(x, y)
    return CorrelationResult(r, len(x), _t_pvalue(r, len(x)), "pearson")


def spearman_rho(x, y) -> CorrelationResult:
    """Pearson correlation of fractional ranks; t-approximation p-value."""
    x, y = _paired(x, y)
    r = _pearson(fractional_ranks(x), fractional_ranks(y))
    return CorrelationResult(r, len(x), _t_pvalue(r, len(x)), "spearman")


CORRELATIONS: dict[str, Callable[..., CorrelationResult]] = {
    "kendall": kendall_tau,
    "spearman": spearman_rho,
    "pearson": pearson_r,
}


def minmax_scale(values) -> np.ndarray:
    """Map values affinely onto [0, 1]; a constant input maps to all zeros."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("minmax_scale needs at least one value")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


# --------------------------------------------------------------------------
# least squares


class RankDeficientError(ValueError):
    def __init__(self, message: str, columns: Sequence[str]):
        super().__init__(message)
        self.columns = tuple(columns)


@dataclass(frozen=True)
class LstsqResult:
    coefficients: np.ndarray
    intercept: float
    residual_norm: float


def linear_regression(X, y, with_intercept: bool = False,
                      column_names: Sequence[str] | None = None,
                      rcond: float = 1e-10) -> LstsqResult:
    """Least-squares fit of ``y`` on the columns of ``X`` via Householder QR.

    Raises RankDeficientError naming each column that is (numerically) a
    linear combination of the columns before it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    names = list(column_names) if column_names is not None else [f"x{j}" for j in range(k)]
    if with_intercept:
        X = np.column_stack([X, np.ones(n)])
        names = names + ["intercept"]
    p = X.shape[1]
    if n < p:
        raise ValueError(f"insufficient data: {n} rows for {p} columns")

    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    scale = max(float(diag.max()), 1.0) if diag.size else 1.0
    bad = [j for j in range(p) if diag[j] <= rcond * scale * max(n, p)]
    if bad:
        details = []
        for j in bad:
            if j == 0:
                details.append(f"{names[j]} (zero column)")
                continue
            coef, *_ = np.linalg.lstsq(X[:, :j], X[:, j], rcond=None)
            deps = [names[i] for i in range(j) if abs(coef[i]) > 1e-8]
            details.append(f"{names[j]} ~ {' + '.join(deps) or '0'}")
        raise RankDeficientError("rank-deficient design: " + "; ".join(details),
                                 [names[j] for j in bad])

    beta = _back_substitute(r, q.T @ y)
    resid = X @ beta - y
    intercept = 0.0
    if with_intercept:
        intercept = float(beta[-1])
        beta = beta[:-1]
    return LstsqResult(beta, intercept, float(np.linalg.norm(resid)))


def _back_substitute(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = r.shape[1]
    x = np.zeros(p)
    for i in range(p - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


# --------------------------------------------------------------------------
# Nelder-Mead


@dataclass
class SimplexConfig:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    tol_f: float = 1e-10
    tol_x: float = 1e-10
    max_iter: int = 2000
    restarts: int = 5
    seed: int = 42
    # relative and absolute-zero step of the initial simplex
    step: float = 0.05
    zero_step: float = 0.00025
    # when set, every axis uses this step instead of the two above
    absolute_step: float | None = None

    def __post_init__(self):
        if min(self.reflection, self.expansion, self.contraction, self.shrink) <= 0:
            raise ValueError("simplex coefficients must be positive")
        if self.expansion <= 1 or self.contraction >= 1:
            raise ValueError("need expansion > 1 and contraction < 1")


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    runs: list = field(default_factory=list)


def initial_simplex(x0: np.ndarray, config: SimplexConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """x0 plus one perturbed vertex per axis.

    Without ``rng`` the step is ``step * |x0_i|`` (``zero_step`` at zero);
    with ``rng`` each step is additionally scaled by U(0.5, 1.5) and given a
    random sign, which is how restarts re-seed around the incumbent.
    """
    d = len(x0)
    sim = np.tile(x0, (d + 1, 1)).astype(float)
    for i in range(d):
        if config.absolute_step is not None:
            h = config.absolute_step
        else:
            h = config.step * abs(x0[i]) if x0[i] != 0 else config.zero_step
        if rng is not None:
            h *= rng.uniform(0.5, 1.5) * (1 if rng.random() < 0.5 else -1)
        sim[i + 1, i] += h
    return sim


def _run_simplex(f, sim: np.ndarray, config: SimplexConfig, max_iter: int):
    a, g, c, s = config.reflection, config.expansion, config.contraction, config.shrink
    fs = np.array([f(v) for v in sim])
    it = 0
    converged = False
    while it < max_iter:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if (np.max(np.abs(fs[1:] - fs[0])) <= config.tol_f
                and np.max(np.abs(sim[1:] - sim[0])) <= config.tol_x):
            converged = True
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + a * (centroid - sim[-1])
        fr = f(xr)
        if fr < fs[0]:
            xe = centroid + g * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = centroid + c * (xr - centroid)
                fc = f(xc)
                accept = fc <= fr
            else:
                xc = centroid + c * (sim[-1] - centroid)
                fc = f(xc)
                accept = fc < fs[-1]
            if accept:
                sim[-1], fs[-1] = xc, fc
            else:
                sim[1:] = sim[0] + s * (sim[1:] - sim[0])
                fs[1:] = [f(v) for v in sim[1:]]
    order = np.argsort(fs, kind="stable")
    return sim[order], fs[order], it, converged


def nelder_mead(objective: Callable[[np.ndarray], float], x0,
                config: SimplexConfig | None = None,
                simplex: np.ndarray | None = None) -> SimplexResult:
    """Minimize ``objective`` with the reflect/expand/contract/shrink simplex.

    The first run starts from ``simplex`` when given, otherwise from the
    standard axis-perturbed simplex around ``x0``. Each of the
    ``config.restarts`` further runs rebuilds a randomly perturbed simplex
    around the incumbent; restarts stop early once one fails to improve.
    Deterministic for a fixed ``config.seed``. Running out of iterations is
    reported through ``converged=False``, not raised.
    """
    config = config or SimplexConfig()
    x0 = np.asarray(x0, dtype=float).ravel()
    f0 = objective(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at x0")
    rng = np.random.default_rng(config.seed)
    sim = np.array(simplex, dtype=float) if simplex is not None else initial_simplex(x0, config)

    budget = config.max_iter
    best_x, best_f = x0, f0
    total = 0
    converged = False
    runs = []
    for run in range(config.restarts + 1):
        sim, fs, it, converged = _run_simplex(objective, sim, config, budget - total)
        total += it
        improved = fs[0] < best_f
        runs.append(float(fs[0]))
        if fs[0] <= best_f:
            best_x, best_f = sim[0].copy(), float(fs[0])
        if run > 0 and not improved:
            break
        if total >= budget:
            break
        sim = initial_simplex(best_x, config, rng)
    return SimplexResult(best_x, best_f, total, converged, runs)


# --------------------------------------------------------------------------
# goodness of fit


@dataclass(frozen=True)
class GofResult:
    mu: float
    sigma: float
    statistic: float
    df: int
    p_value: float
    edges: tuple = ()
    observed: tuple = ()
    expected: tuple = ()


def chi2_sf(statistic: float, df: int) -> float:
    """Upper tail of the chi-square law: 1 - P(df/2, x/2), P the regularized lower gamma."""
    if statistic <= 0:
        return 1.0
    from scipy import special
    return float(1.0 - special.gammainc(df / 2.0, statistic / 2.0))


def _merge_tails(edges: list, obs: list, exp: list, min_expected: float):
    left = True
    while len(exp) > 1 and min(exp) < min_expected:
        if left:
            obs[0:2] = [obs[0] + obs[1]]
            exp[0:2] = [exp[0] + exp[1]]
            del edges[1]
        else:
            obs[-2:] = [obs[-2] + obs[-1]]
            exp[-2:] = [exp[-2] + exp[-1]]
            del edges[-2]
        left = not left
    return edges, obs, exp


def lognormal_gof(scores, bin_count: int = 10, min_expected: float = 5.0) -> GofResult:
    """Chi-square test of ``scores`` against a maximum-likelihood log-normal.

    Bins are equiprobable under the fitted law; tail bins are merged until
    every expected count reaches ``min_expected``. Two fitted parameters cost
    two degrees of freedom.
    """
    v = np.asarray(scores, dtype=float)
    if v.size == 0 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("log-normal requires positive support")
    logs = np.log(v)
    mu = float(logs.mean())
    sigma = float(logs.std())
    if sigma <= 0:
        raise ValueError("zero variance")
    n = len(v)
    probs = np.arange(1, bin_count) / bin_count
    from scipy import special
    inner = np.exp(mu + sigma * special.ndtri(probs))
    edges = [0.0] + inner.tolist() + [math.inf]
    obs = np.bincount(np.searchsorted(inner, v, side="right"), minlength=bin_count).tolist()
    exp = [n / bin_count] * bin_count
    edges, obs, exp = _merge_tails(edges, obs, exp, min_expected)
    df = len(exp) - 1 - 2
    if df < 1:
        raise ValueError("too few bins")
    o = np.asarray(obs, dtype=float)
    e = np.asarray(exp, dtype=float)
    statistic = float(np.sum((o - e) ** 2 / e))
    return GofResult(mu, sigma, statistic, df, chi2_sf(statistic, df),
                     tuple(edges), tuple(int(x) for x in obs), tuple(exp))
