"""Fundamental limits on the ancilla information ratio and the optimizers
that attain them: the tridiagonal/Chebyshev eigenproblem, photon-number and
mean-photon bounds, and a simplex maximizer for the harmonic-mean functional.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin

import numpy as np


@dataclass
class Distribution:
    """Probability weights x_0..x_k on the simplex."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        self.weights = w


@dataclass
class OptimizerConfig:
    restarts: int = 20
    max_iters: int = 4000
    step_rule: str = "exponentiated_gradient"
    tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.step_rule not in ("exponentiated_gradient", "projected_gradient"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


def bound_max_photons(n: int) -> float:
    """Ratio bound for ancillas with at most n photons in total."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    return cos(pi / (n + 2))


def bound_mean_photons(mean_n: float) -> float:
    """Ratio bound for ancillas with mean photon number mean_n (Jensen)."""
    if mean_n < 0:
        raise ValueError("mean photon number must be non-negative")
    return cos(pi / (mean_n + 2))


def small_mean_bound(mean_n: float) -> float:
    """Leading behaviour of the mean-photon bound for mean_n << 1."""
    return pi / 4.0 * mean_n


def asymptotic_bound(k: int) -> float:
    """Large-k value of the smooth-profile optimum, 1 - pi^2/k^2."""
    if k < 3:
        raise ValueError("asymptotic form needs k >= 3")
    return 1.0 - pi**2 / k**2


def chebyshev_distribution(k: int) -> Distribution:
    """The maximizing distribution x_i = (2/(k+1)) sin^2((i+1) pi / (k+2))."""
    i = np.arange(k + 1)
    x = 2.0 / (k + 1) * np.sin((i + 1) * pi / (k + 2)) ** 2
    return Distribution(x / x.sum())


def tridiag_max_eig(k: int) -> tuple[float, Distribution]:
    """Largest eigenpair of the (k+1)-dim 0/1 tridiagonal hopping matrix.

    Returned in closed form: eigenvalue 2 cos(pi/(k+2)), eigenvector entries
    proportional to sin((i+1) pi/(k+2)); the Distribution holds the squared,
    normalized eigenvector.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 * cos(pi / (k + 2)), chebyshev_distribution(k)


def hopping_matrix(k: int) -> np.ndarray:
    m = np.zeros((k + 1, k + 1))
    idx = np.arange(k)
    m[idx, idx + 1] = 1.0
    m[idx + 1, idx] = 1.0
    return m


def sqrt_product(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(np.sqrt(x[1:] * x[:-1])))


def maximize_sqrt_product(k: int) -> tuple[float, Distribution]:
    """max over the simplex of sum_i sqrt(x_i x_{i-1}), via the eigenproblem."""
    lam, dist = tridiag_max_eig(k)
    return lam / 2.0, dist


def harmonic_chain(x: np.ndarray) -> float:
    """S_k(x) = sum_i 2 x_i x_{i-1} / (x_i + x_{i-1}); 0/0 terms count as 0."""
    x = np.asarray(x, dtype=float)
    num = 2.0 * x[1:] * x[:-1]
    den = x[1:] + x[:-1]
    out = np.zeros_like(den)
    np.divide(num, den, out=out, where=den > 0)
    return float(out.sum())


def _harmonic_chain_grad(x: np.ndarray) -> np.ndarray:
    # d/dx_i of 2 x_i x_{i-1}/(x_i + x_{i-1}) = 2 x_{i-1}^2/(x_i + x_{i-1})^2
    g = np.zeros_like(x)
    den = x[1:] + x[:-1]
    safe = den > 0
    right = np.zeros_like(den)
    left = np.zeros_like(den)
    np.divide(2.0 * x[:-1] ** 2, den**2, out=right, where=safe)
    np.divide(2.0 * x[1:] ** 2, den**2, out=left, where=safe)
    g[1:] += right
    g[:-1] += left
    return g


def _project_simplex(y: np.ndarray) -> np.ndarray:
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(y) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def maximize_h_simplex(k: int, cfg: OptimizerConfig | None = None
                       ) -> tuple[float, Distribution, bool]:
    """Multi-start ascent of the harmonic-mean chain functional on the simplex.

    One restart always starts from the Chebyshev distribution; the rest use
    Dirichlet-like draws from a counter-based generator keyed by (seed, index),
    so results are deterministic and restart-order independent.  Returns
    (value, argmax, converged).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if cfg is None:
        cfg = OptimizerConfig()
    best_val, best_x = -np.inf, None
    converged = False
    for restart in range(cfg.restarts):
        if restart == 0:
            x = chebyshev_distribution(k).weights.copy()
        else:
            rng = np.random.Generator(np.random.Philox(key=[cfg.seed, restart]))
            x = rng.gamma(1.0, size=k + 1)
            x = x / x.sum()
        x = np.maximum(x, 1e-12)
        x = x / x.sum()
        val = harmonic_chain(x)
        eta = 0.5
        ok = False
        for _ in range(cfg.max_iters):
            g = _harmonic_chain_grad(x)
            if cfg.step_rule == "exponentiated_gradient":
                x_new = x * np.exp(eta * (g - g.max()))
                x_new = x_new / x_new.sum()
            else:
                x_new = _project_simplex(x + eta * g)
            v_new = harmonic_chain(x_new)
            if v_new < val:
                eta *= 0.5
                if eta < 1e-12:
                    ok = True
                    break
                continue
            gap = v_new - val
            x, val = x_new, v_new
            if gap < cfg.tol:
                ok = True
                break
        if val > best_val:
            best_val, best_x, converged = val, x, ok
    return best_val, Distribution(best_x), converged


def projected_gradient_norm(x: np.ndarray) -> float:
    """First-order stationarity measure of S_k at an interior simplex point."""
    g = _harmonic_chain_grad(np.asarray(x, dtype=float))
    g = g - g.mean()
    return float(np.linalg.norm(g))
