"""Monte Carlo verification of the protocol's Fisher information.

Samples detection outcomes from the teleportation measurement model, fits
(|g|, theta) by maximum likelihood, and compares the empirical estimator
covariance with the Cramér–Rao bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .catalog import AncillaSpec
from .qfi import SourceParams
from .teleport import (
    MeasurementSetting,
    _branch_coeffs,
    _diagonal_f,
    branch_phase,
    failure_probability,
    measurement_probs,
    optimal_settings,
    sector_weight,
)

DIST_TOL = 1e-12
GRID_POINTS = 201
REFINE_TOL = 1e-6
WIDE_INTERVAL_G = 0.05

SettingBank = dict[int, MeasurementSetting]


@dataclass
class OutcomeCounts:
    """Tallies per (bank, sector, outcome sign); no-detection kept separately."""

    counts: dict[tuple[str, int, str], int]
    no_detection: dict[str, int]
    trials: int  # per setting bank
    seed: int

    def total(self) -> int:
        return sum(self.counts.values()) + sum(self.no_detection.values())


@dataclass
class EstimateReport:
    g_hat: float
    theta_hat: float
    covariance: np.ndarray  # empirical, across repetitions (or CRB proxy)
    crb: np.ndarray
    ratio: float
    wide_interval: bool = False
    warnings: list[str] = field(default_factory=list)


def make_setting_banks(f: AncillaSpec, p_ref: SourceParams) -> dict[str, SettingBank]:
    """In-phase (|g|-optimal) and quadrature (theta-optimal) per-sector settings
    chosen at a reference parameter point."""
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    banks: dict[str, SettingBank] = {"in_phase": {}, "quadrature": {}}
    for n in range(1, big_n + 1):
        if abs(fv[n]) ** 2 + abs(fv[n - 1]) ** 2 == 0:
            continue
        banks["in_phase"][n] = optimal_settings("g_mod", f, n, p_ref)
        banks["quadrature"][n] = optimal_settings("theta", f, n, p_ref)
    return banks


def _bank_distribution(f: AncillaSpec, p: SourceParams, bank: SettingBank
                       ) -> tuple[list[tuple[int, str]], np.ndarray]:
    """Outcome labels and probabilities for one bank, last entry = no detection."""
    labels = []
    probs = []
    for n in sorted(bank):
        pp, pm = measurement_probs(f, p, n, bank[n])
        labels.extend([(n, "+"), (n, "-")])
        probs.extend([pp, pm])
    p_fail = p.epsilon * failure_probability(f)
    labels.append((-1, "fail"))
    probs.append(p_fail)
    probs = np.array(probs)
    if np.any(probs < -DIST_TOL) or probs.sum() > 1.0 + DIST_TOL:
        raise ValueError("outcome probabilities do not form a distribution")
    probs = np.clip(probs, 0.0, None)
    return labels, probs


def sample_outcomes(f: AncillaSpec, p: SourceParams,
                    banks: dict[str, SettingBank], m: int, seed: int,
                    rep: int = 0) -> OutcomeCounts:
    """Multinomial draw of m trials per bank with counter-based randomness."""
    counts: dict[tuple[str, int, str], int] = {}
    none: dict[str, int] = {}
    for bank_idx, name in enumerate(sorted(banks)):
        labels, probs = _bank_distribution(f, p, banks[name])
        full = np.append(probs, 1.0 - probs.sum())
        # Philox keys are two 64-bit words; pack (repetition, bank) into one
        rng = np.random.Generator(np.random.Philox(key=[seed, (rep << 8) + bank_idx]))
        draw = rng.multinomial(m, full) if m > 0 else np.zeros(len(full), dtype=int)
        for (n, s), c in zip(labels, draw[:-1]):
            if c or n >= 0:
                counts[(name, n, s)] = int(c)
        none[name] = int(draw[-1])
    return OutcomeCounts(counts, none, m, seed)


def _bank_coefficients(f: AncillaSpec, bank: SettingBank):
    """Per-sector constants so P± = base (1 ± (a + b |g| cos(theta - gamma)))."""
    fv = _diagonal_f(f)
    coeffs = {}
    for n, ms in bank.items():
        _, _, d, c = _branch_coeffs(fv, n)
        phi = branch_phase(fv, n)
        coeffs[n] = (sector_weight(f, n),
                     math.cos(ms.alpha) * d,
                     math.sin(ms.alpha) * c,
                     ms.delta - phi)
    return coeffs


def _log_likelihood_grid(counts: OutcomeCounts, f: AncillaSpec,
                         banks: dict[str, SettingBank],
                         g: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Vectorized log-likelihood over broadcastable (g, theta) arrays.

    Constant factors (epsilon, sector weights, no-detection terms) are
    parameter independent and dropped.
    """
    total = np.zeros(np.broadcast(g, theta).shape)
    tiny = 1e-300
    for name, bank in banks.items():
        for n, (_, a, b, gamma) in _bank_coefficients(f, bank).items():
            interf = a + b * g * np.cos(theta - gamma)
            cp = counts.counts.get((name, n, "+"), 0)
            cm = counts.counts.get((name, n, "-"), 0)
            if cp:
                total = total + cp * np.log(np.clip(1.0 + interf, tiny, None))
            if cm:
                total = total + cm * np.log(np.clip(1.0 - interf, tiny, None))
    return total


def fisher_matrix(f: AncillaSpec, p: SourceParams,
                  banks: dict[str, SettingBank]) -> np.ndarray:
    """2x2 classical Fisher matrix of one trial summed over all banks.

    Each trial runs every bank once; per-trial information is the plain sum.
    """
    fm = np.zeros((2, 2))
    for bank in banks.values():
        for n, (pn, a, b, gamma) in _bank_coefficients(f, bank).items():
            base = p.epsilon * pn / 2.0
            interf = a + b * p.g_mod * math.cos(p.theta - gamma)
            dg = base * b * math.cos(p.theta - gamma)
            dth = -base * b * p.g_mod * math.sin(p.theta - gamma)
            for sign in (1.0, -1.0):
                prob = base * (1.0 + sign * interf)
                if prob > 0:
                    grad = np.array([sign * dg, sign * dth])
                    fm += np.outer(grad, grad) / prob
    return fm


def mle_fit(counts: OutcomeCounts, f: AncillaSpec,
            banks: dict[str, SettingBank],
            g_known: float | None = None) -> EstimateReport:
    """Maximum-likelihood estimate by coarse grid search plus local refinement.

    With ``g_known`` the fit is theta-only at the fixed modulus.  The CRB is
    evaluated at the fitted point; the covariance field holds the CRB as a
    single-dataset proxy (see monte_carlo_crb for the empirical covariance).
    """
    if not any(c > 0 for c in counts.counts.values()):
        raise ValueError("no informative counts to fit")
    gs = np.linspace(0.0, 1.0, GRID_POINTS, endpoint=False)[:, None]
    ths = np.linspace(0.0, 2.0 * math.pi, GRID_POINTS, endpoint=False)[None, :]
    if g_known is not None:
        gs = np.array([[g_known]])
    ll = _log_likelihood_grid(counts, f, banks, gs, ths)
    i, j = np.unravel_index(np.argmax(ll), ll.shape)
    g0, th0 = float(gs[i, 0]), float(ths[0, j])

    def negll(x):
        g = g_known if g_known is not None else x[0]
        th = x[-1]
        if not 0.0 <= g <= 1.0:
            return np.inf
        return -float(_log_likelihood_grid(counts, f, banks,
                                           np.array(g), np.array(th)))

    x0 = [th0] if g_known is not None else [g0, th0]
    res = minimize(negll, x0, method="Nelder-Mead",
                   options={"xatol": REFINE_TOL, "fatol": REFINE_TOL, "maxiter": 4000})
    if g_known is not None:
        g_hat, th_hat = g_known, float(res.x[0])
    else:
        g_hat, th_hat = float(res.x[0]), float(res.x[1])
    th_hat %= 2.0 * math.pi

    eps = _infer_epsilon(counts, f)
    p_hat = SourceParams(eps, min(g_hat, 1.0), th_hat)
    fm = fisher_matrix(f, p_hat, banks) * counts.trials
    crb = _safe_inverse(fm)
    warnings = []
    # theta is unidentifiable when |g| is indistinguishable from zero
    wide = g_hat < max(WIDE_INTERVAL_G, 2.0 * math.sqrt(max(crb[0, 0], 0.0)))
    if wide:
        warnings.append("likelihood nearly flat in theta at small |g|")
    return EstimateReport(g_hat, th_hat, crb.copy(), crb, 1.0, wide, warnings)


def _infer_epsilon(counts: OutcomeCounts, f: AncillaSpec) -> float:
    # all detection events (informative and failure sectors) occur with
    # total probability epsilon per trial
    detected = sum(counts.counts.values())
    trials = counts.trials * max(1, len(counts.no_detection))
    if trials == 0 or detected == 0:
        return 1e-3
    return min(0.05, detected / trials)


def _safe_inverse(fm: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(fm)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(fm)


def monte_carlo_crb(f: AncillaSpec, p: SourceParams,
                    banks: dict[str, SettingBank], m: int,
                    repetitions: int, seed: int, workers: int = 1) -> EstimateReport:
    """Repeat sample-and-fit; compare empirical covariance with (M F)^-1.

    Repetitions are independent (counter-based randomness keyed by repetition
    index), so they may run on up to ``workers`` threads; aggregation is
    order-independent.
    """

    def one(rep: int) -> tuple[float, float]:
        counts = sample_outcomes(f, p, banks, m, seed, rep=rep)
        r = mle_fit(counts, f, banks)
        dth = (r.theta_hat - p.theta + math.pi) % (2.0 * math.pi) - math.pi
        return r.g_hat, p.theta + dth

    ests = np.zeros((repetitions, 2))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rep, est in enumerate(pool.map(one, range(repetitions))):
                ests[rep] = est
    else:
        for rep in range(repetitions):
            ests[rep] = one(rep)
    cov = np.cov(ests.T)
    fm = fisher_matrix(f, p, banks) * m
    crb = _safe_inverse(fm)
    g_hat, th_hat = ests.mean(axis=0)
    ratio = float(cov[1, 1] / crb[1, 1]) if crb[1, 1] > 0 else math.nan
    return EstimateReport(float(g_hat), float(th_hat), cov, crb, ratio)
