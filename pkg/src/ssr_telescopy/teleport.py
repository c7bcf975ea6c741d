"""End-to-end simulation of the linear-optical teleportation protocol.

Site A holds the source mode plus the N A-side ancilla modes; a discrete
Fourier transform over those N+1 modes is followed by photon counting.  The
detected arrangement fixes a phase correction at site B, after which the
surviving two-dimensional state at B carries the source coherence and is read
out by a tunable two-mode interference measurement.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .catalog import AncillaSpec
from .fock import (
    CapacityError,
    MAX_PHOTONS,
    SparseKet,
    apply_mode_unitary,
    basis_ket,
    qft_matrix,
    tensor,
    transition_amplitude,
)
from .qfi import SourceParams

MAX_ANCILLA_N = 7  # N + 1 photons must stay inside the Fock capacity


@dataclass(frozen=True)
class Arrangement:
    """Per-port photon counts after the Fourier transform at site A."""

    counts: tuple[int, ...]

    @property
    def detected_total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class DetectionList:
    """Nondecreasing list of output ports, one entry per detected photon."""

    ports: tuple[int, ...]

    @staticmethod
    def from_arrangement(arr: Arrangement) -> "DetectionList":
        ports = []
        for port, c in enumerate(arr.counts):
            ports.extend([port] * c)
        return DetectionList(tuple(ports))


@dataclass
class ConditionalState:
    """Post-teleportation 2x2 state at B for a given detected photon number."""

    sector: int
    weight: float
    matrix: np.ndarray | None  # None marks the uninformative failure sectors

    @property
    def failure(self) -> bool:
        return self.matrix is None


@dataclass
class MeasurementSetting:
    alpha: float
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= math.pi:
            raise ValueError("mixing angle must lie in [0, pi]")


def phase_correction(d: DetectionList, big_n: int) -> float:
    """Conditional phase 2*pi*(sum of ports)/(N+1), reduced mod 2*pi."""
    if any(p < 0 or p > big_n for p in d.ports):
        raise ValueError("detection ports out of range")
    return (2.0 * math.pi * sum(d.ports) / (big_n + 1)) % (2.0 * math.pi)


def _diagonal_f(f: AncillaSpec) -> np.ndarray:
    if not f.is_diagonal:
        raise ValueError("teleportation requires a diagonal (fixed-N) ancilla")
    return f.diagonal_amplitudes()


def sector_weight(f: AncillaSpec, n: int) -> float:
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    if n == 0:
        return abs(fv[0]) ** 2 / 2.0
    if n == big_n + 1:
        return abs(fv[big_n]) ** 2 / 2.0
    return (abs(fv[n]) ** 2 + abs(fv[n - 1]) ** 2) / 2.0


def conditional_state(f: AncillaSpec, p: SourceParams, n: int) -> ConditionalState:
    """The 2x2 state at B given n photons detected at A (basis: b_0 / b_n occupied)."""
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    if n < 0 or n > big_n + 1:
        raise ValueError("sector out of range")
    w = sector_weight(f, n)
    if n == 0 or n == big_n + 1:
        return ConditionalState(n, w, None)
    fn, fm = fv[n], fv[n - 1]
    g = p.g
    den = abs(fn) ** 2 + abs(fm) ** 2
    if den == 0:
        return ConditionalState(n, 0.0, None)
    mat = np.array(
        [
            [abs(fn) ** 2, fn * np.conj(fm) * g],
            [np.conj(fn) * fm * np.conj(g), abs(fm) ** 2],
        ],
        dtype=complex,
    ) / den
    return ConditionalState(n, w, mat)


@dataclass
class ArrangementRecord:
    sector: int
    arrangement: Arrangement
    detection: DetectionList
    phase: float
    amp_b0: complex  # expansion amplitude of the source-photon-at-B branch
    amp_bn: complex  # expansion amplitude of the teleported branch
    c0: complex      # permanent-based single-branch amplitudes
    c1: complex


def _joint_pure_state(f: AncillaSpec, theta: float) -> tuple[SparseKet, int]:
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    if big_n > MAX_ANCILLA_N or big_n + 1 > MAX_PHOTONS:
        raise CapacityError(f"ancilla photon number {big_n} exceeds pipeline capacity")
    if f.mode_layout != "one_photon_per_mode":
        raise ValueError("pipeline simulates the one-photon-per-mode layout")
    # phase -theta so that the pure-state density matches [[1, g], [g*, 1]]/2
    # in the {|0_A 1_B>, |1_A 0_B>} ordering at |g| = 1
    src = (basis_ket((0,), (1,)) + basis_ket((1,), (0,)).scaled(cmath.exp(-1j * theta)))
    src = src.scaled(1.0 / math.sqrt(2.0))
    return tensor(src, f.to_ket()), big_n


def simulate_pipeline(f: AncillaSpec, p: SourceParams) -> list[ArrangementRecord]:
    """Run the Fourier-and-detect stage for every photon-number sector at A.

    Returns one record per arrangement with both the creation-operator
    expansion amplitudes and the independent permanent-based amplitudes.
    """
    joint, big_n = _joint_pure_state(f, p.theta)
    fourier = qft_matrix(big_n + 1)
    transformed = apply_mode_unitary(joint, fourier, "a")

    # group transformed amplitudes by (A arrangement, B occupation)
    by_arr: dict[tuple[int, tuple[int, ...]], dict[tuple[int, ...], complex]] = {}
    for s, a in transformed.amplitudes.items():
        key = (s.n_a, s.site_a)
        by_arr.setdefault(key, {})[s.site_b] = a

    records = []
    for (n, counts), bmap in sorted(by_arr.items()):
        arr = Arrangement(counts)
        det = DetectionList.from_arrangement(arr)
        phase = phase_correction(det, big_n)
        # B occupations of the two branches (source mode first)
        b_branch0 = (1,) + (0,) * n + (1,) * (big_n - n)
        b_branch1 = (0,) + (0,) * (n - 1) + (1,) * (big_n - n + 1) if n >= 1 else None
        amp_b0 = bmap.get(b_branch0, 0.0)
        amp_bn = bmap.get(b_branch1, 0.0) if b_branch1 is not None else 0.0
        # permanent oracle for the two input configurations at A
        in0 = (0,) + (1,) * n + (0,) * (big_n - n)
        c0 = transition_amplitude(in0, counts, fourier) if n <= big_n else 0.0
        if 1 <= n <= big_n + 1:
            in1 = (1,) + (1,) * (n - 1) + (0,) * (big_n - n + 1)
            c1 = transition_amplitude(in1, counts, fourier)
        else:
            c1 = 0.0
        records.append(
            ArrangementRecord(n, arr, det, phase, complex(amp_b0), complex(amp_bn),
                              complex(c0), complex(c1))
        )
    return records


def pipeline_identity_residuals(records: list[ArrangementRecord], big_n: int) -> list[float]:
    """|c0 - c1 * omega^(sum of ports)| per arrangement where both branches exist."""
    omega = cmath.exp(2j * math.pi / (big_n + 1))
    out = []
    for r in records:
        if not 1 <= r.sector <= big_n:
            continue  # edge sectors carry a single branch; no identity to check
        out.append(abs(r.c0 - r.c1 * omega ** sum(r.detection.ports)))
    return out


def reconstruct_conditional(f: AncillaSpec, p: SourceParams,
                            records: list[ArrangementRecord], n: int) -> ConditionalState:
    """Recombine the phase-corrected arrangements of sector n.

    Cross-validates conditional_state: after the conditional phase every
    arrangement collapses onto the same two-dimensional B state up to a global
    phase, so the weighted mixture over arrangements reproduces it exactly.
    The mixed-source density follows by scaling the pure-state coherence by
    the visibility modulus.
    """
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    if not 1 <= n <= big_n:
        raise ValueError("reconstruction applies to informative sectors only")
    rho = np.zeros((2, 2), dtype=complex)
    for r in records:
        if r.sector != n:
            continue
        pair = np.array([r.amp_b0, r.amp_bn * cmath.exp(1j * r.phase)])
        rho += np.outer(pair, pair.conj())
    weight = float(np.trace(rho).real)
    if weight == 0:
        return ConditionalState(n, 0.0, None)
    rho /= weight
    rho[0, 1] *= p.g_mod
    rho[1, 0] *= p.g_mod
    return ConditionalState(n, weight, rho)


def _branch_coeffs(fv: np.ndarray, n: int) -> tuple[float, float, float, float]:
    wn = abs(fv[n]) ** 2
    wm = abs(fv[n - 1]) ** 2
    den = wn + wm
    d = (wn - wm) / den
    c = 2.0 * abs(fv[n]) * abs(fv[n - 1]) / den
    return wn, wm, d, c


def branch_phase(fv: np.ndarray, n: int) -> float:
    return cmath.phase(fv[n] * np.conj(fv[n - 1]))


def measurement_probs(f: AncillaSpec, p: SourceParams, n: int,
                      ms: MeasurementSetting) -> tuple[float, float]:
    """Outcome probabilities (P_plus, P_minus) of the sector-n interference
    measurement, including the epsilon detection weight."""
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    if not 1 <= n <= big_n:
        raise ValueError("measurement applies to informative sectors only")
    _, _, d, c = _branch_coeffs(fv, n)
    phi = branch_phase(fv, n)
    pn = sector_weight(f, n)
    interf = (math.cos(ms.alpha) * d
              + math.sin(ms.alpha) * c * p.g_mod * math.cos(p.theta + phi - ms.delta))
    base = p.epsilon * pn / 2.0
    return base * (1.0 + interf), base * (1.0 - interf)


def optimal_settings(param: str, f: AncillaSpec, n: int,
                     p: SourceParams) -> MeasurementSetting:
    """Per-sector optimal interference settings at the true parameter point."""
    fv = _diagonal_f(f)
    phi = branch_phase(fv, n)
    if param == "theta":
        return MeasurementSetting(math.pi / 2.0, p.theta + phi + math.pi / 2.0)
    if param == "g_mod":
        wn = abs(fv[n]) ** 2
        wm = abs(fv[n - 1]) ** 2
        num = 2.0 * abs(fv[n]) * abs(fv[n - 1])
        den = (wn - wm) * p.g_mod
        alpha = math.pi / 2.0 if den == 0 else math.atan2(num, den)
        return MeasurementSetting(alpha, p.theta + phi)
    raise ValueError("param must be 'g_mod' or 'theta'")


@dataclass
class FisherReport:
    f_gmod: float
    f_theta: float
    ratio_gmod: float
    ratio_theta: float

    @property
    def ratio(self) -> float:
        vals = [r for r in (self.ratio_gmod, self.ratio_theta) if not math.isnan(r)]
        return min(vals) if vals else math.nan


def _prob_derivative(f: AncillaSpec, p: SourceParams, n: int,
                     ms: MeasurementSetting, param: str) -> float:
    fv = _diagonal_f(f)
    _, _, _, c = _branch_coeffs(fv, n)
    phi = branch_phase(fv, n)
    pn = sector_weight(f, n)
    base = p.epsilon * pn / 2.0
    if param == "g_mod":
        return base * math.sin(ms.alpha) * c * math.cos(p.theta + phi - ms.delta)
    if param == "theta":
        return -base * math.sin(ms.alpha) * c * p.g_mod * math.sin(p.theta + phi - ms.delta)
    raise ValueError("param must be 'g_mod' or 'theta'")


def _fi_one_param(f: AncillaSpec, p: SourceParams, param: str,
                  settings: dict[int, MeasurementSetting] | None) -> float:
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    total = 0.0
    for n in range(1, big_n + 1):
        if abs(fv[n]) ** 2 + abs(fv[n - 1]) ** 2 == 0:
            continue
        ms = settings[n] if settings else optimal_settings(param, f, n, p)
        pp, pm = measurement_probs(f, p, n, ms)
        dp = _prob_derivative(f, p, n, ms, param)
        for prob, dd in ((pp, dp), (pm, -dp)):
            if prob > 0:
                total += dd * dd / prob
    return total


def fisher_information(f: AncillaSpec, p: SourceParams,
                       settings: dict[str, dict[int, MeasurementSetting]] | None = None
                       ) -> FisherReport:
    """Classical Fisher information of the full protocol for both parameters.

    Each parameter is evaluated at its own per-sector settings (the optimal
    ones unless overridden).  Ratios are relative to the unconstrained
    first-order optimum.
    """
    if p.epsilon > 0.05:
        raise ValueError("first-order model requires epsilon <= 0.05")
    f_gmod = _fi_one_param(f, p, "g_mod", settings.get("g_mod") if settings else None)
    f_theta = _fi_one_param(f, p, "theta", settings.get("theta") if settings else None)
    ratio_gmod = (f_gmod * (1.0 - p.g_mod**2) / p.epsilon
                  if p.g_mod < 1.0 else math.nan)
    ratio_theta = (f_theta / (p.g_mod**2 * p.epsilon)
                   if p.g_mod > 0.0 else math.nan)
    return FisherReport(f_gmod, f_theta, ratio_gmod, ratio_theta)


def failure_probability(f: AncillaSpec) -> float:
    """Weight of the uninformative edge sectors (no photon at A or at B)."""
    fv = _diagonal_f(f)
    big_n = len(fv) - 1
    return sector_weight(f, 0) + sector_weight(f, big_n + 1)
