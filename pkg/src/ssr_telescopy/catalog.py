"""Constructors for the ancilla families used in entanglement-assisted
telescopy, their internal mode layouts, and closed-form figure-of-merit
expressions used for cross-validation.

All families reduce, for the information-ratio formula, to the sector
amplitudes f_{n,m} (n photons at site A, m at site B).  The internal mode
configuration only matters for end-to-end simulation, where it is provably
irrelevant to the ratio; the catalog keeps it as metadata so that invariance
can be exercised numerically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, cosh, exp, factorial, pi, sinh, sqrt, tanh
from itertools import combinations

import numpy as np

from .fock import SparseKet, basis_ket, MAX_PHOTONS, CapacityError

NORM_TOL = 1e-10
TAIL_WEIGHT = 1e-12

KINDS = (
    "gjc",
    "n_copy_spe",
    "klm",
    "tri_intensity",
    "tri_amplitude",
    "optimal_klm",
    "tmsv",
    "tmsv_with_reference",
    "coherent_pair",
    "tpe",
    "noon",
    "custom",
)

LAYOUTS = ("single_mode_pair", "one_photon_per_mode", "permuted_superposition")


class NormalizationError(ValueError):
    pass


@dataclass
class SqueezedParams:
    """Two-mode squeezed vacuum parameters with Fock truncation."""

    r: float
    truncation: int = 0
    alpha: complex | None = None

    @property
    def mean_n(self) -> float:
        return 2.0 * sinh(self.r) ** 2

    def __post_init__(self):
        if self.truncation == 0 and self.r > 0:
            # smallest cutoff with truncated tail weight below TAIL_WEIGHT
            t2 = tanh(self.r) ** 2
            w, n, acc = 1.0 / cosh(self.r) ** 2, 0, 0.0
            while acc + w < 1.0 - TAIL_WEIGHT:
                acc += w
                w *= t2
                n += 1
            self.truncation = n


@dataclass
class AncillaSpec:
    """Sector amplitudes f_{n,m} plus a mode-layout tag.

    ``amplitudes`` maps (n, m) -> complex.  For layouts other than
    ``single_mode_pair`` the support must be diagonal (n + m = N fixed).
    """

    kind: str
    amplitudes: dict[tuple[int, int], complex]
    photon_cap: int
    mode_layout: str = "single_mode_pair"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ancilla kind {self.kind!r}")
        if self.mode_layout not in LAYOUTS:
            raise ValueError(f"unknown mode layout {self.mode_layout!r}")
        norm2 = sum(abs(a) ** 2 for a in self.amplitudes.values())
        if abs(norm2 - 1.0) > NORM_TOL:
            raise NormalizationError(f"amplitudes have norm^2 {norm2!r}")
        if any(n + m > self.photon_cap for n, m in self.amplitudes):
            raise ValueError("support exceeds declared photon cap")

    @property
    def is_diagonal(self) -> bool:
        totals = {n + m for n, m in self.amplitudes}
        return len(totals) <= 1

    def diagonal_amplitudes(self) -> np.ndarray:
        """Amplitudes f_0..f_N along the fixed-total diagonal (n, N - n)."""
        if not self.is_diagonal:
            raise ValueError("spec is not supported on a single total photon number")
        total = next(iter({n + m for n, m in self.amplitudes}), 0)
        f = np.zeros(total + 1, dtype=complex)
        for (n, m), a in self.amplitudes.items():
            f[n] = a
        return f

    def sector_weights(self) -> dict[tuple[int, int], float]:
        return {nm: abs(a) ** 2 for nm, a in self.amplitudes.items()}

    def to_ket(self) -> SparseKet:
        """Concrete Fock-space realization of the declared mode layout."""
        if self.mode_layout == "single_mode_pair":
            out = SparseKet()
            for (n, m), a in self.amplitudes.items():
                out = out + basis_ket((n,), (m,)).scaled(a)
            return out
        f = self.diagonal_amplitudes()
        big_n = len(f) - 1
        if big_n == 0:
            return basis_ket((), ())
        out = SparseKet()
        if self.mode_layout == "one_photon_per_mode":
            for n, a in enumerate(f):
                if a == 0:
                    continue
                occ_a = (1,) * n + (0,) * (big_n - n)
                occ_b = (0,) * n + (1,) * (big_n - n)
                out = out + basis_ket(occ_a, occ_b).scaled(a)
            return out
        # permuted_superposition: symmetric sum over which n of the N mode
        # pairs carry the A-side photon
        for n, a in enumerate(f):
            if a == 0:
                continue
            pref = a / sqrt(comb(big_n, n))
            for chosen in combinations(range(big_n), n):
                occ_a = tuple(1 if i in chosen else 0 for i in range(big_n))
                occ_b = tuple(0 if i in chosen else 1 for i in range(big_n))
                out = out + basis_ket(occ_a, occ_b).scaled(pref)
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "amplitudes": [
                    {"n": n, "m": m, "re": float(a.real), "im": float(a.imag)}
                    for (n, m), a in sorted(self.amplitudes.items())
                ],
                "layout": self.mode_layout,
            }
        )

    @staticmethod
    def from_json(text: str) -> "AncillaSpec":
        data = json.loads(text)
        amps = {
            (int(e["n"]), int(e["m"])): complex(e["re"], e.get("im", 0.0))
            for e in data["amplitudes"]
        }
        cap = max((n + m for n, m in amps), default=0)
        return AncillaSpec(
            kind=data.get("kind", "custom"),
            amplitudes=amps,
            photon_cap=cap,
            mode_layout=data.get("layout", "single_mode_pair"),
        )


def sector_ratio(weights: dict[tuple[int, int], float]) -> float:
    """Information ratio of an ancilla from its sector weights |f_{n,m}|^2.

    Sums, over all adjacent sector pairs, the harmonic-mean coherence term
    2 w(n, m-1) w(n-1, m) / (w(n, m-1) + w(n-1, m)); zero-denominator terms
    contribute 0.
    """
    total = 0.0
    support = set(weights)
    terms = {(a, b + 1) for a, b in support} | {(a + 1, b) for a, b in support}
    for n, m in sorted(terms):
        if n < 1 or m < 1:
            continue
        w1 = weights.get((n, m - 1), 0.0)
        w2 = weights.get((n - 1, m), 0.0)
        if w1 + w2 > 0.0:
            total += 2.0 * w1 * w2 / (w1 + w2)
    return total


def _diag_spec(kind: str, f: np.ndarray, layout: str, **params) -> AncillaSpec:
    f = np.asarray(f, dtype=complex)
    f = f / np.linalg.norm(f)
    big_n = len(f) - 1
    amps = {(n, big_n - n): f[n] for n in range(big_n + 1) if f[n] != 0}
    return AncillaSpec(kind, amps, big_n, layout, dict(params, N=big_n))


def _triangle(big_n: int) -> np.ndarray:
    n = np.arange(big_n + 1, dtype=float)
    return big_n / 2.0 - np.abs(big_n / 2.0 - n)


def build(kind: str, n: int | None = None, params: SqueezedParams | None = None,
          alpha: complex | None = None) -> AncillaSpec:
    """Construct a catalog ancilla; ``n`` is the photon number where applicable."""
    if kind == "gjc":
        return _diag_spec("gjc", np.array([1.0, 1.0]) / sqrt(2.0), "one_photon_per_mode")
    if kind in ("n_copy_spe", "klm", "tri_intensity", "tri_amplitude", "optimal_klm"):
        if n is None or n < 1:
            raise ValueError(f"{kind} requires photon number N >= 1")
        if n > MAX_PHOTONS:
            raise CapacityError(f"N={n} exceeds photon capacity")
        if kind == "n_copy_spe":
            f = np.sqrt([comb(n, k) / 2.0**n for k in range(n + 1)])
            return _diag_spec(kind, f, "permuted_superposition")
        if kind == "klm":
            f = np.full(n + 1, 1.0 / sqrt(n + 1))
            return _diag_spec(kind, f, "one_photon_per_mode")
        if kind == "tri_intensity":
            f = np.sqrt(_triangle(n))
            return _diag_spec(kind, f, "one_photon_per_mode")
        if kind == "tri_amplitude":
            f = _triangle(n)
            return _diag_spec(kind, f, "one_photon_per_mode")
        f = np.sin((np.arange(n + 1) + 1) * pi / (n + 2))
        return _diag_spec("optimal_klm", f, "one_photon_per_mode")
    if kind == "tmsv":
        if params is None:
            raise ValueError("tmsv requires SqueezedParams")
        t = params.truncation
        f = np.array([tanh(params.r) ** k / cosh(params.r) for k in range(t + 1)])
        f = f / np.linalg.norm(f)
        amps = {(k, k): complex(f[k]) for k in range(t + 1) if f[k] != 0}
        return AncillaSpec("tmsv", amps, 2 * t, "single_mode_pair",
                           {"r": params.r, "truncation": t})
    if kind == "tmsv_with_reference":
        if params is None or params.alpha is None:
            raise ValueError("tmsv_with_reference requires SqueezedParams with alpha")
        return _tmsv_with_reference(params)
    if kind == "coherent_pair":
        if alpha is None:
            raise ValueError("coherent_pair requires alpha")
        return _coherent_pair(alpha)
    if kind == "tpe":
        return AncillaSpec("tpe", {(1, 1): 1.0 + 0j}, 2, "single_mode_pair")
    if kind == "noon":
        if n is None or n < 1:
            raise ValueError("noon requires N >= 1")
        a = 1.0 / sqrt(2.0)
        return AncillaSpec("noon", {(n, 0): a, (0, n): a}, n, "single_mode_pair",
                           {"N": n})
    raise ValueError(f"unknown ancilla kind {kind!r}")


def _poisson_cutoff(mean: float) -> int:
    w = exp(-mean)
    acc, k = 0.0, 0
    while acc + w < 1.0 - TAIL_WEIGHT:
        acc += w
        k += 1
        w *= mean / k
    return k


def _coherent_pair(alpha: complex) -> AncillaSpec:
    r = abs(alpha) ** 2
    cut = max(1, _poisson_cutoff(r))
    amps = {}
    pref = exp(-r)
    for n in range(cut + 1):
        for m in range(cut + 1):
            a = pref * alpha ** (n + m) / sqrt(factorial(n) * factorial(m))
            if abs(a) > 0:
                amps[(n, m)] = complex(a)
    norm = sqrt(sum(abs(a) ** 2 for a in amps.values()))
    amps = {k: v / norm for k, v in amps.items()}
    return AncillaSpec("coherent_pair", amps, 2 * cut, "single_mode_pair",
                       {"alpha": alpha, "truncation": cut})


def _tmsv_with_reference(params: SqueezedParams) -> AncillaSpec:
    """TMSV plus a finite correlated coherent reference, folded to sector weights.

    Different (squeezer, reference) photon splittings contribute orthogonal
    configurations within each (n, m) sector, so the sector weight is an
    incoherent sum; the stored amplitude is its positive square root, which is
    all the ratio formula consumes.
    """
    r, alpha = params.r, params.alpha
    ra = abs(alpha) ** 2
    tcut = params.truncation if params.r > 0 else 0
    pcut = max(1, _poisson_cutoff(ra))
    tw = [tanh(r) ** (2 * k) / cosh(r) ** 2 for k in range(tcut + 1)]
    pw = [exp(-ra) * ra**k / factorial(k) for k in range(pcut + 1)]
    weights: dict[tuple[int, int], float] = {}
    for k, wk in enumerate(tw):
        for j, wj in enumerate(pw):
            for l, wl in enumerate(pw):
                key = (k + j, k + l)
                weights[key] = weights.get(key, 0.0) + wk * wj * wl
    total = sum(weights.values())
    amps = {k: complex(sqrt(v / total)) for k, v in weights.items() if v / total > 0}
    cap = max(n + m for n, m in amps)
    return AncillaSpec("tmsv_with_reference", amps, cap, "single_mode_pair",
                       {"r": r, "alpha": alpha})


def closed_ratio(kind: str, n: int | None = None,
                 params: SqueezedParams | None = None,
                 alpha: complex | None = None) -> float:
    """Closed-form information ratio where one is printed; numeric otherwise."""
    if kind == "gjc":
        return 0.5
    if kind in ("n_copy_spe", "klm"):
        if n is None:
            raise ValueError("N required")
        return n / (n + 1.0)
    if kind == "optimal_klm":
        # printed 1 - pi^2/N^2 is asymptotic only; exact value via the sum
        return sector_ratio(build(kind, n).sector_weights())
    if kind == "tri_intensity":
        if n is None:
            raise ValueError("N required")
        if n % 2:
            return sector_ratio(build(kind, n).sector_weights())
        return 1.0 - (4.0 / n**2) * sum(1.0 / (2 * i - 1) for i in range(1, n // 2 + 1))
    if kind == "tri_amplitude":
        if n is None:
            raise ValueError("N required")
        if n % 2:
            return sector_ratio(build(kind, n).sector_weights())
        s = sum(
            i**2 / 2.0 - i / 2.0 - 0.25 + 0.25 / (2 * i**2 - 2 * i + 1)
            for i in range(1, n // 2 + 1)
        )
        return 48.0 / (n * (n**2 + 2)) * s
    if kind == "coherent_pair":
        if alpha is None:
            raise ValueError("alpha required")
        r = abs(alpha) ** 2
        return 1.0 - (1.0 - exp(-2.0 * r)) / (2.0 * r)
    if kind in ("tmsv", "tpe"):
        return 0.0
    if kind == "noon":
        if n is None:
            raise ValueError("N required")
        return 0.5 if n == 1 else 0.0
    if kind == "tmsv_with_reference":
        if params is None:
            raise ValueError("SqueezedParams required")
        return sector_ratio(_tmsv_with_reference(params).sector_weights())
    raise ValueError(f"no closed ratio for kind {kind!r}")


def ncopy_fi_closed(n: int, epsilon: float, g_mod: float, phi: float) -> tuple[float, float]:
    """Fisher information (F_|g|, F_theta) of the N-copy linear-optical point
    scheme, from the printed rational-trigonometric forms; phi is the phase
    offset between the measurement delay and the source phase."""
    g, c, s2 = g_mod, np.cos(phi), np.sin(phi) ** 2
    c2 = c * c
    if n == 1:
        common = 0.5 / (1 - g * g * c2)
        return common * c2 * epsilon, common * s2 * g * g * epsilon
    if n == 2:
        common = 3.0 / ((1 - g * c) * (5 + 4 * g * c))
        return common * c2 * epsilon, common * s2 * g * g * epsilon
    if n == 3:
        common = 3.0 * (9 + 7 * g * c) / (4 * (1 - g * g * c2) * (10 + 6 * g * c))
        return common * c2 * epsilon, common * s2 * g * g * epsilon
    if n == 4:
        common = 10.0 * (16 + 9 * g * c) / (
            (1 - g * c) * (13 + 12 * g * c) * (17 + 8 * g * c)
        )
        return common * c2 * epsilon, common * s2 * g * g * epsilon
    if n == 5:
        common = 5.0 * (79 + 106 * g * c + 31 * g * g * c2) / (
            (1 - g * g * c2) * (26 + 10 * g * c) * (20 + 16 * g * c)
        )
        return common * c2 * epsilon, common * s2 * g * g * epsilon
    raise ValueError("closed forms are printed only for N in 1..5")


def cv_fi_closed(epsilon: float, g_mod: float, r: float) -> tuple[float, float]:
    """Fisher information (F_|g|, F_theta) of continuous-variable teleportation
    with squeezing r (y = 2 exp(-2r)) and an unbounded coherent reference."""
    if r < 0:
        raise ValueError("squeezing must be non-negative")
    y = 2.0 * exp(-2.0 * r)
    g = g_mod
    eps = epsilon
    f_theta = 2 * eps**2 * g**2 / (2 * y + eps * (2 + eps - eps * g**2 + 2 * y))
    num = 2 * eps**2 * (
        -eps * (2 + eps) ** 2
        + eps**3 * g**4
        - 4 * (1 + eps) * (2 + eps) * y
        - 4 * (2 + eps) * y**2
    )
    den = (
        (eps * (-1 + g**2) - 2 * y)
        * (eps * (-2 - eps + eps * g**2) - 2 * (1 + eps) * y)
        * (eps**2 * (-1 + g**2) - 4 * (1 + y) - 2 * eps * (2 + y))
    )
    f_gmod = num / den
    return f_gmod, f_theta
