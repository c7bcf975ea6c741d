"""Exact multimode bosonic Fock-state algebra for two telescope sites.

States are sparse maps over bipartite occupation-number basis kets.  Linear
optical mode transformations are available through two independent routes:
direct creation-operator expansion and permanent-based transition amplitudes,
which must agree and therefore cross-validate each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import factorial, prod, sqrt

import numpy as np

# Desk-scale capacity caps: permanent cost grows as 2^n, and every acceptance
# target fits well inside N <= 8 total ancilla photons.
MAX_PHOTONS = 12
MAX_MODES_PER_SITE = 12

DROP_TOL = 1e-14
UNITARITY_TOL = 1e-12


class CapacityError(ValueError):
    """Raised when a state or matrix exceeds the configured exact-numerics caps."""


class ShapeError(ValueError):
    """Raised on mode-count or matrix-shape mismatches."""


@dataclass(frozen=True)
class BipartiteFockState:
    """Occupation numbers of all modes at site A and at site B."""

    site_a: tuple[int, ...]
    site_b: tuple[int, ...]

    def __post_init__(self):
        if any(n < 0 for n in self.site_a) or any(n < 0 for n in self.site_b):
            raise ValueError("occupation numbers must be non-negative")

    @property
    def n_a(self) -> int:
        return sum(self.site_a)

    @property
    def n_b(self) -> int:
        return sum(self.site_b)

    @property
    def total(self) -> int:
        return self.n_a + self.n_b

    def sort_key(self):
        return (self.site_a, self.site_b)


def local_photon_numbers(s: BipartiteFockState) -> tuple[int, int]:
    return s.n_a, s.n_b


@dataclass
class SparseKet:
    """Sparse pure state: map from basis ket to complex amplitude.

    Amplitudes below ``tolerance`` are dropped on construction and after every
    expansion; this bounds support growth without affecting 1e-10 checks.
    """

    amplitudes: dict[BipartiteFockState, complex] = field(default_factory=dict)
    tolerance: float = DROP_TOL

    def __post_init__(self):
        self.amplitudes = {
            s: complex(a) for s, a in self.amplitudes.items() if abs(a) > self.tolerance
        }
        for s in self.amplitudes:
            if s.total > MAX_PHOTONS:
                raise CapacityError(f"state exceeds {MAX_PHOTONS} photons")
            if len(s.site_a) > MAX_MODES_PER_SITE or len(s.site_b) > MAX_MODES_PER_SITE:
                raise CapacityError(f"more than {MAX_MODES_PER_SITE} modes per site")

    def norm(self) -> float:
        return sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self) -> "SparseKet":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return SparseKet({s: a / n for s, a in self.amplitudes.items()}, self.tolerance)

    def scaled(self, c: complex) -> "SparseKet":
        return SparseKet({s: c * a for s, a in self.amplitudes.items()}, self.tolerance)

    def __add__(self, other: "SparseKet") -> "SparseKet":
        out = dict(self.amplitudes)
        for s, a in other.amplitudes.items():
            out[s] = out.get(s, 0.0) + a
        return SparseKet(out, min(self.tolerance, other.tolerance))

    def items(self):
        return sorted(self.amplitudes.items(), key=lambda kv: kv[0].sort_key())


@dataclass(frozen=True)
class ModeUnitary:
    """A unitary matrix acting on a declared number of optical modes."""

    matrix: np.ndarray
    dimension: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError("mode unitary must be square")
        if m.shape[0] != self.dimension:
            raise ShapeError("declared dimension does not match matrix")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(self.dimension)))
        if dev >= UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary (deviation {dev:.2e})")
        object.__setattr__(self, "matrix", m)


def qft_matrix(d: int) -> ModeUnitary:
    """Discrete Fourier transform on d modes: entry (p, q) = exp(2*pi*i*p*q/d)/sqrt(d)."""
    if d < 1:
        raise ValueError("QFT dimension must be >= 1")
    p, q = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return ModeUnitary(np.exp(2j * np.pi * p * q / d) / sqrt(d), d)


def permanent(m: np.ndarray) -> complex:
    """Matrix permanent by Ryser's inclusion-exclusion with Gray-code updates."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError("permanent requires a square matrix")
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n > MAX_PHOTONS:
        raise CapacityError(f"permanent limited to dimension {MAX_PHOTONS}")
    total = 0.0 + 0j
    row_sum = np.zeros(n, dtype=complex)
    subset = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = gray ^ subset
        j = changed.bit_length() - 1
        if gray & changed:
            row_sum += m[:, j]
        else:
            row_sum -= m[:, j]
        subset = gray
        sign = -1.0 if (n - bin(gray).count("1")) % 2 else 1.0
        total += sign * np.prod(row_sum)
    return complex(total)


def _repeat_indices(occ: tuple[int, ...]) -> list[int]:
    out = []
    for i, n in enumerate(occ):
        out.extend([i] * n)
    return out


def transition_amplitude(
    input_occ: tuple[int, ...], output_occ: tuple[int, ...], u: ModeUnitary
) -> complex:
    """<output| U |input> for a linear-optical unitary via the permanent formula.

    Returns exactly 0 on photon-number mismatch (orthogonal sectors).
    """
    if len(input_occ) != u.dimension or len(output_occ) != u.dimension:
        raise ShapeError("occupation vectors must cover all modes of the unitary")
    n_in, n_out = sum(input_occ), sum(output_occ)
    if n_in != n_out:
        return 0.0 + 0j
    if n_in > MAX_PHOTONS:
        raise CapacityError(f"transition amplitude limited to {MAX_PHOTONS} photons")
    if n_in == 0:
        return 1.0 + 0j
    rows = _repeat_indices(output_occ)
    cols = _repeat_indices(input_occ)
    sub = u.matrix[np.ix_(rows, cols)]
    norm = sqrt(
        prod(factorial(n) for n in input_occ) * prod(factorial(n) for n in output_occ)
    )
    return permanent(sub) / norm


def _expand_occupation(
    occ: tuple[int, ...], u: np.ndarray
) -> dict[tuple[int, ...], complex]:
    """Expand prod_p (sum_q U[q,p] a_q^dag)^{n_p} |0> over output occupations."""
    d = len(occ)
    states: dict[tuple[int, ...], complex] = {tuple([0] * d): 1.0 + 0j}
    pref = 1.0 / sqrt(prod(factorial(n) for n in occ))
    for p, n_p in enumerate(occ):
        col = u[:, p]
        for _ in range(n_p):
            nxt: dict[tuple[int, ...], complex] = {}
            for s, a in states.items():
                for q in range(d):
                    c = col[q]
                    if c == 0:
                        continue
                    t = list(s)
                    t[q] += 1
                    key = tuple(t)
                    nxt[key] = nxt.get(key, 0.0) + a * c * sqrt(t[q])
            states = nxt
    return {s: a * pref for s, a in states.items()}


def apply_mode_unitary(
    state: SparseKet, u: ModeUnitary, site: str, modes: tuple[int, ...] | None = None
) -> SparseKet:
    """Apply a linear-optical unitary to a subset of modes at one site.

    ``site`` is "a" or "b"; ``modes`` indexes the site's modes covered by ``u``
    (defaults to all of them).  Implemented by multinomial creation-operator
    substitution; agrees entrywise with :func:`transition_amplitude`.
    """
    if site not in ("a", "b"):
        raise ValueError("site must be 'a' or 'b'")
    out: dict[BipartiteFockState, complex] = {}
    for s, amp in state.amplitudes.items():
        occ_full = s.site_a if site == "a" else s.site_b
        sel = tuple(range(len(occ_full))) if modes is None else modes
        if len(sel) != u.dimension:
            raise ShapeError("mode subset does not match unitary dimension")
        sub_occ = tuple(occ_full[i] for i in sel)
        if sum(sub_occ) > MAX_PHOTONS:
            raise CapacityError("expansion exceeds photon capacity")
        for new_sub, c in _expand_occupation(sub_occ, u.matrix).items():
            occ = list(occ_full)
            for i, m in zip(sel, new_sub):
                occ[i] = m
            occ_t = tuple(occ)
            ns = (
                BipartiteFockState(occ_t, s.site_b)
                if site == "a"
                else BipartiteFockState(s.site_a, occ_t)
            )
            out[ns] = out.get(ns, 0.0) + amp * c
    return SparseKet(out, state.tolerance)


def tensor(a: SparseKet, b: SparseKet) -> SparseKet:
    """Tensor product, concatenating mode lists at each site (a's modes first)."""
    out: dict[BipartiteFockState, complex] = {}
    for sa, va in a.amplitudes.items():
        for sb, vb in b.amplitudes.items():
            s = BipartiteFockState(sa.site_a + sb.site_a, sa.site_b + sb.site_b)
            out[s] = out.get(s, 0.0) + va * vb
    return SparseKet(out, min(a.tolerance, b.tolerance))


def inner(a: SparseKet, b: SparseKet) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    keys = a.amplitudes.keys() & b.amplitudes.keys()
    if a.amplitudes and b.amplitudes and not keys:
        sa = next(iter(a.amplitudes))
        sb = next(iter(b.amplitudes))
        if len(sa.site_a) != len(sb.site_a) or len(sa.site_b) != len(sb.site_b):
            raise ShapeError("states live on different mode counts")
    return sum(np.conj(a.amplitudes[k]) * b.amplitudes[k] for k in keys)


def basis_ket(site_a: tuple[int, ...], site_b: tuple[int, ...]) -> SparseKet:
    return SparseKet({BipartiteFockState(tuple(site_a), tuple(site_b)): 1.0 + 0j})


def vacuum(modes_a: int, modes_b: int) -> SparseKet:
    return basis_ket((0,) * modes_a, (0,) * modes_b)


def occupations_with_total(n_modes: int, total: int) -> list[tuple[int, ...]]:
    """All weak compositions of ``total`` photons into ``n_modes`` modes."""
    if n_modes == 0:
        return [()] if total == 0 else []
    out = []
    for slots in combinations_with_replacement(range(n_modes), total):
        occ = [0] * n_modes
        for i in slots:
            occ[i] += 1
        out.append(tuple(occ))
    return sorted(out)
