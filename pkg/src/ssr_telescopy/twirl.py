"""Photon-number superselection (twirling) maps.

Twirling over unknown phases replaces a state by its block-diagonal
representative: global twirling dephases between total-photon-number
subspaces, local twirling dephases between local (n_A, n_B) sectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import BipartiteFockState, SparseKet

BLOCK_TRACE_TOL = 1e-13
HERMITICITY_TOL = 1e-12


@dataclass(frozen=True, order=True)
class SectorLabel:
    n_a: int
    n_b: int


@dataclass
class Block:
    """One subnormalized Hermitian block with its sector label and basis."""

    sector: SectorLabel
    basis: list[BipartiteFockState]
    matrix: np.ndarray

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


@dataclass
class BlockDensity:
    """List of sector-labeled blocks; the block direct sum is the twirled state."""

    blocks: list[Block]

    def total_trace(self) -> float:
        return sum(b.trace() for b in self.blocks)

    def block_map(self) -> dict[SectorLabel, Block]:
        return {b.sector: b for b in self.blocks}


MixtureLike = SparseKet | list[tuple[float, SparseKet]]


def _as_mixture(state: MixtureLike) -> list[tuple[float, SparseKet]]:
    if isinstance(state, SparseKet):
        return [(1.0, state)]
    return list(state)


def _build_blocks(
    mixture: list[tuple[float, SparseKet]],
    sector_of,
) -> BlockDensity:
    # First pass fixes a deterministic per-sector basis (lexicographic), second
    # pass accumulates sum_k w_k P v_k v_k^dag P over that basis.
    sector_states: dict = {}
    for _, ket in mixture:
        for s in ket.amplitudes:
            sector_states.setdefault(sector_of(s), set()).add(s)
    blocks = []
    for sec in sorted(sector_states):
        basis = sorted(sector_states[sec], key=lambda s: s.sort_key())
        index = {s: i for i, s in enumerate(basis)}
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for w, ket in mixture:
            v = np.zeros(len(basis), dtype=complex)
            for s, a in ket.amplitudes.items():
                if sector_of(s) == sec:
                    v[index[s]] = a
            mat += w * np.outer(v, v.conj())
        if abs(np.trace(mat)) >= BLOCK_TRACE_TOL:
            blocks.append(Block(sec, basis, mat))
    return BlockDensity(blocks)


def twirl_local(state: MixtureLike) -> BlockDensity:
    """Project onto local photon-number sectors (n_A, n_B), dropping coherences."""
    return _build_blocks(
        _as_mixture(state), lambda s: SectorLabel(s.n_a, s.n_b)
    )


def twirl_global(state: MixtureLike) -> BlockDensity:
    """Project onto total photon-number subspaces n_A + n_B."""
    return _build_blocks(
        _as_mixture(state), lambda s: SectorLabel(s.total, 0)
    )


def twirl_block_density_local(bd: BlockDensity) -> BlockDensity:
    """Re-apply the local twirl to an already block-diagonal density.

    Splits each block by the local sectors of its basis states; used for the
    idempotence and subsumption checks.
    """
    pieces: dict[SectorLabel, dict] = {}
    for b in bd.blocks:
        for i, si in enumerate(b.basis):
            sec = SectorLabel(si.n_a, si.n_b)
            piece = pieces.setdefault(sec, {})
            for j, sj in enumerate(b.basis):
                if SectorLabel(sj.n_a, sj.n_b) == sec:
                    piece[(si, sj)] = piece.get((si, sj), 0.0) + b.matrix[i, j]
    blocks = []
    for sec in sorted(pieces):
        entries = pieces[sec]
        basis = sorted({s for s, _ in entries}, key=lambda s: s.sort_key())
        index = {s: i for i, s in enumerate(basis)}
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for (si, sj), v in entries.items():
            mat[index[si], index[sj]] = v
        if abs(np.trace(mat)) >= BLOCK_TRACE_TOL:
            blocks.append(Block(sec, basis, mat))
    return BlockDensity(blocks)


def sector_filter(bd: BlockDensity, predicate) -> BlockDensity:
    """Keep only blocks whose sector satisfies ``predicate``; traces unchanged."""
    return BlockDensity([b for b in bd.blocks if predicate(b.sector)])


def validate_block_density(bd: BlockDensity, eig_floor: float = -1e-10) -> None:
    """Check Hermiticity and positive semidefiniteness of every block."""
    for b in bd.blocks:
        dev = np.max(np.abs(b.matrix - b.matrix.conj().T)) if b.matrix.size else 0.0
        if dev >= HERMITICITY_TOL:
            raise ValueError(f"block {b.sector} not Hermitian (dev {dev:.2e})")
        if b.matrix.size:
            lo = np.min(np.linalg.eigvalsh((b.matrix + b.matrix.conj().T) / 2))
            if lo < eig_floor:
                raise ValueError(f"block {b.sector} has eigenvalue {lo:.2e} < floor")
