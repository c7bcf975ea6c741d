"""Fock-state algebra: permanents, linear-optical transforms, cross-validation."""

import math
from itertools import permutations

import numpy as np
import pytest

from ssr_telescopy.fock import (
    BipartiteFockState,
    CapacityError,
    ModeUnitary,
    ShapeError,
    SparseKet,
    apply_mode_unitary,
    basis_ket,
    inner,
    occupations_with_total,
    permanent,
    qft_matrix,
    tensor,
    transition_amplitude,
    vacuum,
)


def brute_permanent(m: np.ndarray) -> complex:
    n = m.shape[0]
    return sum(
        math.prod(m[i, p[i]] for i in range(n)) for p in permutations(range(n))
    )


def random_unitary(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return ModeUnitary(q * (np.diagonal(r) / np.abs(np.diagonal(r))), dim)


class TestPermanent:
    def test_identity_and_empty(self):
        assert permanent(np.eye(3)) == pytest.approx(1.0)
        assert permanent(np.zeros((0, 0))) == pytest.approx(1.0)

    def test_two_by_two(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert permanent(m) == pytest.approx(1 * 4 + 2 * 3)

    def test_all_ones(self):
        for n in range(1, 6):
            assert permanent(np.ones((n, n))) == pytest.approx(math.factorial(n))

    def test_against_brute_force(self):
        rng = np.random.Generator(np.random.Philox(key=7))
        for n in range(1, 6):
            for _ in range(5):
                m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
                assert permanent(m) == pytest.approx(brute_permanent(m), abs=1e-10)

    def test_row_permutation_invariance(self):
        rng = np.random.Generator(np.random.Philox(key=8))
        m = rng.normal(size=(4, 4))
        p = rng.permutation(4)
        assert permanent(m[p]) == pytest.approx(permanent(m))
        assert permanent(m[:, p]) == pytest.approx(permanent(m))

    def test_multilinearity_in_rows(self):
        rng = np.random.Generator(np.random.Philox(key=9))
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        m2 = m.copy()
        m2[1] *= 2.5
        assert permanent(m2) == pytest.approx(2.5 * permanent(m))

    def test_shape_and_capacity_errors(self):
        with pytest.raises(ShapeError):
            permanent(np.ones((2, 3)))
        with pytest.raises(CapacityError):
            permanent(np.ones((13, 13)))


class TestQft:
    def test_unitary_and_entries(self):
        for d in (1, 2, 3, 5):
            u = qft_matrix(d)
            np.testing.assert_allclose(
                u.matrix.conj().T @ u.matrix, np.eye(d), atol=1e-12
            )
            assert u.matrix[1 % d, 1 % d] == pytest.approx(
                np.exp(2j * np.pi / d) / math.sqrt(d) if d > 1 else 1.0
            )

    def test_invalid_dimension(self):
        with pytest.raises(ValueError):
            qft_matrix(0)


class TestTransitionAmplitude:
    def test_hong_ou_mandel(self):
        bs = ModeUnitary(np.array([[1, 1], [1, -1]]) / math.sqrt(2), 2)
        assert transition_amplitude((1, 1), (1, 1), bs) == pytest.approx(0.0, abs=1e-14)
        assert abs(transition_amplitude((1, 1), (2, 0), bs)) == pytest.approx(
            1 / math.sqrt(2)
        )
        assert abs(transition_amplitude((1, 1), (0, 2), bs)) == pytest.approx(
            1 / math.sqrt(2)
        )

    def test_photon_number_mismatch_is_exact_zero(self):
        u = qft_matrix(3)
        assert transition_amplitude((1, 0, 0), (1, 1, 0), u) == 0.0

    def test_vacuum(self):
        u = qft_matrix(2)
        assert transition_amplitude((0, 0), (0, 0), u) == pytest.approx(1.0)

    def test_completeness(self):
        # probabilities over all outputs sum to 1 for a fixed input
        rng = np.random.Generator(np.random.Philox(key=10))
        u = random_unitary(3, rng)
        total = sum(
            abs(transition_amplitude((2, 1, 0), out, u)) ** 2
            for out in occupations_with_total(3, 3)
        )
        assert total == pytest.approx(1.0, abs=1e-12)


class TestApplyModeUnitary:
    def test_norm_preservation_random(self):
        rng = np.random.Generator(np.random.Philox(key=11))
        for trial in range(300):
            d = int(rng.integers(1, 5))
            n_states = int(rng.integers(1, 4))
            amps = {}
            for _ in range(n_states):
                occ_a = tuple(int(x) for x in rng.integers(0, 2, size=d))
                occ_b = tuple(int(x) for x in rng.integers(0, 2, size=2))
                amps[BipartiteFockState(occ_a, occ_b)] = complex(
                    rng.normal(), rng.normal()
                )
            ket = SparseKet(amps).normalized()
            u = random_unitary(d, rng)
            out = apply_mode_unitary(ket, u, "a")
            assert out.norm() == pytest.approx(1.0, abs=1e-10)

    def test_matches_permanent_route(self):
        rng = np.random.Generator(np.random.Philox(key=12))
        u = random_unitary(4, rng)
        for occ in ((1, 1, 1, 0), (2, 0, 1, 0), (0, 3, 0, 0)):
            ket = apply_mode_unitary(basis_ket(occ, ()), u, "a")
            for s, a in ket.amplitudes.items():
                oracle = transition_amplitude(occ, s.site_a, u)
                assert a == pytest.approx(oracle, abs=1e-10)

    def test_site_b_and_mode_subset(self):
        bs = ModeUnitary(np.array([[1, 1], [1, -1]]) / math.sqrt(2), 2)
        ket = basis_ket((0,), (1, 1, 5))
        out = apply_mode_unitary(ket, bs, "b", modes=(0, 1))
        occs = {s.site_b for s in out.amplitudes}
        assert occs == {(2, 0, 5), (0, 2, 5)}

    def test_shape_error(self):
        bs = ModeUnitary(np.eye(2), 2)
        with pytest.raises(ShapeError):
            apply_mode_unitary(basis_ket((1,), ()), bs, "a")


class TestSparseKet:
    def test_drop_tolerance_and_norm(self):
        s = BipartiteFockState((1,), (0,))
        t = BipartiteFockState((0,), (1,))
        ket = SparseKet({s: 1.0, t: 1e-16})
        assert t not in ket.amplitudes
        assert ket.norm() == pytest.approx(1.0)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            basis_ket((13,), ())

    def test_tensor_and_inner(self):
        a = basis_ket((1,), (0,))
        b = basis_ket((0, 2), (1,))
        t = tensor(a, b)
        (state,) = t.amplitudes
        assert state.site_a == (1, 0, 2)
        assert state.site_b == (0, 1)
        assert inner(t, t) == pytest.approx(1.0)

    def test_inner_shape_mismatch(self):
        with pytest.raises(ShapeError):
            inner(basis_ket((1,), ()), basis_ket((1, 0), ()))

    def test_vacuum_and_compositions(self):
        assert vacuum(2, 1).norm() == pytest.approx(1.0)
        occs = occupations_with_total(3, 2)
        assert len(occs) == 6
        assert all(sum(o) == 2 for o in occs)
