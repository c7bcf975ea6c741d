"""Teleportation pipeline: phase corrections, conditional states, saturation."""

import cmath
import math

import numpy as np
import pytest

from ssr_telescopy.catalog import build, sector_ratio
from ssr_telescopy.qfi import SourceParams
from ssr_telescopy.teleport import (
    Arrangement,
    DetectionList,
    MeasurementSetting,
    conditional_state,
    failure_probability,
    fisher_information,
    measurement_probs,
    optimal_settings,
    phase_correction,
    pipeline_identity_residuals,
    reconstruct_conditional,
    sector_weight,
    simulate_pipeline,
)

P = SourceParams(1e-3, 0.6, 0.4)


class TestPhaseCorrection:
    def test_values(self):
        assert phase_correction(DetectionList((0,)), 1) == 0.0
        assert phase_correction(DetectionList((1,)), 1) == pytest.approx(math.pi)
        assert phase_correction(DetectionList((1, 2)), 2) == pytest.approx(
            2 * math.pi * 3 / 3 % (2 * math.pi)
        )

    def test_reduction_mod_two_pi(self):
        val = phase_correction(DetectionList((3, 3, 3)), 3)
        assert 0.0 <= val < 2 * math.pi

    def test_invalid_port(self):
        with pytest.raises(ValueError):
            phase_correction(DetectionList((5,)), 3)

    def test_detection_list_from_arrangement(self):
        d = DetectionList.from_arrangement(Arrangement((2, 0, 1)))
        assert d.ports == (0, 0, 2)


class TestConditionalStates:
    def test_weights_sum_to_one(self):
        for kind, n in (("klm", 3), ("optimal_klm", 4), ("tri_intensity", 4)):
            f = build(kind, n=n)
            total = sum(sector_weight(f, s) for s in range(n + 2))
            assert total == pytest.approx(1.0, abs=1e-14)

    def test_failure_markers(self):
        f = build("klm", n=2)
        assert conditional_state(f, P, 0).failure
        assert conditional_state(f, P, 3).failure
        assert not conditional_state(f, P, 1).failure

    def test_matrix_contents(self):
        f = build("klm", n=2)
        cs = conditional_state(f, P, 1)
        assert cs.matrix[0, 0] == pytest.approx(0.5)
        assert cs.matrix[0, 1] == pytest.approx(0.5 * P.g)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_uniform_failure_probability(self, n):
        assert failure_probability(build("klm", n=n)) == pytest.approx(
            1.0 / (n + 1), abs=1e-12
        )


class TestPipeline:
    @pytest.mark.parametrize("kind", ["klm", "optimal_klm"])
    @pytest.mark.parametrize("n", range(1, 6))
    def test_arrangement_identity(self, kind, n):
        recs = simulate_pipeline(build(kind, n=n), P)
        assert max(pipeline_identity_residuals(recs, n)) < 1e-10

    @pytest.mark.parametrize("n", range(1, 6))
    def test_permanent_matches_expansion(self, n):
        f = build("klm", n=n)
        fv = f.diagonal_amplitudes()
        phase = cmath.exp(-1j * P.theta)
        for r in simulate_pipeline(f, P):
            s = r.sector
            if s <= n:
                assert abs(fv[s] * r.c0 / math.sqrt(2) - r.amp_b0) < 1e-10
            if s >= 1:
                assert abs(phase * fv[s - 1] * r.c1 / math.sqrt(2) - r.amp_bn) < 1e-10

    @pytest.mark.parametrize("kind,n", [("klm", 2), ("klm", 4), ("optimal_klm", 3)])
    def test_reconstruction_matches_conditional_state(self, kind, n):
        f = build(kind, n=n)
        recs = simulate_pipeline(f, P)
        for s in range(1, n + 1):
            cs = conditional_state(f, P, s)
            rc = reconstruct_conditional(f, P, recs, s)
            assert rc.weight == pytest.approx(cs.weight, abs=1e-10)
            np.testing.assert_allclose(rc.matrix, cs.matrix, atol=1e-10)

    def test_sector_weights_match_pipeline(self):
        f = build("klm", n=3)
        recs = simulate_pipeline(f, P)
        for s in range(1, 4):
            w = sum(
                abs(r.amp_b0) ** 2 + abs(r.amp_bn) ** 2
                for r in recs
                if r.sector == s
            )
            assert w == pytest.approx(sector_weight(f, s), abs=1e-12)


class TestMeasurement:
    def test_probabilities_sum_to_sector_weight(self):
        f = build("klm", n=3)
        for n in (1, 2, 3):
            ms = MeasurementSetting(0.7, 1.1)
            pp, pm = measurement_probs(f, P, n, ms)
            assert pp + pm == pytest.approx(P.epsilon * sector_weight(f, n), abs=1e-15)
            assert pp >= 0 and pm >= 0

    def test_derivatives_match_finite_differences(self):
        from ssr_telescopy.teleport import _prob_derivative

        f = build("optimal_klm", n=3)
        ms = MeasurementSetting(0.9, 0.3)
        h = 1e-6
        for n in (1, 2, 3):
            for param in ("g_mod", "theta"):
                def pp(q):
                    return measurement_probs(f, q, n, ms)[0]

                if param == "g_mod":
                    fd = (pp(SourceParams(P.epsilon, P.g_mod + h, P.theta))
                          - pp(SourceParams(P.epsilon, P.g_mod - h, P.theta))) / (2 * h)
                else:
                    fd = (pp(SourceParams(P.epsilon, P.g_mod, P.theta + h))
                          - pp(SourceParams(P.epsilon, P.g_mod, P.theta - h))) / (2 * h)
                assert _prob_derivative(f, P, n, ms, param) == pytest.approx(
                    fd, rel=1e-6, abs=1e-15
                )

    def test_optimal_theta_setting(self):
        f = build("klm", n=2)
        ms = optimal_settings("theta", f, 1, P)
        assert ms.alpha == pytest.approx(math.pi / 2)
        assert ms.delta == pytest.approx(P.theta + math.pi / 2)

    def test_optimal_gmod_setting_equal_amplitudes(self):
        # uniform amplitudes: population term vanishes, interference is maximal
        f = build("klm", n=2)
        ms = optimal_settings("g_mod", f, 1, P)
        assert ms.alpha == pytest.approx(math.pi / 2)
        assert ms.delta == pytest.approx(P.theta)

    def test_setting_validation(self):
        with pytest.raises(ValueError):
            MeasurementSetting(-0.1, 0.0)


class TestFisherInformation:
    @pytest.mark.parametrize("kind,n", [
        ("klm", 1), ("klm", 3), ("optimal_klm", 2), ("optimal_klm", 4),
        ("tri_intensity", 4), ("tri_amplitude", 4),
    ])
    def test_saturates_sector_ratio(self, kind, n):
        f = build(kind, n=n)
        target = sector_ratio(f.sector_weights())
        rep = fisher_information(f, P)
        assert rep.ratio_gmod == pytest.approx(target, abs=1e-6)
        assert rep.ratio_theta == pytest.approx(target, abs=1e-6)

    def test_grid_saturation(self):
        f = build("klm", n=2)
        target = 2.0 / 3.0
        for g in np.linspace(0.1, 0.9, 5):
            for th in np.linspace(0.0, 2 * math.pi, 5, endpoint=False):
                rep = fisher_information(f, SourceParams(1e-3, float(g), float(th)))
                assert rep.ratio == pytest.approx(target, abs=1e-6)

    def test_suboptimal_settings_lose_information(self):
        f = build("klm", n=2)
        bad = {n: MeasurementSetting(0.3, 2.2) for n in (1, 2)}
        rep = fisher_information(f, P, settings={"g_mod": bad, "theta": bad})
        opt = fisher_information(f, P)
        assert rep.f_theta < opt.f_theta
        assert rep.f_gmod < opt.f_gmod

    def test_epsilon_validity_guard(self):
        with pytest.raises(ValueError):
            fisher_information(build("gjc"), SourceParams(0.2, 0.5, 0.0))

    def test_requires_diagonal_ancilla(self):
        with pytest.raises(ValueError):
            fisher_information(build("coherent_pair", alpha=1.0), P)
