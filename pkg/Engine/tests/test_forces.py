"""
Unit tests for the Force Model module.
"""

import math
import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from direction_field import Frame, UnknownPresetError
from forces import (
    BIO_HARMONIC_PARAMS, FORCE_PRESETS, KC_ORIGINAL_PARAMS, ForceModel, HarmonicLaw, KCLaw,
    KCParams, PiecewiseLaw, attraction, coefficient_arrays, coefficient_curve, coefficients, pair_force,
    pair_forces, preset, repulsion, with_overrides,
)
from torus import TorusVector


@pytest.fixture
def stationary():
    return preset("kc_stationary")


@pytest.fixture
def piecewise():
    return preset("kc_piecewise")


class TestParameters:
    """Tests for parameter and model validation."""

    def test_negative_parameter_rejected(self):
        with pytest.raises(ValueError, match="gamma"):
            KCParams(alpha=270, beta=0.1, gamma=-1, e_a=95, e_r=100, chi=0.2)

    def test_chi_above_one_rejected(self):
        with pytest.raises(ValueError, match="chi"):
            KCParams(alpha=270, beta=0.1, gamma=35, e_a=95, e_r=100, chi=1.5)

    def test_cutoff_range(self):
        with pytest.raises(ValueError):
            ForceModel(law=KCLaw(KC_ORIGINAL_PARAMS), cutoff=0.6)
        with pytest.raises(ValueError):
            ForceModel(law=KCLaw(KC_ORIGINAL_PARAMS), cutoff=0.0)
        assert ForceModel(law=KCLaw(KC_ORIGINAL_PARAMS), cutoff=0.5).cutoff == 0.5

    def test_eta_must_be_positive(self):
        with pytest.raises(ValueError):
            ForceModel(law=KCLaw(KC_ORIGINAL_PARAMS), eta=0.0)

    def test_piecewise_breakpoints_ordered(self):
        with pytest.raises(ValueError):
            PiecewiseLaw(KC_ORIGINAL_PARAMS, c1=0.07, c2=0.06)


class TestCoefficients:
    """Tests for the scalar coefficient functions."""

    def test_stationary_short_range(self, stationary):
        f_l, f_s = coefficients(stationary, 0.01)
        assert f_l == pytest.approx(0.0061129, abs=1e-7)
        assert f_s == pytest.approx(0.0385991, abs=1e-7)

    def test_stationary_attracts_along_l(self, stationary):
        f_l, _ = coefficients(stationary, 0.03)
        assert f_l == pytest.approx(-0.0011440, abs=1e-6)

    def test_kc_at_zero_is_beta(self):
        f_l, f_s = coefficients(preset("kc_original"), 0.0)
        assert f_l == pytest.approx(KC_ORIGINAL_PARAMS.beta)
        assert f_s == pytest.approx(KC_ORIGINAL_PARAMS.beta)

    def test_kc_channels_from_components(self):
        model = preset("kc_adapted")
        r = 0.025
        f_l, f_s = coefficients(model, r)
        f_a = float(attraction(KC_ORIGINAL_PARAMS, r))
        f_r = float(repulsion(KC_ORIGINAL_PARAMS, r))
        assert f_l == pytest.approx(0.3 * f_a + f_r, rel=1e-14)
        assert f_s == pytest.approx(KC_ORIGINAL_PARAMS.chi * f_a + f_r, rel=1e-14)

    def test_harmonic_at_zero(self):
        f_l, f_s = coefficients(preset("bio_harmonic"), 0.0)
        assert f_l == pytest.approx(0.1, rel=1e-14)
        assert f_s == pytest.approx(0.1, rel=1e-14)

    def test_harmonic_half_period(self):
        p = BIO_HARMONIC_PARAMS
        f_l, _ = coefficients(preset("bio_harmonic"), p.a_l)
        assert f_l == pytest.approx(-0.1 * math.exp(p.e_l1 * p.a_l), rel=1e-12)

    def test_negative_separation_rejected(self, stationary):
        with pytest.raises(ValueError):
            coefficients(stationary, -0.01)

    @pytest.mark.parametrize("name", sorted(FORCE_PRESETS))
    def test_every_preset_repels_at_contact(self, name):
        f_l, f_s = coefficients(preset(name), 0.0)
        assert f_l > 0
        assert f_s > 0


class TestPiecewise:
    """Tests for the interpolated l-channel."""

    def test_matches_kc_below_c1(self, piecewise):
        params = piecewise.law.params
        r = 0.03
        f_l, _ = coefficients(piecewise, r)
        assert f_l == pytest.approx(float(attraction(params, r) + repulsion(params, r)), rel=1e-14)

    def test_negated_beyond_c2(self, piecewise):
        params = piecewise.law.params
        r = 0.09
        f_l, _ = coefficients(piecewise, r)
        assert f_l == pytest.approx(-float(attraction(params, r) + repulsion(params, r)), rel=1e-14)

    def test_bridge_is_linear(self, piecewise):
        left, _ = coefficients(piecewise, 0.06)
        right, _ = coefficients(piecewise, 0.07)
        middle, _ = coefficients(piecewise, 0.065)
        assert middle == pytest.approx((left + right) / 2, abs=1e-15)

    def test_continuous_at_breakpoints(self, piecewise):
        eps = 1e-9
        for c in (0.06, 0.07):
            below, _ = coefficients(piecewise, c - eps)
            above, _ = coefficients(piecewise, c + eps)
            assert below == pytest.approx(above, abs=1e-9)

    def test_s_channel_unchanged(self, piecewise, stationary):
        for r in (0.01, 0.065, 0.09):
            assert coefficients(piecewise, r)[1] == pytest.approx(coefficients(stationary, r)[1], rel=1e-14)


class TestPairForce:
    """Tests for the anisotropic pair interaction."""

    def test_along_s_uses_f_s(self, stationary):
        frame = Frame.from_angle(0.0)
        force = pair_force(stationary, TorusVector(0.01, 0.0), frame)
        _, f_s = coefficients(stationary, 0.01)
        assert force[0] == pytest.approx(0.01 * f_s, rel=1e-14)
        assert force[1] == pytest.approx(0.0, abs=1e-18)

    def test_along_l_uses_f_l(self, stationary):
        frame = Frame.from_angle(0.0)
        force = pair_force(stationary, TorusVector(0.0, 0.03), frame)
        f_l, _ = coefficients(stationary, 0.03)
        assert force[1] == pytest.approx(0.03 * f_l, rel=1e-14)
        assert force[1] < 0
        assert force[0] == pytest.approx(0.0, abs=1e-18)

    def test_single_pair_is_a_2_vector(self, stationary):
        force = pair_force(stationary, TorusVector(0.02, -0.01), Frame.from_angle(0.5))
        assert force.shape == (2,)
        frame = Frame.from_angle(0.5)
        assert pair_forces(stationary, np.zeros((3, 4, 2)), frame.s, frame.l).shape == (3, 4, 2)

    def test_antisymmetric_in_displacement(self, stationary):
        frame = Frame.from_angle(0.7)
        d = np.array([0.013, -0.021])
        ahead = pair_forces(stationary, d, frame.s, frame.l)
        behind = pair_forces(stationary, -d, frame.s, frame.l)
        np.testing.assert_array_equal(ahead, -behind)

    def test_zero_at_and_beyond_cutoff(self, stationary):
        frame = Frame.from_angle(0.3)
        assert np.all(pair_force(stationary, TorusVector(0.1, 0.0), frame) == 0.0)
        assert np.all(pair_force(stationary, TorusVector(0.08, 0.08), frame) == 0.0)
        assert np.any(pair_force(stationary, TorusVector(0.0999, 0.0), frame) != 0.0)

    def test_zero_displacement_gives_zero(self, stationary):
        force = pair_force(stationary, TorusVector(0.0, 0.0), Frame.from_angle(1.0))
        np.testing.assert_array_equal(force, [0.0, 0.0])

    def test_eta_rescales_argument(self, stationary):
        frame = Frame.from_angle(0.4)
        d = np.array([0.01, 0.02])
        scaled = pair_forces(with_overrides(stationary, eta=2.0), d, frame.s, frame.l)
        reference = pair_forces(stationary, 2.0 * d, frame.s, frame.l)
        np.testing.assert_allclose(scaled, reference, rtol=1e-14)

    def test_rotation_covariance(self, stationary):
        angle = 0.9
        rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        d = np.array([0.012, 0.005])
        frame = Frame.from_angle(0.2)
        turned = Frame.from_angle(0.2 + angle)
        base = pair_forces(stationary, d, frame.s, frame.l)
        rotated = pair_forces(stationary, rotation @ d, turned.s, turned.l)
        np.testing.assert_allclose(rotated, rotation @ base, atol=1e-16)

    def test_vectorised_matches_scalar(self, piecewise):
        rng = np.random.default_rng(3)
        d = rng.uniform(-0.1, 0.1, size=(20, 2))
        angles = rng.uniform(0, math.pi, size=20)
        s = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        l = np.stack([-np.sin(angles), np.cos(angles)], axis=1)
        batch = pair_forces(piecewise, d, s, l)
        for k in range(20):
            single = pair_force(piecewise, TorusVector(*d[k]), Frame.from_angle(float(angles[k])))
            np.testing.assert_allclose(batch[k], single, rtol=1e-12, atol=1e-18)


class TestPresets:
    """Tests for preset lookup and overrides."""

    def test_preset_defaults(self):
        for name in FORCE_PRESETS:
            model = preset(name)
            assert model.name == name
            assert model.eta == 1.0
            assert model.cutoff == 0.1

    def test_stationary_reduces_gamma(self):
        assert preset("kc_stationary").law.params.gamma == 10.5
        assert preset("kc_original").law.params.gamma == 35.0

    def test_adapted_scales_attraction(self):
        law = preset("kc_adapted").law
        assert isinstance(law, KCLaw)
        assert law.attraction_scale == 0.3

    def test_unknown_preset(self):
        with pytest.raises(UnknownPresetError) as info:
            preset("kc_missing")
        assert "kc_original" in str(info.value)
        assert info.value.name == "kc_missing"

    def test_presets_are_fresh(self):
        assert preset("bio_harmonic") == preset("bio_harmonic")
        assert isinstance(preset("bio_harmonic").law, HarmonicLaw)


class TestOverrides:
    """Tests for with_overrides."""

    def test_top_level_fields(self, stationary):
        model = with_overrides(stationary, eta=0.8, cutoff=0.2)
        assert model.eta == 0.8
        assert model.cutoff == 0.2
        assert model.law == stationary.law

    def test_parameter_fields(self, stationary):
        model = with_overrides(stationary, gamma=3.5, chi=1.0)
        assert model.law.params.gamma == 3.5
        assert model.law.params.chi == 1.0
        assert model.law.params.alpha == stationary.law.params.alpha

    def test_law_fields(self, piecewise):
        model = with_overrides(piecewise, c1=0.05, c2=0.08)
        assert (model.law.c1, model.law.c2) == (0.05, 0.08)

    def test_unknown_override_named(self, stationary):
        with pytest.raises(ValueError, match="a_s"):
            with_overrides(stationary, a_s=0.1)

    def test_invalid_value_rejected(self, stationary):
        with pytest.raises(ValueError):
            with_overrides(stationary, chi=2.0)

    def test_no_overrides_is_identity(self, stationary):
        assert with_overrides(stationary) is stationary


class TestCoefficientCurve:
    """Tests for coefficient_curve."""

    def test_columns_and_range(self, stationary):
        curve = coefficient_curve(stationary, samples=11)
        assert list(curve.columns) == ["r", "f_l", "f_s"]
        assert len(curve) == 11
        assert curve["r"].iloc[0] == 0.0
        assert curve["r"].iloc[-1] == 0.5

    def test_values_match_coefficients(self, stationary):
        curve = coefficient_curve(stationary, samples=51)
        row = curve.iloc[2]
        f_l, f_s = coefficients(stationary, float(row["r"]))
        assert row["f_l"] == pytest.approx(f_l, rel=1e-14)
        assert row["f_s"] == pytest.approx(f_s, rel=1e-14)

    def test_needs_two_samples(self, stationary):
        with pytest.raises(ValueError):
            coefficient_curve(stationary, samples=1)


class TestForceShapes:
    """Sign structure of the coefficient curves."""

    R = np.linspace(0.0, 0.5, 100001)[1:]

    def test_stationary_s_channel_repels_everywhere(self, stationary):
        _, f_s = coefficient_arrays(stationary, self.R)
        assert np.all(f_s > 0)

    def test_stationary_l_channel_sign_pattern(self, stationary):
        f_l, _ = coefficient_arrays(stationary, self.R)
        signs = np.sign(f_l)
        changes = signs[np.flatnonzero(np.diff(signs)) + 1]
        assert signs[0] == 1
        assert list(changes) == [-1, 1]

    def test_harmonic_s_channel_positive(self):
        _, f_s = coefficient_arrays(preset("bio_harmonic"), self.R)
        assert np.all(f_s > 0)

    def test_harmonic_l_channel_changes_sign_early(self):
        model = preset("bio_harmonic")
        assert coefficients(model, 0.011)[0] > 0
        assert coefficients(model, 0.022)[0] < 0
