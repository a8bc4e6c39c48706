"""
Unit tests for the Pattern Analysis module.
"""

import math
import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analysis import (
    DEFAULT_LINK, InsufficientLinesError, LinePattern, analysis_options, certify_steady_state,
    count_clusters, count_lines, format_summary, max_pairwise_distance, radial_profile,
    ridge_spacing, static_residual, summarize,
)
from direction_field import HomogeneousField, field_preset
from forces import FORCE_PRESETS, preset, with_overrides
from simulator import CircleInit, LinesInit, ParticleState, SimConfig, UniformInit, lines_positions
from torus import TorusPoint


VERTICAL_ANGLE = math.pi / 2


def circular_gap(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def vertical_lines(xs, per_line=10, jitter=0.0, seed=0) -> ParticleState:
    rng = np.random.default_rng(seed)
    rows = []
    for x in xs:
        for j in range(per_line):
            rows.append([(x + rng.uniform(-jitter, jitter)) % 1.0, j / per_line])
    return ParticleState(np.array(rows))


class TestLinePattern:
    """Tests for LinePattern validation."""

    def test_centers_must_increase(self):
        with pytest.raises(ValueError):
            LinePattern(n_lines=2, centers=(0.5, 0.2), spacings=(0.7, 0.3))

    def test_spacings_must_close_the_circle(self):
        with pytest.raises(ValueError):
            LinePattern(n_lines=2, centers=(0.2, 0.5), spacings=(0.3, 0.3))

    def test_single_line(self):
        pattern = LinePattern(n_lines=1, centers=(0.4,), spacings=())
        assert pattern.n_lines == 1


class TestCountLines:
    """Tests for line counting under homogeneous fields."""

    def test_equidistant_lines(self):
        state = ParticleState(lines_positions(4, 16))
        pattern = count_lines(state, VERTICAL_ANGLE)
        assert pattern.n_lines == 4
        assert sum(pattern.spacings) == pytest.approx(1.0)
        assert all(s == pytest.approx(0.25) for s in pattern.spacings)

    def test_jittered_lines(self):
        state = vertical_lines([0.1, 0.3, 0.65], jitter=0.003)
        pattern = count_lines(state, VERTICAL_ANGLE)
        assert pattern.n_lines == 3
        for center, expected in zip(pattern.centers, [0.1, 0.3, 0.65]):
            assert circular_gap(center, expected) < 0.003

    def test_line_straddling_seam(self):
        state = vertical_lines([0.0, 0.5], jitter=0.004, seed=3)
        pattern = count_lines(state, VERTICAL_ANGLE)
        assert pattern.n_lines == 2
        assert min(circular_gap(c, 0.0) for c in pattern.centers) < 0.004

    def test_single_line_across_seam(self):
        state = ParticleState(np.array([[0.995, 0.1], [0.005, 0.4], [0.0, 0.7]]))
        pattern = count_lines(state, VERTICAL_ANGLE)
        assert pattern.n_lines == 1
        assert pattern.spacings == ()
        assert circular_gap(pattern.centers[0], 0.0) < 1e-12

    def test_horizontal_lines(self):
        rows = [[i / 10, y] for y in (0.2, 0.7) for i in range(10)]
        pattern = count_lines(ParticleState(np.array(rows)), 0.0)
        assert pattern.n_lines == 2

    def test_invariant_under_shift_across_lines(self):
        state = vertical_lines([0.1, 0.3, 0.65], jitter=0.003)
        shifted = ParticleState((state.positions + [0.37, 0.0]) % 1.0)
        a = count_lines(state, VERTICAL_ANGLE)
        b = count_lines(shifted, VERTICAL_ANGLE)
        assert a.n_lines == b.n_lines
        assert sorted(a.spacings) == pytest.approx(sorted(b.spacings))

    def test_invalid_threshold(self):
        state = ParticleState(lines_positions(2, 4))
        with pytest.raises(ValueError):
            count_lines(state, VERTICAL_ANGLE, gap_threshold=0.6)


class TestRidgeSpacing:
    """Tests for ridge_spacing."""

    def test_mean_and_std(self):
        pattern = LinePattern(n_lines=3, centers=(0.1, 0.3, 0.6), spacings=(0.2, 0.3, 0.5))
        mean, std = ridge_spacing(pattern)
        assert mean == pytest.approx(1 / 3)
        assert std == pytest.approx(float(np.std([0.2, 0.3, 0.5])))

    def test_needs_two_lines(self):
        with pytest.raises(InsufficientLinesError):
            ridge_spacing(LinePattern(n_lines=1, centers=(0.3,), spacings=()))


class TestRadial:
    """Tests for ring diagnostics."""

    def test_circle_profile(self):
        angles = 2 * np.pi * np.arange(8) / 8
        positions = np.stack([0.5 + 0.05 * np.cos(angles), 0.5 + 0.05 * np.sin(angles)], axis=1)
        profile = radial_profile(ParticleState(positions), TorusPoint(0.5, 0.5))
        assert profile.mean_radius == pytest.approx(0.05)
        assert profile.std_radius == pytest.approx(0.0, abs=1e-12)
        assert profile.coefficient_of_variation == pytest.approx(0.0, abs=1e-10)
        assert profile.max_pairwise_distance == pytest.approx(0.1)

    def test_profile_around_seam(self):
        positions = np.array([[0.98, 0.5], [0.02, 0.5]])
        profile = radial_profile(ParticleState(positions), TorusPoint(0.0, 0.5))
        assert profile.mean_radius == pytest.approx(0.02)
        assert profile.max_pairwise_distance == pytest.approx(0.04)

    def test_max_pairwise_blocks(self):
        state = ParticleState(np.random.default_rng(2).random((50, 2)))
        assert max_pairwise_distance(state, block=7) == max_pairwise_distance(state)
        assert max_pairwise_distance(state) <= math.sqrt(0.5) + 1e-12


class TestClusters:
    """Tests for single-linkage cluster counts."""

    def test_two_clumps(self):
        rng = np.random.default_rng(4)
        a = 0.2 + 0.003 * rng.random((20, 2))
        b = 0.7 + 0.003 * rng.random((20, 2))
        assert count_clusters(ParticleState(np.vstack([a, b])), DEFAULT_LINK) == 2

    def test_chain_across_seam_is_one_cluster(self):
        positions = np.array([[0.995, 0.5], [0.005, 0.5], [0.015, 0.5]])
        assert count_clusters(ParticleState(positions), 0.012) == 1

    def test_isolated_particles(self):
        positions = np.array([[0.1, 0.1], [0.5, 0.5], [0.9, 0.2]])
        assert count_clusters(ParticleState(positions), 0.05) == 3

    def test_invalid_link(self):
        with pytest.raises(ValueError):
            count_clusters(ParticleState(np.array([[0.1, 0.1], [0.2, 0.2]])), 0.0)


class TestResidual:
    """Tests for static force residuals."""

    def test_lines_have_no_residual(self):
        model = with_overrides(preset("kc_stationary"), cutoff=0.5)
        state = ParticleState(lines_positions(5, 600))
        assert static_residual(state, model, HomogeneousField(theta0=VERTICAL_ANGLE)) <= 1e-12

    def test_clump_has_residual(self):
        state = ParticleState(np.array([[0.5, 0.5], [0.505, 0.5], [0.5, 0.51]]))
        assert static_residual(state, preset("kc_stationary"), field_preset("vertical")) > 1e-6


class TestCertification:
    """Tests for the equidistant line certificate."""

    @pytest.mark.parametrize("name", sorted(FORCE_PRESETS))
    @pytest.mark.parametrize("n_lines,n_particles", [(2, 4), (4, 16)])
    def test_small_line_states_certified(self, name, n_lines, n_particles):
        certificate = certify_steady_state(n_lines, n_particles, preset(name))
        assert certificate.passed
        assert certificate.residual <= 1e-12
        assert certificate.steps == 500
        assert certificate.force_name == name

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(FORCE_PRESETS))
    def test_five_lines_certified(self, name):
        certificate = certify_steady_state(5, 600, preset(name))
        assert certificate.passed


class TestSummaries:
    """Tests for summary dictionaries and their text form."""

    def test_line_summary(self):
        state = ParticleState(lines_positions(4, 16), time=3.0)
        model = with_overrides(preset("kc_stationary"), cutoff=0.5)
        summary = summarize(state, model, HomogeneousField(theta0=VERTICAL_ANGLE),
                            direction_angle=VERTICAL_ANGLE)
        assert summary["time"] == 3.0
        assert summary["n_particles"] == 16
        assert summary["n_lines"] == 4
        assert summary["spacing_mean"] == pytest.approx(0.25)
        assert "mean_radius" not in summary

    def test_single_line_spacing_is_nan(self):
        state = ParticleState(np.array([[0.3, 0.1], [0.3, 0.6]]))
        summary = summarize(state, preset("kc_stationary"), field_preset("vertical"),
                            direction_angle=VERTICAL_ANGLE)
        assert summary["n_lines"] == 1
        assert math.isnan(summary["spacing_mean"])

    def test_radial_and_cluster_summary(self):
        state = ParticleState(np.array([[0.51, 0.5], [0.49, 0.5], [0.5, 0.51], [0.5, 0.49]]))
        summary = summarize(state, preset("kc_original"), field_preset("delta"),
                            center=TorusPoint(0.5, 0.5), link_distance=0.05)
        assert summary["mean_radius"] == pytest.approx(0.01)
        assert summary["n_clusters"] == 1
        assert "n_lines" not in summary

    def test_format_summary(self):
        text = format_summary({"time": 0.1, "n_lines": 3, "name": "x"})
        assert text == "time=0.1\nn_lines=3\nname=x\n"

    def test_options_for_homogeneous_circle_run(self):
        config = SimConfig(n_particles=8, t_end=1.0, force=preset("kc_original"),
                           field=HomogeneousField(theta0=VERTICAL_ANGLE),
                           init=CircleInit(center=TorusPoint(0.4, 0.5)))
        options = analysis_options(config)
        assert options == {"direction_angle": VERTICAL_ANGLE, "center": TorusPoint(0.4, 0.5)}

    def test_options_for_curved_field(self):
        config = SimConfig(n_particles=8, t_end=1.0, force=preset("kc_original"),
                           field=field_preset("loop"), init=UniformInit())
        assert analysis_options(config) == {"link_distance": DEFAULT_LINK}

    def test_options_for_lines(self):
        config = SimConfig(n_particles=8, t_end=1.0, force=preset("kc_original"),
                           field=HomogeneousField(theta0=0.0), init=LinesInit(2))
        assert analysis_options(config) == {"direction_angle": 0.0}
