"""
Unit tests for the Torus Geometry module.
"""

import math
import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from torus import TorusPoint, TorusVector, wrap, wrap_positions, minimum_image, displacement, distance


class TestWrap:
    """Tests for wrapping coordinates onto the unit torus."""

    def test_wrap_positive_overflow(self):
        p = wrap([1.25, 0.5])
        assert p.x == pytest.approx(0.25)
        assert p.y == 0.5

    def test_wrap_negative(self):
        p = wrap([-0.25, -1.0])
        assert p.x == pytest.approx(0.75)
        assert p.y == 0.0

    def test_wrap_tiny_negative_stays_below_one(self):
        p = wrap([-1e-18, 0.0])
        assert 0.0 <= p.x < 1.0

    def test_wrap_one_is_zero(self):
        assert wrap([1.0, 2.0]) == TorusPoint(0.0, 0.0)

    def test_wrap_rejects_non_finite(self):
        with pytest.raises(ValueError):
            wrap([math.nan, 0.0])
        with pytest.raises(ValueError):
            wrap_positions(np.array([[0.1, math.inf]]))

    def test_wrap_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            wrap([0.1, 0.2, 0.3])

    def test_wrap_positions_array(self):
        arr = wrap_positions(np.array([[1.5, -0.5], [0.25, 3.75]]))
        np.testing.assert_allclose(arr, [[0.5, 0.5], [0.25, 0.75]])
        assert np.all((arr >= 0.0) & (arr < 1.0))


class TestTorusPoint:
    """Tests for TorusPoint validation."""

    def test_rejects_one(self):
        with pytest.raises(ValueError):
            TorusPoint(1.0, 0.5)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            TorusPoint(0.5, -0.1)

    def test_as_array(self):
        np.testing.assert_array_equal(TorusPoint(0.25, 0.5).as_array(), [0.25, 0.5])


class TestDisplacement:
    """Tests for minimum-image displacements and distances."""

    def test_across_boundary(self):
        d = displacement(TorusPoint(0.95, 0.5), TorusPoint(0.05, 0.5))
        assert d.dx == pytest.approx(-0.1)
        assert d.dy == 0.0

    def test_half_period_tie_is_positive(self):
        d = displacement(TorusPoint(0.75, 0.25), TorusPoint(0.25, 0.75))
        assert d == TorusVector(0.5, 0.5)

    def test_minimum_image_range(self):
        delta = np.linspace(-3.0, 3.0, 1201)
        reduced = minimum_image(delta)
        assert np.all(reduced > -0.5)
        assert np.all(reduced <= 0.5)
        # differs from the input by an integer
        np.testing.assert_allclose(np.round(delta - reduced), delta - reduced, atol=1e-12)

    def test_minus_half_maps_to_half(self):
        assert minimum_image(-0.5) == 0.5

    def test_distance_symmetric(self):
        a, b = TorusPoint(0.1, 0.9), TorusPoint(0.8, 0.2)
        assert distance(a, b) == pytest.approx(distance(b, a))
        assert distance(a, b) == pytest.approx(math.hypot(0.3, 0.3))

    def test_distance_bound(self):
        rng = np.random.default_rng(3)
        for x1, y1, x2, y2 in rng.random((200, 4)):
            assert distance(TorusPoint(x1, y1), TorusPoint(x2, y2)) <= math.sqrt(2) / 2 + 1e-15

    def test_distance_zero_for_same_point(self):
        p = TorusPoint(0.3, 0.4)
        assert distance(p, p) == 0.0
