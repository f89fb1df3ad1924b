import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polarface.imageio import GrayImage, radial_image, random_face, synth_face
from polarface.logpolar import (
    best_column_shift, cart_to_polar, circular_column_shift, compute_geometry, log_polar_transform,
)
from oracles import rotate_nearest


def face(rotation=0.0, size=128, seed=0, scale=1.0):
    params = random_face(np.random.default_rng(seed))
    return synth_face(0, params, rotation, scale, 0.0, (size, size))


class TestGeometry:
    def test_rectangular_frame(self):
        g = compute_geometry(240, 320)
        assert (g.m, g.n, g.R) == (120, 160, 119)
        assert (g.q, g.S) == (7, 128)

    def test_exact_power(self):
        g = compute_geometry(33, 33, 2)
        assert (g.m, g.n, g.R, g.q, g.S) == (16, 16, 16, 4, 16)

    def test_base_three(self):
        g = compute_geometry(240, 320, 3)
        assert (g.q, g.S) == (5, 243)

    def test_too_small(self):
        with pytest.raises(ValueError):
            compute_geometry(2, 10)
        with pytest.raises(ValueError):
            compute_geometry(10, 10, 1)

    @given(M=st.integers(3, 600), N=st.integers(3, 600), Z=st.integers(2, 5))
    def test_side_brackets_radius(self, M, N, Z):
        g = compute_geometry(M, N, Z)
        assert g.m == M // 2 and g.n == N // 2
        assert g.R >= 1
        assert g.S >= g.R
        if g.q > 1:
            assert Z ** (g.q - 1) < g.R


class TestCartToPolar:
    g = compute_geometry(21, 21)

    def test_centre(self):
        assert cart_to_polar(10, 10, self.g) == (0.0, 0.0)

    def test_pythagorean(self):
        r, _ = cart_to_polar(13, 14, self.g)
        assert r == 5.0

    @pytest.mark.parametrize("x, y, theta", [
        (15, 10, 0.0), (10, 15, 90.0), (5, 10, 180.0), (10, 5, 270.0), (13, 13, 45.0), (7, 7, 225.0),
    ])
    def test_quadrants(self, x, y, theta):
        r, t = cart_to_polar(x, y, self.g)
        assert t == pytest.approx(theta)
        assert 0.0 <= t < 360.0


class TestTransform:
    def test_constant(self):
        out = log_polar_transform(GrayImage(np.full((50, 70), 0.3)))
        assert out.shape == (32, 32)
        assert np.all(out.pixels == 0.3)

    def test_radial_ramp_rows_nearly_constant(self):
        img = radial_image((129, 129), lambda r: r / 96.0)
        out = log_polar_transform(img).pixels
        assert np.ptp(out, axis=1).max() <= 0.02

    def test_ring_rows_constant_away_from_edges(self):
        edges = np.array([5.5, 12.5, 25.5, 45.5])
        img = radial_image((129, 129), lambda r: 0.2 + 0.2 * np.searchsorted(edges, r))
        out = log_polar_transform(img).pixels
        radii = np.exp(np.linspace(0, math.log(64), 64))
        clear = np.min(np.abs(radii[:, None] - edges[None, :]), axis=1) > 1.0
        assert clear.sum() > 40
        assert out[clear].var(axis=1).max() <= 1e-6

    def test_row_zero_is_unit_circle(self):
        img = radial_image((65, 65), lambda r: np.where(r < 0.5, 1.0, np.where(r < 1.5, 0.5, 0.0)))
        out = log_polar_transform(img).pixels
        assert np.all(out[0] == 0.5)

    def test_values_come_from_source(self):
        img = face()
        out = log_polar_transform(img)
        assert set(out.vector().tolist()) <= set(img.vector().tolist())

    def test_deterministic(self):
        img = face(17.0)
        assert log_polar_transform(img) == log_polar_transform(img)

    @settings(max_examples=40, deadline=None)
    @given(M=st.integers(3, 90), N=st.integers(3, 90), Z=st.integers(2, 4))
    def test_output_side(self, M, N, Z):
        img = GrayImage(np.random.default_rng(M * N).random((M, N)))
        out = log_polar_transform(img, Z)
        S = compute_geometry(M, N, Z).S
        assert out.shape == (S, S)

    def test_fixed_side(self):
        assert log_polar_transform(face(size=64), side=48).shape == (48, 48)

    def test_rotation_is_column_shift_against_brute_force_rotation(self):
        base = face(size=128)
        rotated = GrayImage(rotate_nearest(base.pixels.tolist(), 45.0, (64, 64)))
        lp_base, lp_rot = log_polar_transform(base), log_polar_transform(rotated)
        S = lp_base.width
        shifted = circular_column_shift(lp_base, round(S * 45 / 360))
        assert np.mean(np.abs(lp_rot.pixels - shifted.pixels)) <= 0.05

    @pytest.mark.parametrize("delta", [15, -15, 30, -30, 45, -45])
    def test_rotation_best_shift(self, delta):
        lp_base = log_polar_transform(face())
        lp_rot = log_polar_transform(face(delta))
        S = lp_base.width
        k, err = best_column_shift(lp_rot, lp_base)
        assert abs(k - round(S * delta / 360)) <= 1
        assert err <= 0.05

    @pytest.mark.parametrize("s", [0.9, 1.1, 1.5, 2.0])
    def test_scale_with_frame(self, s):
        base = log_polar_transform(face(size=64))
        size = round(64 * s)
        scaled = log_polar_transform(face(size=size), side=base.width)
        assert np.mean(np.abs(scaled.pixels - base.pixels)) <= 0.1


class TestColumnShift:
    img = GrayImage(np.random.default_rng(2).random((4, 7)))

    def test_zero_and_full_wrap(self):
        assert circular_column_shift(self.img, 0) == self.img
        assert circular_column_shift(self.img, 7) == self.img

    def test_inverse(self):
        assert circular_column_shift(circular_column_shift(self.img, 3), -3) == self.img

    def test_definition(self):
        out = circular_column_shift(self.img, 2).pixels
        for j in range(7):
            np.testing.assert_array_equal(out[:, j], self.img.pixels[:, (j - 2) % 7])

    def test_best_shift_recovers_exact_shift(self):
        k, err = best_column_shift(circular_column_shift(self.img, -2), self.img)
        assert (k, err) == (-2, 0.0)
