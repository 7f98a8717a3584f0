"""Orthonormal Haar transform: pinned coefficients, adjointness, energy."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deflicker.tensor_ops import ShapeError
from deflicker.wavelet import WaveletSubbands, directional_energy, haar_dwt, haar_idwt


class TestPinnedValues:
    def test_single_block_coefficients(self):
        # block rows are the vertical axis: [[a, b], [c, d]]
        a, b, c, d = 1.0, 2.0, 3.0, 5.0
        x = np.array([[a, b], [c, d]])[:, :, None]
        s = haar_dwt(x)
        assert s.LL[0, 0, 0] == pytest.approx((a + b + c + d) / 2)
        assert s.LH[0, 0, 0] == pytest.approx((a + b - c - d) / 2)
        assert s.HL[0, 0, 0] == pytest.approx((a - b + c - d) / 2)
        assert s.HH[0, 0, 0] == pytest.approx((a - b - c + d) / 2)

    def test_constant_image_is_pure_ll(self):
        x = np.full((4, 6, 2), 3.0)
        s = haar_dwt(x)
        np.testing.assert_allclose(s.LL, 6.0, atol=1e-12)
        np.testing.assert_allclose(s.LH, 0.0, atol=1e-12)
        np.testing.assert_allclose(s.HL, 0.0, atol=1e-12)
        np.testing.assert_allclose(s.HH, 0.0, atol=1e-12)

    def test_subband_shapes(self):
        s = haar_dwt(np.zeros((6, 8, 3)))
        for band in (s.LL, s.LH, s.HL, s.HH):
            assert band.shape == (3, 4, 3)


class TestRoundtrip:
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 3))
    def test_perfect_reconstruction(self, hb, wb, c):
        rng = np.random.default_rng(hb * 100 + wb * 10 + c)
        x = rng.standard_normal((2 * hb, 2 * wb, c))
        np.testing.assert_allclose(haar_idwt(haar_dwt(x)), x, atol=1e-10)

    @given(st.integers(1, 4), st.integers(1, 4))
    def test_energy_conservation(self, hb, wb):
        rng = np.random.default_rng(hb * 10 + wb)
        x = rng.standard_normal((2 * hb, 2 * wb, 2))
        s = haar_dwt(x)
        total = sum(np.sum(band * band) for band in (s.LL, s.LH, s.HL, s.HH))
        spatial = np.sum(x * x)
        assert abs(total - spatial) <= 1e-10 * max(spatial, 1.0)

    def test_adjointness(self):
        # orthonormal transform: <dwt(x), y> == <x, idwt(y)>
        rng = np.random.default_rng(3)
        x = rng.standard_normal((6, 8, 2))
        bands = WaveletSubbands(*(rng.standard_normal((3, 4, 2)) for _ in range(4)))
        sx = haar_dwt(x)
        lhs = sum(np.sum(a * b) for a, b in
                  [(sx.LL, bands.LL), (sx.LH, bands.LH), (sx.HL, bands.HL), (sx.HH, bands.HH)])
        rhs = np.sum(x * haar_idwt(bands))
        assert abs(lhs - rhs) < 1e-9

    def test_odd_dimensions_rejected(self):
        with pytest.raises(ShapeError):
            haar_dwt(np.zeros((5, 4, 1)))
        with pytest.raises(ShapeError):
            haar_dwt(np.zeros((4, 7, 1)))


def horizontal_stripes(h, w, period):
    rows = np.sin(2 * np.pi * np.arange(h) / period)
    return np.tile(rows[:, None], (1, w))[:, :, None]


class TestDirectionality:
    def test_horizontal_stripes_land_in_lh(self):
        x = horizontal_stripes(32, 32, 4)
        e = directional_energy(haar_dwt(x))
        high = float(e["LH"].sum() + e["HL"].sum() + e["HH"].sum())
        assert float(e["LH"].sum()) / high > 0.9

    def test_transpose_moves_energy_to_hl(self):
        x = horizontal_stripes(32, 32, 4)
        xt = np.transpose(x, (1, 0, 2))
        e = directional_energy(haar_dwt(xt))
        high = float(e["LH"].sum() + e["HL"].sum() + e["HH"].sum())
        assert float(e["HL"].sum()) / high > 0.9

    def test_transpose_swaps_lh_hl_exactly(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((8, 8, 1))
        s = haar_dwt(x)
        st_ = haar_dwt(np.transpose(x, (1, 0, 2)))
        np.testing.assert_allclose(st_.LH, np.transpose(s.HL, (1, 0, 2)), atol=1e-12)
        np.testing.assert_allclose(st_.HL, np.transpose(s.LH, (1, 0, 2)), atol=1e-12)

    def test_energy_table_matches_sums(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((6, 6, 3))
        s = haar_dwt(x)
        e = directional_energy(s)
        for name, band in (("LL", s.LL), ("LH", s.LH), ("HL", s.HL), ("HH", s.HH)):
            np.testing.assert_allclose(e[name], np.sum(band * band, axis=(0, 1)),
                                       atol=1e-12)
            assert e[name].shape == (3,)
