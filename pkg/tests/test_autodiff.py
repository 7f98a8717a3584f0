"""Tape mechanics, dispatch equivalence, and the registry-wide suites."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deflicker import autodiff as ad
from deflicker import spectral
from deflicker.tensor_ops import ConvSpec, ShapeError


class TestTapeMechanics:
    def test_leaf_and_value(self):
        tape = ad.Tape()
        x = tape.leaf(np.array([1.0, 2.0]))
        assert isinstance(x, ad.Var)
        np.testing.assert_array_equal(x.value, [1.0, 2.0])
        assert x.shape == (2,)

    def test_backward_requires_scalar_without_seed(self):
        tape = ad.Tape()
        x = tape.leaf(np.ones(3))
        y = ad.mul(x, x)
        with pytest.raises(ad.TapeError):
            tape.backward(y)

    def test_backward_with_seed(self):
        tape = ad.Tape()
        x = tape.leaf(np.array([1.0, 2.0, 3.0]))
        y = ad.mul(x, x)
        grads = tape.backward(y, seed=np.array([1.0, 1.0, 1.0]))
        np.testing.assert_allclose(grads[x.idx], [2.0, 4.0, 6.0])

    def test_cross_tape_mixing_rejected(self):
        t1, t2 = ad.Tape(), ad.Tape()
        a = t1.leaf(np.ones(2))
        b = t2.leaf(np.ones(2))
        with pytest.raises(ad.TapeError):
            ad.add(a, b)

    def test_var_operators(self):
        tape = ad.Tape()
        a = tape.leaf(np.array([2.0]))
        b = tape.leaf(np.array([3.0]))
        assert (a + b).value[0] == 5.0
        assert (a - b).value[0] == -1.0
        assert (a * b).value[0] == 6.0
        assert (-a).value[0] == -2.0

    def test_grad_accumulates_over_reuse(self):
        tape = ad.Tape()
        x = tape.leaf(np.array([3.0]))
        loss = ad.tsum(ad.add(ad.mul(x, x), x))  # x^2 + x -> 2x + 1
        grads = tape.backward(loss)
        np.testing.assert_allclose(grads[x.idx], [7.0])

    def test_value_of_passthrough(self):
        arr = np.ones(2)
        assert ad.value_of(arr) is arr
        tape = ad.Tape()
        v = tape.leaf(arr)
        np.testing.assert_array_equal(ad.value_of(v), arr)


class TestDispatchEquivalence:
    @given(st.integers(0, 100))
    def test_traced_forward_matches_plain(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((4, 4, 2))
        w = rng.standard_normal((4, 4, 2))

        def compute(xv, wv):
            z = ad.fft2(xv)
            y = ad.ifft2_real(ad.cmul_real(z, ad.sigmoid(wv)))
            return ad.relu(ad.add(y, xv))

        plain = compute(x, w)
        tape = ad.Tape()
        traced = compute(tape.leaf(x), tape.leaf(w))
        np.testing.assert_array_equal(ad.value_of(traced), plain)

    def test_conv_traced_matches_plain(self):
        rng = np.random.default_rng(7)
        spec = ConvSpec.same(3, 2, 3)
        x = rng.standard_normal((6, 6, 2))
        w = rng.standard_normal(spec.weight_shape)
        b = rng.standard_normal(3)
        tape = ad.Tape()
        traced = ad.conv2d(tape.leaf(x), spec, tape.leaf(w), tape.leaf(b))
        plain = ad.conv2d(x, spec, w, b)
        np.testing.assert_array_equal(traced.value, plain)


class TestBackwardProperties:
    def test_backward_is_linear_in_loss_scale(self):
        rng = np.random.default_rng(1)
        x0 = rng.standard_normal((3, 3))

        def grad_of(scale_factor):
            tape = ad.Tape()
            x = tape.leaf(x0)
            loss = ad.scale(ad.tsum(ad.gelu(x)), scale_factor)
            return tape.backward(loss)[x.idx]

        np.testing.assert_allclose(grad_of(3.0), 3.0 * grad_of(1.0), atol=1e-12)

    def test_autocorr_matches_spectral(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((6, 6, 2))
        np.testing.assert_allclose(ad.autocorr(x), spectral.autocorrelation(x),
                                   atol=1e-10)

    def test_symmetrize_freq_output_is_symmetric(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal((6, 8, 2))
        s = ad.symmetrize_freq(w)
        flipped = np.roll(s[::-1, ::-1], (1, 1), axis=(0, 1))
        np.testing.assert_allclose(s, flipped, atol=1e-12)

    def test_phase_cosine_matches_phase_difference(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((5, 5, 1))
        b = rng.standard_normal((5, 5, 1))
        za, zb = spectral.fft2(a), spectral.fft2(b)
        got = ad.phase_cosine(za, zb)
        _, pa = spectral.amp_phase(za)
        _, pb = spectral.amp_phase(zb)
        np.testing.assert_allclose(got, np.cos(pa - pb), atol=1e-9)

    def test_matmul_leading_dims_must_match(self):
        tape = ad.Tape()
        a = tape.leaf(np.zeros((2, 3, 4)))
        b = tape.leaf(np.zeros((5, 4, 2)))
        with pytest.raises(ShapeError):
            ad.matmul(a, b)


class TestGradcheckApi:
    def test_quadratic_loss_exact(self):
        def build(p):
            return ad.tsum(ad.mul(p["x"], p["x"]))

        report = ad.gradcheck(build, {"x": np.array([1.0, -2.0, 3.0])}, seed=0)
        assert report.all_pass
        assert report.worst < 1e-6

    def test_disagreement_detected(self):
        # probe inside the kink-crossing band: the abs subgradient is 1 but
        # central differences straddle zero and report 0.5
        def build(p):
            return ad.tsum(ad.absolute(p["x"]))

        report = ad.gradcheck(build, {"x": np.array([5e-6])}, h=1e-5, seed=0)
        assert not report.all_pass

    def test_report_summary_mentions_each_param(self):
        def build(p):
            return ad.tsum(ad.mul(p["a"], p["a"]))

        report = ad.gradcheck(build, {"a": np.ones(2)}, seed=0)
        assert "a" in report.summary()
        assert report.entries["a"].n_coords == 2


class TestRegistrySuites:
    def test_adjoint_suite_passes(self):
        errs = ad.run_adjoint_suite(seed=0)
        worst = max(errs.values())
        assert worst < 1e-9, f"worst adjoint error {worst}"

    def test_adjoint_suite_covers_all_linear_ops(self):
        errs = ad.run_adjoint_suite(seed=1)
        linear = {name for name, lin in ad.OP_CATALOG.items() if lin}
        assert linear == set(errs)

    def test_gradcheck_suite_passes(self):
        report = ad.run_gradcheck_suite(seed=0)
        assert report.all_pass, report.summary()

    def test_gradcheck_suite_covers_catalog(self):
        report = ad.run_gradcheck_suite(seed=2)
        assert set(ad.OP_CATALOG) == set(report.entries)
