import numpy as np
import pytest

from lichlab.geometry import (
    Chart,
    OneFormField,
    ScalarField,
    SphereRadial,
    SymTensorField,
    Torus,
    GeometryMismatch,
    conformal_killing_deriv,
    h1_norm_squared,
    l2_inner,
    lame,
    lame_invert,
    laplace_beltrami,
    tensor_norm_squared,
    tensor_trace,
)


def random_bandlimited_oneform(g, rng, kmax=3, amplitude=1.0):
    """Real band-limited one-form with modes |k|_inf <= kmax."""
    n, N = g.dimension, g.resolution
    what = np.zeros((n,) + g.grid_shape, dtype=complex)
    freqs = np.fft.fftfreq(N, d=1.0 / N).astype(int)
    for a in range(n):
        spec = np.zeros(g.grid_shape, dtype=complex)
        for idx in np.ndindex(*(2 * kmax + 1,) * n):
            k = tuple(i - kmax for i in idx)
            if all(c == 0 for c in k):
                continue
            pos = tuple(np.nonzero(freqs == c)[0][0] for c in k)
            spec[pos] = rng.normal() + 1j * rng.normal()
        what[a] = spec
    vals = np.real(np.fft.ifftn(what, axes=tuple(range(1, n + 1))))
    scale = np.max(np.abs(vals)) or 1.0
    return OneFormField(g, amplitude * vals / scale)


class TestTorusOperators:
    def setup_method(self):
        self.g = Torus(3, 16)

    def test_laplacian_of_constant_is_zero(self):
        f = ScalarField.constant(self.g, 4.2)
        out = laplace_beltrami(f, self.g)
        assert np.max(np.abs(out.values)) < 1e-13

    def test_laplacian_eigenfunction(self):
        x = self.g.coords()
        f = ScalarField(self.g, np.sin(x[0]) + np.zeros(self.g.grid_shape))
        out = laplace_beltrami(f)
        assert np.max(np.abs(out.values - f.values)) < 1e-12

    def test_spectral_exactness_single_mode(self):
        x = self.g.coords()
        k = (2, 1, 3)
        phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2]
        f = ScalarField(self.g, np.cos(phase) + np.zeros(self.g.grid_shape))
        out = laplace_beltrami(f)
        k2 = sum(c ** 2 for c in k)
        assert np.max(np.abs(out.values - k2 * f.values)) < 1e-10 * k2

    def test_killing_deriv_of_constant_form(self):
        W = OneFormField(self.g, np.broadcast_to(
            np.array([1.0, -2.0, 0.5])[:, None, None, None],
            (3,) + self.g.grid_shape).copy())
        LW = conformal_killing_deriv(W)
        assert np.max(np.abs(LW.values)) < 1e-13

    def test_killing_deriv_coordinate_formula(self):
        x = self.g.coords()
        vals = np.zeros((3,) + self.g.grid_shape)
        vals[0] = np.sin(x[0])
        W = OneFormField(self.g, vals)
        LW = conformal_killing_deriv(W)
        cos = np.cos(x[0]) + np.zeros(self.g.grid_shape)
        # packed order: xx, xy, xz, yy, yz, zz
        assert np.allclose(LW.values[0], (2 - 2.0 / 3.0) * cos, atol=1e-12)
        assert np.allclose(LW.values[3], -(2.0 / 3.0) * cos, atol=1e-12)
        assert np.allclose(LW.values[5], -(2.0 / 3.0) * cos, atol=1e-12)
        assert np.max(np.abs(LW.values[[1, 2, 4]])) < 1e-12

    def test_killing_deriv_traceless(self):
        rng = np.random.default_rng(7)
        W = random_bandlimited_oneform(self.g, rng)
        LW = conformal_killing_deriv(W)
        assert np.max(np.abs(tensor_trace(LW))) < 1e-12

    def test_lame_of_constant_is_zero(self):
        W = OneFormField(self.g, np.ones((3,) + self.g.grid_shape))
        assert np.max(np.abs(lame(W).values)) < 1e-13

    def test_lame_symbol_longitudinal_mode(self):
        x = self.g.coords()
        vals = np.zeros((3,) + self.g.grid_shape)
        vals[0] = np.cos(x[0])
        W = OneFormField(self.g, vals)
        out = lame(W)
        assert np.allclose(out.values[0], (2 - 2.0 / 3.0) * vals[0], atol=1e-12)
        assert np.max(np.abs(out.values[1:])) < 1e-12

    def test_energy_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            W = random_bandlimited_oneform(self.g, rng)
            lhs = l2_inner(self.g, lame(W).values, W.values)
            LW = conformal_killing_deriv(W)
            rhs = 0.5 * l2_inner(self.g, LW.values * np.array(
                [1, 2, 2, 1, 2, 1])[:, None, None, None], LW.values)
            assert abs(lhs - rhs) < 1e-10 * h1_norm_squared(W)

    def test_lame_invert_roundtrip(self):
        rng = np.random.default_rng(3)
        F = random_bandlimited_oneform(self.g, rng)
        F.values -= np.mean(F.values, axis=(1, 2, 3), keepdims=True)
        W, defect = lame_invert(F)
        assert defect < 1e-13
        back = lame(W)
        assert np.max(np.abs(back.values - F.values)) < 1e-10
        assert np.max(np.abs(np.mean(W.values, axis=(1, 2, 3)))) < 1e-13

    def test_lame_invert_closed_form(self):
        x = self.g.coords()
        vals = np.zeros((3,) + self.g.grid_shape)
        vals[0] = np.cos(x[0])
        F = OneFormField(self.g, vals)
        W, _ = lame_invert(F)
        expected = vals[0] / (2.0 - 2.0 / 3.0)
        assert np.max(np.abs(W.values[0] - expected)) < 1e-12

    def test_lame_invert_constant_defect(self):
        c = np.array([2.0, 0.0, 0.0])
        F = OneFormField(self.g, np.broadcast_to(
            c[:, None, None, None], (3,) + self.g.grid_shape).copy())
        W, defect = lame_invert(F)
        assert np.max(np.abs(W.values)) < 1e-13
        assert abs(defect - 2.0 * np.sqrt(self.g.volume)) < 1e-10

    def test_lame_kernel_is_killing_kernel(self):
        # constant forms: both lame and the Killing derivative vanish
        for a in range(3):
            vals = np.zeros((3,) + self.g.grid_shape)
            vals[a] = 1.0
            W = OneFormField(self.g, vals)
            assert np.max(np.abs(lame(W).values)) < 1e-13
            assert np.max(np.abs(conformal_killing_deriv(W).values)) < 1e-13
        # and a nonconstant form is annihilated by neither
        x = self.g.coords()
        vals = np.zeros((3,) + self.g.grid_shape)
        vals[1] = np.sin(x[0])
        W = OneFormField(self.g, vals)
        assert np.max(np.abs(lame(W).values)) > 0.1
        assert np.max(np.abs(conformal_killing_deriv(W).values)) > 0.1


class TestSphereRadial:
    def setup_method(self):
        self.g = SphereRadial(2048)

    def test_laplacian_of_cos(self):
        f = ScalarField(self.g, np.cos(self.g.r))
        out = laplace_beltrami(f)
        assert np.max(np.abs(out.values - 3.0 * np.cos(self.g.r))) < 1e-8

    def test_killing_deriv_frame_components(self):
        # w = sin r is the radial part of a conformal Killing field on S^3
        W = OneFormField(self.g, np.sin(self.g.r))
        LW = conformal_killing_deriv(W)
        assert np.max(np.abs(LW.values)) < 1e-9
        assert np.max(np.abs(lame(W).values)) < 1e-7

    def test_trace_free(self):
        W = OneFormField(self.g, np.sin(2 * self.g.r) * np.exp(np.cos(self.g.r)))
        LW = conformal_killing_deriv(W)
        assert np.max(np.abs(tensor_trace(LW))) < 1e-12

    def test_norm_squared_uses_frame_weights(self):
        W = OneFormField(self.g, np.sin(2 * self.g.r))
        LW = conformal_killing_deriv(W)
        psi = (self.g.d1 @ W.values) - W.values * self.g.cot_r
        expected = (16.0 / 9.0 + 2 * 4.0 / 9.0) * psi ** 2
        assert np.allclose(tensor_norm_squared(LW), expected, atol=1e-12)


class TestChart:
    def test_laplacian_polynomial(self):
        g = Chart(3, 33, extent=1.0)
        x = g.coords()
        f = ScalarField(g, x[0] ** 2 + 2 * x[1] ** 2 - x[2] ** 2
                        + np.zeros(g.grid_shape))
        out = laplace_beltrami(f)
        assert np.max(np.abs(out.values - (-4.0))) < 1e-9

    def test_lame_fd_matches_analytic_value(self):
        gc = Chart(3, 33, extent=np.pi)
        xc = gc.coords()
        valsc = np.zeros((3,) + gc.grid_shape)
        valsc[0] = np.sin(xc[0] + np.pi) * np.cos(xc[1] + np.pi) + 0 * xc[2]
        Wc = OneFormField(gc, valsc)
        fd = lame(Wc).values
        mid = gc.resolution // 2
        x0 = xc[0].ravel()[mid] + np.pi
        x1 = xc[1].ravel()[mid] + np.pi
        # lame(W)_0 = -(d00 + d11 + d22) W_0 - (1/3) d_0 (div W) = (2 + 1/3) W_0
        w0 = np.sin(x0) * np.cos(x1)
        assert abs(fd[0][mid, mid, mid] - (2 + 1.0 / 3.0) * w0) < 1e-6

    def test_geometry_mismatch_raises(self):
        g1 = Torus(3, 16)
        g2 = Torus(3, 32)
        f = ScalarField.constant(g1, 1.0)
        with pytest.raises(GeometryMismatch):
            laplace_beltrami(f, g2)


class TestFieldInvariants:
    def test_scalar_shape_checked(self):
        g = Torus(3, 16)
        with pytest.raises(ValueError):
            ScalarField(g, np.zeros((4, 4, 4)))

    def test_nonfinite_rejected(self):
        g = Torus(3, 16)
        vals = np.zeros(g.grid_shape)
        vals[0, 0, 0] = np.inf
        with pytest.raises(ValueError):
            ScalarField(g, vals)

    def test_tensor_pack_unpack(self):
        g = Torus(3, 16)
        rng = np.random.default_rng(0)
        full = rng.normal(size=(3, 3) + g.grid_shape)
        full = 0.5 * (full + np.swapaxes(full, 0, 1))
        T = SymTensorField.from_full(g, full)
        assert np.allclose(T.full(), full)
