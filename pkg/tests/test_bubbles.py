import numpy as np
import pytest
from scipy.integrate import quad as quad1d

from lichlab.bubbles import (
    BubbleParams,
    DirectionData,
    QuadSpec,
    asympt_LP,
    asympt_LV,
    blowup_constants,
    bubble,
    bubble_laplacian,
    quad_LP,
    quad_LV,
    standard_profile,
    theta,
)
from lichlab.quadrature import sphere_area


class TestBubbleValues:
    def test_center_value(self):
        p = BubbleParams(n=3, mu=0.01, f_center=1.0)
        assert bubble(p, np.zeros(3)) == pytest.approx(10.0)

    def test_unit_scale_value(self):
        p = BubbleParams(n=3, mu=1.0, f_center=3.0)
        x = np.array([1.0, 0.0, 0.0])
        assert bubble(p, x) == pytest.approx(2 ** -0.5)

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(5)
        p = BubbleParams(n=5, mu=0.3, f_center=2.0)
        for _ in range(10):
            lam = rng.uniform(0.5, 2.0)
            x = rng.normal(size=5)
            pl = BubbleParams(n=5, mu=lam * 0.3, f_center=2.0)
            assert bubble(p, x) == pytest.approx(
                lam ** 1.5 * bubble(pl, lam * x), rel=1e-12)

    def test_standard_profile_normalization(self):
        assert standard_profile(4, 8.0, np.zeros(4)) == pytest.approx(1.0)
        assert standard_profile(4, 8.0, np.array([1.0, 0, 0, 0])) \
            == pytest.approx(0.5)

    def test_standard_profile_is_unit_bubble(self):
        rng = np.random.default_rng(1)
        p = BubbleParams(n=3, mu=1.0, f_center=2.5)
        x = rng.normal(size=(20, 3))
        assert np.allclose(standard_profile(3, 2.5, x), bubble(p, x))

    def test_theta(self):
        assert theta(3.0, np.array([0.0, 4.0, 0.0])) == pytest.approx(5.0)
        assert theta(0.7, np.zeros(3)) == pytest.approx(0.7)
        rng = np.random.default_rng(2)
        z = rng.normal(size=(50, 3))
        assert np.all(theta(0.3, z) >= 0.3)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_pde_residual_closed_form(self, n):
        rng = np.random.default_rng(100 + n)
        p = BubbleParams(n=n, mu=rng.uniform(0.05, 2.0),
                         f_center=rng.uniform(0.5, 5.0))
        x = rng.normal(size=(100, n)) * 3.0
        lhs = bubble_laplacian(p, x)
        rhs = p.f_center * bubble(p, x) ** (2.0 * n / (n - 2.0) - 1.0)
        assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-8


class TestConstants:
    def test_stability_coef_values(self):
        assert blowup_constants(6).stability_coef == pytest.approx(0.2)
        assert blowup_constants(4).stability_coef == 0.0

    def test_bubble_energy_n3_closed_form(self):
        expected = 2.0 ** -3 * 3.0 ** 1.5 * (2 * np.pi ** 2)
        assert abs(blowup_constants(3).bubble_energy - expected) < 1e-9

    def test_bubble_energy_is_profile_mass(self):
        # direct radial quadrature of the B^{2*} integral at f0 = 1
        for n in (3, 5):
            c = 1.0 / (n * (n - 2.0))
            val, _ = quad1d(lambda s: s ** (n - 1) * (1 + c * s * s) ** (-n),
                            0.0, np.inf)
            mass = sphere_area(n - 1) * val
            assert mass == pytest.approx(blowup_constants(n).bubble_energy,
                                         rel=1e-10)

    @pytest.mark.parametrize("n", [5, 6, 7])
    def test_stability_coef_quadrature_identity(self, n):
        # (n-2)/2 * bubble_energy / integral((1 + |x|^2/(n(n-2)))^{2-n})
        c = 1.0 / (n * (n - 2.0))
        val, err = quad1d(
            lambda s: s ** (n - 1) * (1 + c * s * s) ** (2.0 - n), 0.0, np.inf)
        integral = sphere_area(n - 1) * val
        consts = blowup_constants(n)
        lhs = 0.5 * (n - 2.0) * consts.bubble_energy / integral
        assert abs(lhs - consts.stability_coef) < 1e-6


@pytest.fixture(scope="module")
def direction():
    return DirectionData(eps=0.7, beta_k=np.array([0.3, 0.0, 0.0]),
                         zeta0=np.array([1.0, 0.0, 0.0]),
                         zeta_k=np.eye(3)[[1, 0, 2]])


@pytest.fixture(scope="module")
def params():
    return BubbleParams(n=3, mu=0.01, f_center=3.0)


class TestAsymptotics:
    def test_orthogonal_entry_vanishes(self, params):
        d = DirectionData(eps=1.0, beta_k=np.zeros(3),
                          zeta0=np.array([1.0, 0.0, 0.0]),
                          zeta_k=np.eye(3))
        z = np.array([0.0, 1.0, 0.0])      # zhat perp zeta0
        M = asympt_LV(d, params, z)
        assert M[2, 2] == pytest.approx(0.0, abs=1e-15)

    def test_first_order_bracket_traceless(self, params, direction):
        rng = np.random.default_rng(3)
        for _ in range(10):
            z = rng.normal(size=3)
            M = asympt_LV(direction, params, z)
            assert abs(np.trace(M)) < 1e-14 * np.linalg.norm(M)

    def test_second_order_traceless_symmetric(self, params, direction):
        rng = np.random.default_rng(4)
        for _ in range(10):
            z = rng.normal(size=3)
            M = asympt_LP(direction, params, z, 0)
            assert np.allclose(M, M.T)
            assert abs(np.trace(M)) < 1e-13 * max(np.linalg.norm(M), 1e-300)

    def test_beta_zero_gives_zero(self, params):
        d = DirectionData(eps=1.0, beta_k=np.zeros(3),
                          zeta0=np.array([0.0, 1.0, 0.0]), zeta_k=np.eye(3))
        assert np.allclose(asympt_LP(d, params, np.ones(3), 1), 0.0)
        assert np.allclose(quad_LP(np.zeros(3), params, np.ones(3), 1).matrix,
                           0.0)

    def test_second_order_decay_rate(self, params, direction):
        z = np.array([0.4, 0.1, -0.2])
        M1 = asympt_LP(direction, params, z, 0)
        M2 = asympt_LP(direction, params, 2 * z, 0)
        assert np.allclose(M2, M1 / 2 ** 3)

    def test_first_order_decay_rate(self, params, direction):
        z = np.array([0.4, 0.1, -0.2])
        M1 = asympt_LV(direction, params, z)
        M2 = asympt_LV(direction, params, 2 * z)
        assert np.allclose(M2, M1 / 2 ** 2)


class TestQuadrature:
    def test_zero_coefficient(self, params):
        out = quad_LV(np.zeros(3), params, np.array([1.0, 0, 0]))
        assert np.allclose(out.matrix, 0.0)

    def test_traceless_symmetric(self, params, direction):
        z = 60 * params.mu * np.array([0.5, 0.5, 1.0]) / np.sqrt(1.5)
        out = quad_LV(direction.eps * direction.zeta0, params, z).matrix
        scale = np.linalg.norm(out)
        assert np.allclose(out, out.T, atol=1e-8 * scale)
        assert abs(np.trace(out)) < 1e-6 * scale

    def test_matches_asymptotics_far_field(self, params, direction):
        z = 50 * params.mu * np.array([0.3, -0.2, 1.0]) / np.linalg.norm(
            [0.3, -0.2, 1.0])
        qv = quad_LV(direction.eps * direction.zeta0, params, z).matrix
        av = asympt_LV(direction, params, z)
        assert np.linalg.norm(qv - av) / np.linalg.norm(av) < 0.05
        qp = quad_LP(direction.beta_k[0] * direction.zeta_k[0],
                     params, z, 0).matrix
        ap = asympt_LP(direction, params, z, 0)
        assert np.linalg.norm(qp - ap) / np.linalg.norm(ap) < 0.10

    def test_envelope_bound(self, params, direction):
        # |L V| <= C eps theta(z)^{1-n} with one fitted constant over a
        # z-grid spanning near and far field
        spec = QuadSpec(polar_order=32, azimuth_order=64)
        zhat = np.array([0.3, -0.2, 1.0]) / np.linalg.norm([0.3, -0.2, 1.0])
        ratios = []
        for fac in (2.0, 5.0, 20.0, 80.0):
            z = fac * params.mu * zhat
            out = quad_LV(direction.eps * direction.zeta0, params, z,
                          spec).matrix
            env = direction.eps * theta(params.mu, z) ** (1 - 3)
            ratios.append(np.max(np.abs(out)) / env)
        C = max(ratios)
        assert C < 5.0            # one uniform constant fits the whole range
        assert min(ratios) > 0.0
