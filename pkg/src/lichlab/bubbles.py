"""Blow-up profiles and the far-field one-form machinery.

The concentration model is the rescaled profile

    B(x) = mu^{(n-2)/2} (mu^2 + f0/(n(n-2)) |x - x0|^2)^{1-n/2},

which solves lap_xi B = f0 B^{2*-1} on R^n.  Around such a profile, the
momentum response to a one-form coefficient X is captured by convolution
one-forms whose conformal Killing derivatives admit explicit far-field
expansions; both the direct quadrature (``quad_LV`` / ``quad_LP``) and the
closed-form leading terms (``asympt_LV`` / ``asympt_LP``) are provided so
that each can serve as the other's oracle.

Constants (omega_d = area of the d-sphere in R^{d+1}):

    C1 = n^{(n+2)/2} (n-2)^{n/2} omega_n / (2^{n+1} (n-1) omega_{n-1})
    C2 = -n^{(n+4)/2} (n-2)^{n/2} omega_n / (2^{n+1} (n-1) omega_{n-1})
    bubble_energy = 2^{-n} (n(n-2))^{n/2} omega_n       (integral of B^{2*})
    stability_coef = (n-2)(n-4) / (8(n-1))

C2 and the second-order angular bracket are fixed against the quadrature
oracle (moment expansion of the convolution kernel); see the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, beta as beta_fn

from .quadrature import gauss_panels, smoothstep, sphere_area, unit_sphere_rule

__all__ = [
    "BubbleParams",
    "DirectionData",
    "QuadSpec",
    "QuadResult",
    "QuadratureBudgetError",
    "bubble",
    "bubble_laplacian",
    "standard_profile",
    "theta",
    "blowup_constants",
    "quad_LV",
    "quad_LP",
    "asympt_LV",
    "asympt_LP",
]


class QuadratureBudgetError(RuntimeError):
    """Truncation tail bound exceeded the requested tolerance."""


@dataclass(frozen=True)
class BubbleParams:
    n: int
    mu: float
    f_center: float
    center: np.ndarray = None

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.f_center <= 0.0:
            raise ValueError("f_center must be positive")
        c = np.zeros(self.n) if self.center is None else np.asarray(
            self.center, dtype=float)
        object.__setattr__(self, "center", c)

    @property
    def curvature_scale(self):
        """f0 / (n (n-2)), the coefficient of |x|^2 in the profile."""
        return self.f_center / (self.n * (self.n - 2.0))


@dataclass(frozen=True)
class DirectionData:
    """Leading coefficient data of the momentum one-form at the center."""

    eps: float                      # |X(0)|
    beta_k: np.ndarray              # |d_k X(0)| per axis
    zeta0: np.ndarray               # unit direction of X(0)
    zeta_k: np.ndarray              # unit directions of d_k X(0), rows k

    def __post_init__(self):
        object.__setattr__(self, "beta_k", np.asarray(self.beta_k, dtype=float))
        object.__setattr__(self, "zeta0", np.asarray(self.zeta0, dtype=float))
        object.__setattr__(self, "zeta_k", np.asarray(self.zeta_k, dtype=float))
        for v in [self.zeta0] + list(self.zeta_k):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("direction vectors must be unit")


def bubble(p: BubbleParams, x):
    """Profile value at point(s) x; x has shape (..., n)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum((x - p.center) ** 2, axis=-1)
    return p.mu ** ((p.n - 2.0) / 2.0) * (
        p.mu ** 2 + p.curvature_scale * r2) ** (1.0 - p.n / 2.0)


def bubble_laplacian(p: BubbleParams, x):
    """Closed-form lap_xi of the profile (exact second derivatives)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum((x - p.center) ** 2, axis=-1)
    base = p.mu ** 2 + p.curvature_scale * r2
    return (p.mu ** ((p.n - 2.0) / 2.0) * p.n * (p.n - 2.0)
            * p.curvature_scale * p.mu ** 2 * base ** (-p.n / 2.0 - 1.0))


def standard_profile(n, f0, x):
    """Unit-height profile, value 1 at the origin."""
    if f0 <= 0.0:
        raise ValueError("f0 must be positive")
    return bubble(BubbleParams(n=n, mu=1.0, f_center=f0), x)


def theta(mu, z):
    """Concentration weight (mu^2 + |z|^2)^{1/2}."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    z = np.asarray(z, dtype=float)
    return np.sqrt(mu ** 2 + np.sum(z ** 2, axis=-1))


@dataclass(frozen=True)
class Constants:
    C1: float
    C2: float
    bubble_energy: float            # integral of B^{2*}, f0 = n(n-2) scale
    stability_coef: float


def blowup_constants(n):
    """Dimension constants of the far-field expansions and stability bound."""
    if n < 3:
        raise ValueError("n must be >= 3")
    om_n = sphere_area(n)
    om_nm1 = sphere_area(n - 1)
    denom = 2.0 ** (n + 1) * (n - 1.0) * om_nm1
    c1 = n ** ((n + 2.0) / 2.0) * (n - 2.0) ** (n / 2.0) * om_n / denom
    c2 = -(n ** ((n + 4.0) / 2.0)) * (n - 2.0) ** (n / 2.0) * om_n / denom
    kn = 2.0 ** (-n) * (n * (n - 2.0)) ** (n / 2.0) * om_n
    cn = (n - 2.0) * (n - 4.0) / (8.0 * (n - 1.0))
    return Constants(C1=c1, C2=c2, bubble_energy=kn, stability_coef=cn)


# ---------------------------------------------------------------------------
# far-field brackets (shared by the asymptotic formulas and their tests)
# ---------------------------------------------------------------------------

def _bracket_first_order(n, zeta, zhat):
    d = np.eye(n)
    zd = float(zeta @ zhat)
    return (d * zd - np.outer(zeta, zhat) - np.outer(zhat, zeta)
            - (n - 2.0) * zd * np.outer(zhat, zhat))


def _bracket_second_order(n, zeta_k, zhat, k):
    d = np.eye(n)
    zd = float(zeta_k @ zhat)
    col = n * zhat * zhat[k] - d[k]
    return (np.outer(zeta_k, col) + np.outer(col, zeta_k)
            + zd * (-n * d * zhat[k]
                    - (n - 2.0) * np.outer(d[k], zhat)
                    - (n - 2.0) * np.outer(zhat, d[k])
                    + (n + 2.0) * (n - 2.0) * np.outer(zhat, zhat) * zhat[k])
            + zeta_k[k] * (d - (n - 2.0) * np.outer(zhat, zhat)))


def asympt_LV(d: DirectionData, p: BubbleParams, z):
    """Leading far-field Killing derivative of the first-order form."""
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z)
    if r == 0.0:
        raise ValueError("z must be nonzero")
    zhat = z / r
    c = blowup_constants(p.n)
    return (d.eps * c.C1 * p.f_center ** (-p.n / 2.0) * r ** (1.0 - p.n)
            * _bracket_first_order(p.n, d.zeta0, zhat))


def asympt_LP(d: DirectionData, p: BubbleParams, z, k):
    """Second-order far-field term for the k-th moment one-form."""
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z)
    if r == 0.0:
        raise ValueError("z must be nonzero")
    zhat = z / r
    c = blowup_constants(p.n)
    return (d.beta_k[k] * c.C2 * p.f_center ** (-(p.n + 2.0) / 2.0)
            * p.mu ** 2 * r ** (-p.n)
            * _bracket_second_order(p.n, d.zeta_k[k], zhat, k))


# ---------------------------------------------------------------------------
# direct quadrature of the convolution one-forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadSpec:
    radial_order: int = 20
    polar_order: int = 48
    azimuth_order: int = 96
    patch_polar_order: int = 32
    patch_azimuth_order: int = 64
    trunc_factor: float = 1.0e3     # truncation radius in units of mu
    tail_tol: float = 1.0e-6


@dataclass
class QuadResult:
    matrix: np.ndarray
    tail_bound: float

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _stress_contraction(n, w, vec):
    """H_{ij,p}(w) vec^p for w of shape (M, n); returns (M, n, n).

    H is the Killing-derivative stress of the Lame fundamental solution,
    H_{ij,p} = 2 n kappa |w|^{1-n} [d_ij w^_p - w^_i d_jp - w^_j d_ip
                                    - (n-2) w^_i w^_j w^_p].
    """
    kappa = 1.0 / (4.0 * (n - 1.0) * sphere_area(n - 1))
    r = np.linalg.norm(w, axis=-1)
    wh = w / r[:, None]
    d = np.eye(n)
    zd = wh @ vec
    out = (d[None, :, :] * zd[:, None, None]
           - wh[:, :, None] * vec[None, None, :]
           - wh[:, None, :] * vec[None, :, None]
           - (n - 2.0) * zd[:, None, None] * wh[:, :, None] * wh[:, None, :])
    return 2.0 * n * kappa * (r ** (1.0 - n))[:, None, None] * out


def _profile_power(p, pts):
    """B^{2*}(pts) for pts of shape (M, n)."""
    r2 = np.sum((pts - p.center) ** 2, axis=-1)
    return p.mu ** p.n * (p.mu ** 2 + p.curvature_scale * r2) ** (-p.n)


def _tail_mass(p, radius, moment=0):
    """Integral of |y - x0|^moment B^{2*} over |y - x0| > radius, closed form."""
    n = p.n
    c = p.curvature_scale
    S = np.sqrt(c) * radius / p.mu
    x = S * S / (1.0 + S * S)
    a, b = (n + moment) / 2.0, (n - moment) / 2.0
    total = 0.5 * beta_fn(a, b)
    frac = 1.0 - betainc(a, b, x)
    return (p.mu ** moment * c ** (-(n + moment) / 2.0)
            * sphere_area(n - 1) * total * frac)


def _moment_quadrature(p, z, vec, spec, moment_axis=None):
    """Quadrature of  int m(y) B^{2*}(y) H(z - y) vec dy  with a
    partition-of-unity patch around the kernel singularity; m = 1 or y_k."""
    n = p.n
    z = np.asarray(z, dtype=float)
    dist = np.linalg.norm(z - p.center)
    if dist == 0.0:
        raise ValueError("z must differ from the bubble center")
    rho = 0.5 * dist
    trunc = max(spec.trunc_factor * p.mu, 5.0 * dist)

    def m_weight(pts):
        if moment_axis is None:
            return np.ones(pts.shape[0])
        return pts[:, moment_axis] - p.center[moment_axis]

    total = np.zeros((n, n))

    # patch centered at the kernel singularity; in polar coordinates about z
    # the |w|^{1-n} kernel is cancelled by the measure
    dirs, angw = unit_sphere_rule(n, spec.patch_polar_order,
                                  spec.patch_azimuth_order)
    redges = np.concatenate([[0.0], np.geomspace(1e-3 * rho, 1.5 * rho, 12)])
    rn, rw = gauss_panels(redges, spec.radial_order)
    for r, wr in zip(rn, rw):
        chi = 1.0 - smoothstep((r / rho - 1.0) / 0.5)
        if chi == 0.0:
            continue
        w = r * dirs                               # w = z - y
        y = z[None, :] - w
        H = _stress_contraction(n, w, vec)
        fac = angw * _profile_power(p, y) * m_weight(y) * chi
        total += wr * r ** (n - 1.0) * np.einsum("a,aij->ij", fac, H)

    # bulk: bubble-centered radial panels out to the truncation radius,
    # complementary partition weight
    dirs, angw = unit_sphere_rule(n, spec.polar_order, spec.azimuth_order)
    edges = [0.0, 0.5 * p.mu]
    while edges[-1] < trunc:
        edges.append(min(2.0 * edges[-1], trunc))
    extra = [dist - rho, dist, dist + rho]
    edges = np.unique(np.concatenate([edges, [e for e in extra if e < trunc]]))
    rn, rw = gauss_panels(edges, spec.radial_order)
    for r, wr in zip(rn, rw):
        y = p.center[None, :] + r * dirs
        w = z[None, :] - y
        dw = np.linalg.norm(w, axis=-1)
        comp = smoothstep((dw / rho - 1.0) / 0.5)
        mask = comp > 0.0
        if not np.any(mask):
            continue
        H = _stress_contraction(n, w[mask], vec)
        fac = (angw[mask] * _profile_power(p, y[mask])
               * m_weight(y[mask]) * comp[mask])
        total += wr * r ** (n - 1.0) * np.einsum("a,aij->ij", fac, H)

    # analytic far-field tail bound
    kappa = 1.0 / (4.0 * (n - 1.0) * sphere_area(n - 1))
    c_h = 2.0 * n * kappa * n * (n + 2.0)
    moment = 0 if moment_axis is None else 1
    tail = c_h * (trunc - dist) ** (1.0 - n) * _tail_mass(p, trunc, moment)
    if tail > spec.tail_tol:
        raise QuadratureBudgetError(
            f"tail bound {tail:.3e} exceeds tolerance {spec.tail_tol:.1e}; "
            "raise trunc_factor")
    return QuadResult(matrix=total, tail_bound=float(tail))


def quad_LV(X0, p: BubbleParams, z, spec: QuadSpec = None):
    """Killing derivative at z of the first-order convolution one-form.

    X0 is the (unnormalized) one-form coefficient at the center; the result
    is linear in it.
    """
    spec = spec or QuadSpec()
    X0 = np.asarray(X0, dtype=float)
    if np.allclose(X0, 0.0):
        return QuadResult(matrix=np.zeros((p.n, p.n)), tail_bound=0.0)
    return _moment_quadrature(p, z, X0, spec)


def quad_LP(dX0_k, p: BubbleParams, z, k, spec: QuadSpec = None):
    """Killing derivative at z of the k-th first-moment convolution one-form.

    dX0_k is the (unnormalized) k-th directional derivative of the one-form
    coefficient at the center.
    """
    spec = spec or QuadSpec()
    dX0_k = np.asarray(dX0_k, dtype=float)
    if np.allclose(dX0_k, 0.0):
        return QuadResult(matrix=np.zeros((p.n, p.n)), tail_bound=0.0)
    return _moment_quadrature(p, z, dX0_k, spec, moment_axis=k)
