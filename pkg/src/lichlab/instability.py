"""Explicit blow-up families on the round sphere.

For lam > 1 the radial profile

    phi(x) = (lam^2 - 1)^{(n-2)/4} (lam - cos r)^{(2-n)/2},  r = distance,

is the sphere bubble: smooth, positive, with sup -> infinity as lam -> 1,
and it satisfies the Yamabe-type identity

    lap phi + (n(n-2)/4) phi = (n(n-2)/4) phi^{2*-1}

globally.  (The cosine enters the distance dependence; the verification
below pins this convention numerically, see ``sphere_yamabe_residual``.)

On S^3 the construction couples phi to a radial one-form: Z solves

    Z'' + 2 cot(r) Z' + (1 - 2 cot^2 r) Z = -(3/4) phi^6,
    Z(pi/2) = 1, Z'(pi/2) = 0,

and with a smooth cutoff eta supported away from both poles, the one-form
W = eta Z d/dr satisfies  lame(W) = phi^6 X0 + Y  with X0 = eta d/dr and

    Y = -(4/3) (2 eta' Z' + eta'' Z + 2 cot(r) eta' Z) d/dr .

Setting U = -L W makes (phi, W) an exact solution of the coupled system
with data (U, Y) bounded uniformly as lam -> 1 while sup phi blows up.

The homogeneous radial equation has the closed solutions sin(r) and
cos(r) + cos^3(r)/(3 sin^2 r); they power the variation-of-parameters
oracle used by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import (
    OneFormField,
    ScalarField,
    SphereRadial,
    SymTensorField,
    conformal_killing_deriv,
    lame,
    laplace_beltrami,
    tensor_norm_squared,
    _fd_matrix,
)

__all__ = [
    "EtaParams",
    "InstabilityAssembly",
    "InstabilityReport",
    "phi_bubble_sphere",
    "sphere_yamabe_residual",
    "solve_Z",
    "homogeneous_solutions",
    "assemble",
    "verify",
]


def phi_bubble_sphere(n, lam, r_dist):
    """Sphere bubble at geodesic distance r_dist from the concentration pole."""
    if lam <= 1.0:
        raise ValueError("lam must exceed 1")
    r_dist = np.asarray(r_dist, dtype=float)
    return ((lam ** 2 - 1.0) ** ((n - 2.0) / 4.0)
            * (lam - np.cos(r_dist)) ** ((2.0 - n) / 2.0))


def sphere_yamabe_residual(n, lam, grid=None):
    """Relative FD residual of the Yamabe identity for the sphere bubble.

    Computed on a radial grid with the round-S^n radial Laplacian
    -f'' - (n-1) cot(r) f'; pins the cosine distance convention (the
    alternative r-convention leaves an O(1) residual).
    """
    if grid is None:
        grid = np.linspace(1e-3, np.pi - 1e-3, 4096)
    phi = phi_bubble_sphere(n, lam, grid)
    d1 = _fd_matrix(grid, 1)
    d2 = _fd_matrix(grid, 2)
    lap = -(d2 @ phi) - (n - 1.0) / np.tan(grid) * (d1 @ phi)
    coef = n * (n - 2.0) / 4.0
    p = 2.0 * n / (n - 2.0)
    res = lap + coef * phi - coef * phi ** (p - 1.0)
    return float(np.max(np.abs(res)) / np.max(coef * phi ** (p - 1.0)))


def homogeneous_solutions(r):
    """Closed-form solutions of the homogeneous radial one-form equation.

    Returns (Z1, Z2) with Z1(pi/2) = 1, Z1'(pi/2) = 0 and Z2(pi/2) = 0,
    Z2'(pi/2) = -1.
    """
    r = np.asarray(r, dtype=float)
    z1 = np.sin(r)
    z2 = np.cos(r) + np.cos(r) ** 3 / (3.0 * np.sin(r) ** 2)
    return z1, z2


def solve_Z(lam, grid, rtol=1e-12, atol=1e-13):
    """Integrate the sourced radial equation outward from the equator.

    Returns (Z, Z') sampled on the grid; the integration runs separately
    toward each pole with a high-order adaptive scheme and dense output.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0) or np.any(grid >= np.pi):
        raise ValueError("grid must lie strictly inside (0, pi)")

    def rhs(r, y):
        z, zp = y
        cot = 1.0 / np.tan(r)
        phi6 = phi_bubble_sphere(3, lam, r) ** 6
        return [zp, -2.0 * cot * zp - (1.0 - 2.0 * cot ** 2) * z - 0.75 * phi6]

    mid = 0.5 * np.pi
    y0 = [1.0, 0.0]
    Z = np.empty_like(grid)
    Zp = np.empty_like(grid)
    left = grid <= mid
    for mask, end in ((left, grid.min()), (~left, grid.max())):
        if not np.any(mask):
            continue
        sol = solve_ivp(rhs, (mid, end), y0, method="DOP853",
                        dense_output=True, rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"radial integration failed: {sol.message}")
        vals = sol.sol(grid[mask])
        Z[mask] = vals[0]
        Zp[mask] = vals[1]
    return Z, Zp


# ---------------------------------------------------------------------------
# smooth cutoff from the exponential mollifier
# ---------------------------------------------------------------------------

def _moll(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0.0
    out[m] = np.exp(-1.0 / t[m])
    return out


def _moll_d1(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0.0
    out[m] = np.exp(-1.0 / t[m]) / t[m] ** 2
    return out


def _moll_d2(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0.0
    out[m] = np.exp(-1.0 / t[m]) * (1.0 / t[m] ** 4 - 2.0 / t[m] ** 3)
    return out


def _smooth_step(t):
    """C^inf step S with S = 0 for t <= 0, 1 for t >= 1, and S', S''."""
    a, b = _moll(t), _moll(1.0 - np.asarray(t, dtype=float))
    ap, bp = _moll_d1(t), -_moll_d1(1.0 - np.asarray(t, dtype=float))
    app, bpp = _moll_d2(t), _moll_d2(1.0 - np.asarray(t, dtype=float))
    q = a + b
    qp = ap + bp
    qpp = app + bpp
    S = a / q
    Sp = (ap * q - a * qp) / q ** 2
    Spp = (app * q - a * qpp) / q ** 2 - 2.0 * qp * Sp / q
    return S, Sp, Spp


@dataclass(frozen=True)
class EtaParams:
    """Plateau cutoff: rises on [delta, delta + rise], falls symmetrically.

    The default support hugs the equator, where the sourced radial profile
    is pinned by its initial conditions; the assembled data (U, Y) then
    vary by about one percent along the whole blow-up family.
    """

    delta: float = 1.2
    rise: float = 0.25
    fall: float = 0.25

    def __post_init__(self):
        if self.delta <= 0.0 or self.rise <= 0.0 or self.fall <= 0.0:
            raise ValueError("cutoff parameters must be positive")
        if self.delta + self.rise >= np.pi - self.delta - self.fall:
            raise ValueError("cutoff plateau is empty")

    def evaluate(self, r):
        """eta, eta', eta'' at radial points r (analytic derivatives)."""
        r = np.asarray(r, dtype=float)
        s1, s1p, s1pp = _smooth_step((r - self.delta) / self.rise)
        t2 = (np.pi - self.delta - r) / self.fall
        s2, s2p, s2pp = _smooth_step(t2)
        eta = s1 * s2
        etap = s1p / self.rise * s2 - s1 * s2p / self.fall
        etapp = (s1pp / self.rise ** 2 * s2
                 - 2.0 * s1p * s2p / (self.rise * self.fall)
                 + s1 * s2pp / self.fall ** 2)
        return eta, etap, etapp


@dataclass
class InstabilityAssembly:
    lam: float
    geometry: SphereRadial
    phi: ScalarField
    Z: np.ndarray = field(repr=False)
    Zp: np.ndarray = field(repr=False)
    W: OneFormField
    U: SymTensorField
    Y: OneFormField
    X0: OneFormField
    eta: np.ndarray = field(repr=False)
    eta_params: EtaParams = None


@dataclass
class InstabilityReport:
    lam: float
    scalar_residual: float
    vector_residual: float
    sup_phi: float
    sup_phi_closed_form: float
    norm_U: float
    norm_Y: float
    cancellation: float


def assemble(lam, eta_params: EtaParams = None, geometry: SphereRadial = None):
    """Build the S^3 blow-up family member at the given lam > 1."""
    if lam <= 1.0:
        raise ValueError("lam must exceed 1")
    eta_params = eta_params or EtaParams()
    g = geometry or SphereRadial(4096)
    r = g.r
    eta, etap, etapp = eta_params.evaluate(r)
    if np.max(np.abs(eta)) == 0.0:
        raise ValueError("cutoff vanishes identically")

    phi = ScalarField(g, phi_bubble_sphere(3, lam, r))
    Z, Zp = solve_Z(lam, r)
    W = OneFormField(g, eta * Z)
    LW = conformal_killing_deriv(W)
    U = SymTensorField(g, -LW.values)
    cot = g.cot_r
    Y = OneFormField(g, -(4.0 / 3.0) * (2.0 * etap * Zp + etapp * Z
                                        + 2.0 * cot * etap * Z))
    X0 = OneFormField(g, eta.copy())
    return InstabilityAssembly(lam=lam, geometry=g, phi=phi, Z=Z, Zp=Zp,
                               W=W, U=U, Y=Y, X0=X0, eta=eta,
                               eta_params=eta_params)


def verify(assembly: InstabilityAssembly):
    """Residuals of the coupled system for an assembled family member.

    The quadratic source |U + L W|^2 vanishes identically by construction
    (U = -L W), so the scalar equation reduces to the Yamabe identity for
    phi; the vector residual checks lame(W) against phi^6 X0 + Y.  The
    supremum of phi is measured on a dense closed-form sample of [0, pi]
    (the grid excludes the poles where the maximum sits).
    """
    g = assembly.geometry
    phi = assembly.phi
    lam = assembly.lam

    LW = conformal_killing_deriv(assembly.W)
    quad = tensor_norm_squared(SymTensorField(g, assembly.U.values + LW.values))
    cancellation = float(np.max(np.abs(quad)))

    coef = 0.75
    rhs_scale = coef * phi.values ** 5
    scal_res = (laplace_beltrami(phi).values + coef * phi.values
                - rhs_scale - quad / phi.values ** 7)
    scalar_residual = float(np.max(np.abs(scal_res)) / np.max(rhs_scale))

    vec_rhs = phi.values ** 6 * assembly.X0.values + assembly.Y.values
    vec_res = lame(assembly.W).values - vec_rhs
    vec_scale = max(np.max(np.abs(vec_rhs)), 1e-300)
    vector_residual = float(np.max(np.abs(vec_res)) / vec_scale)

    dense = np.linspace(0.0, np.pi, 8 * g.resolution + 1)
    sup_phi = float(np.max(phi_bubble_sphere(3, lam, dense)))
    closed = (lam + 1.0) ** 0.25 * (lam - 1.0) ** -0.25

    return InstabilityReport(
        lam=lam,
        scalar_residual=scalar_residual,
        vector_residual=vector_residual,
        sup_phi=sup_phi,
        sup_phi_closed_form=closed,
        norm_U=float(np.max(np.abs(assembly.U.values))),
        norm_Y=float(np.max(np.abs(assembly.Y.values))),
        cancellation=cancellation,
    )
