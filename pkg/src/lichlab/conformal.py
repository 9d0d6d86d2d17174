"""Conformal-method bookkeeping.

Maps physics data (psi, pi, tau, sigma) and a potential V to the normalized
coefficients of the coupled scalar/momentum system, classifies the
focusing/defocusing regime, reconstructs initial data sets from solutions,
and measures the residuals of the original Hamiltonian and momentum
constraints for a reconstructed data set.

Conventions: the scalar unknown u multiplies the background metric as
u^{4/(n-2)}, the critical exponent is 2* = 2n/(n-2), and the normalization
constant is c_n = (n-2)/(4(n-1)), so that (u, W) solves

    lap_g u + h u = f u^{2*-1} + (b + gamma |U + L_g W|^2) u^{-2*-1}
    lame_g W      = u^{2*} X + Y

with h = c_n (R(g) - |grad psi|^2), f = c_n (2 V(psi) - ((n-1)/n) tau^2),
b = c_n pi^2, U = sigma, gamma = c_n, X = -((n-1)/n) grad tau,
Y = -pi grad psi exactly when the conformal pair (u, W) parametrizes a
solution of the constraints.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import (
    GeometryMismatch,
    OneFormField,
    ScalarField,
    SymTensorField,
    gradient,
    laplace_beltrami,
    partial_deriv,
    sym_index,
    tensor_trace,
)

__all__ = [
    "PhysicsData",
    "SystemCoefficients",
    "InitialDataSet",
    "Potential",
    "coefficients",
    "classify",
    "normalize",
    "reconstruct",
    "constraint_residuals",
    "critical_exponent",
]


def critical_exponent(n):
    return 2.0 * n / (n - 2.0)


@dataclass
class Potential:
    """Potential evaluator: value with first and second derivatives."""

    func: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    deriv2: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def constant(cls, value):
        v = float(value)
        return cls(lambda s: v + 0.0 * s, lambda s: 0.0 * s, lambda s: 0.0 * s)

    @classmethod
    def quadratic(cls, c0=0.0, c1=0.0, c2=0.0):
        return cls(lambda s: c0 + c1 * s + 0.5 * c2 * s * s,
                   lambda s: c1 + c2 * s,
                   lambda s: c2 + 0.0 * s)

    def __call__(self, s):
        return self.func(np.asarray(s, dtype=float))


@dataclass
class PhysicsData:
    psi: ScalarField
    pi: ScalarField
    tau: ScalarField
    sigma: SymTensorField
    potential: Potential
    trace_tol: float = 1e-10

    def __post_init__(self):
        g = self.psi.geometry
        for f in (self.pi, self.tau, self.sigma):
            if f.geometry is not g and f.geometry != g:
                raise GeometryMismatch("physics data fields share no geometry")
        tr = np.max(np.abs(tensor_trace(self.sigma)))
        if tr > self.trace_tol:
            warnings.warn(
                f"sigma has g-trace defect {tr:.3e}; the general system only "
                "needs a symmetric U, continuing", stacklevel=2)

    @property
    def geometry(self):
        return self.psi.geometry


@dataclass
class SystemCoefficients:
    """Canonical coefficients (h, f, b, U, X, Y, gamma) of the coupled system."""

    h: ScalarField
    f: ScalarField
    b: ScalarField
    U: SymTensorField
    X: OneFormField
    Y: OneFormField
    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if np.min(self.b.values) < -1e-13:
            raise ValueError("b must be nonnegative")
        g = self.h.geometry
        for f in (self.f, self.b, self.U, self.X, self.Y):
            if f.geometry is not g and f.geometry != g:
                raise GeometryMismatch("coefficient fields share no geometry")

    @property
    def geometry(self):
        return self.h.geometry

    def replace(self, **kw):
        data = dict(h=self.h, f=self.f, b=self.b, U=self.U,
                    X=self.X, Y=self.Y, gamma=self.gamma)
        data.update(kw)
        return SystemCoefficients(**data)


@dataclass
class InitialDataSet:
    """Reconstructed (metric factor, extrinsic curvature, field, momentum)."""

    conformal_factor: ScalarField          # phi, so that g~ = phi^{4/(n-2)} g
    extrinsic: SymTensorField              # K~ in background coordinates
    psi: ScalarField                       # psi~ = psi
    pi: ScalarField                        # pi~ = phi^{-2n/(n-2)} pi

    def __post_init__(self):
        if np.min(self.conformal_factor.values) <= 0.0:
            raise ValueError("conformal factor must be positive")

    @property
    def geometry(self):
        return self.conformal_factor.geometry


def coefficients(data: PhysicsData):
    """Scalar coefficient pair (R_psi, B) of the conformal system."""
    g = data.geometry
    n = g.dimension
    Rg = g.scalar_curvature()
    if g.kind == "SphereRadial":
        grad_sq = (g.d1 @ data.psi.values) ** 2
    else:
        dpsi = gradient(data.psi)
        grad_sq = np.sum(dpsi.values ** 2, axis=0)
    r_psi = ScalarField(g, Rg - grad_sq)
    V = data.potential(data.psi.values)
    B = ScalarField(g, 2.0 * V - ((n - 1.0) / n) * data.tau.values ** 2)
    return r_psi, B


def classify(B: ScalarField):
    """Focusing / Defocusing / Mixed per the sign of B."""
    lo, hi = float(np.min(B.values)), float(np.max(B.values))
    if lo > 0.0:
        return "Focusing"
    if hi <= 0.0:
        return "Defocusing"
    return "Mixed"


def normalize(data: PhysicsData, h_override: ScalarField = None):
    """Physics data -> SystemCoefficients.

    With the default h, (u, W) solves the normalized system iff it solves
    the conformal constraint system of ``data``.  ``h_override`` replaces
    the derived h to produce general-system coefficients (the constraint
    correspondence is then intentionally broken; used by sweeps that probe
    the wider coefficient class).
    """
    g = data.geometry
    n = g.dimension
    c = (n - 2.0) / (4.0 * (n - 1.0))
    r_psi, B = coefficients(data)
    h = h_override if h_override is not None else ScalarField(g, c * r_psi.values)
    f = ScalarField(g, c * B.values)
    b = ScalarField(g, c * data.pi.values ** 2)
    if g.kind == "SphereRadial":
        X = OneFormField(g, -((n - 1.0) / n) * (g.d1 @ data.tau.values))
        Y = OneFormField(g, -data.pi.values * (g.d1 @ data.psi.values))
    else:
        X = OneFormField(g, -((n - 1.0) / n) * gradient(data.tau).values)
        Y = OneFormField(g, -data.pi.values * gradient(data.psi).values)
    return SystemCoefficients(h=h, f=f, b=b, U=data.sigma, X=X, Y=Y, gamma=c)


def reconstruct(u: ScalarField, W: OneFormField, data: PhysicsData):
    """Initial data set from a solution pair (u, W) of the conformal system."""
    from .geometry import conformal_killing_deriv

    g = u.geometry
    n = g.dimension
    if np.min(u.values) <= 0.0:
        raise ValueError("u must be positive to reconstruct initial data")
    phi = u.values
    LW = conformal_killing_deriv(W)
    conf = phi ** (4.0 / (n - 2.0))
    Kvals = np.empty_like(LW.values)
    for a, (i, j) in enumerate(sym_index(n)):
        gij = 1.0 if i == j else 0.0
        Kvals[a] = (data.tau.values / n) * conf * gij \
            + phi ** (-2.0) * (data.sigma.values[a] + LW.values[a])
    pit = ScalarField(g, phi ** (-2.0 * n / (n - 2.0)) * data.pi.values)
    return InitialDataSet(
        conformal_factor=ScalarField(g, phi.copy()),
        extrinsic=SymTensorField(g, Kvals),
        psi=data.psi.copy(),
        pi=pit,
    )


def _conformal_divergence_correction(g, T_full, s):
    """Christoffel corrections to the flat divergence of a covariant 2-tensor.

    For g~_ij = e^{2 sigma} delta_ij with s_i = d_i sigma the connection is
    Gamma^l_{jk} = d^l_j s_k + d^l_k s_j - d_{jk} s_l, and

        delta^{jk} nabla~_j T_{ki} = delta^{jk} d_j T_{ki} + C_i .

    Returns C.
    """
    n = g.dimension
    trT = np.einsum("ii...->...", T_full)                  # flat trace
    sT = np.einsum("l...,li...->i...", s, T_full)          # s^l T_{li}
    # -delta^{jk} Gamma^l_{jk} T_{li} = (n - 2) s^l T_{li}
    # -delta^{jk} Gamma^l_{ji} T_{kl} = -s_i trT   (T symmetric)
    return (n - 2.0) * sT - s * trT


def constraint_residuals(ids: InitialDataSet, potential: Potential):
    """L^2 norms of the Hamiltonian and momentum constraint defects.

    The scalar curvature of the physical metric is evaluated through the
    conformal transformation law (reusing the spectrally exact flat
    Laplacian); covariant derivatives use the conformal Christoffels.
    Torus geometry only.
    """
    g = ids.geometry
    if g.kind != "Torus":
        raise GeometryMismatch(
            "constraint residual evaluation is implemented on the torus")
    n = g.dimension
    phi = ids.conformal_factor.values
    two_star = critical_exponent(n)

    conf = phi ** (4.0 / (n - 2.0))       # g~_ij = conf * delta_ij
    inv_conf = 1.0 / conf

    # scalar curvature of g~ = e^{2 omega} delta through the conformal
    # transformation law, with omega = (2/(n-2)) log phi.  (The equivalent
    # route through lap(phi) telescopes discretely onto the solver's own
    # scalar residual and would hide the discretization error this
    # diagnostic is meant to measure.)
    omega = (2.0 / (n - 2.0)) * np.log(phi)
    lap_omega = laplace_beltrami(ScalarField(g, omega)).values
    domega = np.stack([partial_deriv(g, omega, a) for a in range(n)])
    R_tilde = -2.0 * (n - 1.0) * inv_conf * (
        -lap_omega + 0.5 * (n - 2.0) * np.sum(domega ** 2, axis=0))

    K = ids.extrinsic.full()
    trK = inv_conf * np.einsum("ii...->...", K)
    K_sq = inv_conf ** 2 * np.einsum("ij...,ij...->...", K, K)

    dpsi = np.stack([partial_deriv(g, ids.psi.values, a) for a in range(n)])
    grad_psi_sq = inv_conf * np.sum(dpsi ** 2, axis=0)

    ham = (R_tilde + trK ** 2 - K_sq
           - ids.pi.values ** 2 - grad_psi_sq
           - 2.0 * potential(ids.psi.values))

    # momentum: g~^{jk} nabla~_j K_{ki} - d_i trK - pi~ d_i psi~
    s = (2.0 / (n - 2.0)) * np.stack(
        [partial_deriv(g, np.log(phi), a) for a in range(n)])
    flat_div = np.stack([
        sum(partial_deriv(g, K[j, i], j) for j in range(n))
        for i in range(n)
    ])
    corr = _conformal_divergence_correction(g, K, s)
    divK = inv_conf * (flat_div + corr)
    dtrK = np.stack([partial_deriv(g, trK, a) for a in range(n)])
    mom = divK - dtrK - ids.pi.values * dpsi

    vol_weight = phi ** (2.0 * n / (n - 2.0))   # dv~ = phi^{2n/(n-2)} dv
    ham_norm = float(np.sqrt(g.integrate(vol_weight * ham ** 2)))
    mom_sq = inv_conf * np.sum(mom ** 2, axis=0)
    mom_norm = float(np.sqrt(g.integrate(vol_weight * mom_sq)))
    return ham_norm, mom_norm
