"""Shared quadrature rules: n-sphere product rules, radial panels, cutoffs."""

from __future__ import annotations

import numpy as np
from math import gamma, pi
from scipy.special import roots_legendre, roots_gegenbauer

__all__ = [
    "sphere_area",
    "unit_sphere_rule",
    "gauss_panels",
    "smoothstep",
]


def sphere_area(d):
    """Area of the d-dimensional unit sphere embedded in R^{d+1}."""
    return 2.0 * pi ** ((d + 1) / 2.0) / gamma((d + 1) / 2.0)


def unit_sphere_rule(n, polar_order, azimuth_order):
    """Product quadrature on S^{n-1} in R^n.

    Polar angles use Gauss-Gegenbauer nodes in cos(theta_j), exact for the
    sin^p weights; the final angle is a uniform trapezoid (exact for
    trigonometric polynomials).  Returns (directions (M, n), weights (M,))
    with weights summing to the sphere area.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    phis = 2.0 * pi * np.arange(azimuth_order) / azimuth_order
    base = np.stack([np.cos(phis), np.sin(phis)], axis=-1)   # S^1 nodes
    dirs = base
    wts = np.full(azimuth_order, 2.0 * pi / azimuth_order)
    for p in range(1, n - 1):
        # add a polar angle with weight sin^p(theta): Gegenbauer alpha = p/2
        u, wu = roots_gegenbauer(polar_order, 0.5 * p)
        s = np.sqrt(np.maximum(1.0 - u ** 2, 0.0))
        new_dirs = np.concatenate([
            u[:, None, None] * np.ones((1, dirs.shape[0], 1)),
            s[:, None, None] * dirs[None, :, :],
        ], axis=-1).reshape(-1, p + 2)
        wts = (wu[:, None] * wts[None, :]).ravel()
        dirs = new_dirs
    # orientation: components were prepended; flip to conventional order
    return dirs[:, ::-1].copy(), wts


def gauss_panels(edges, order):
    """Composite Gauss-Legendre nodes/weights over consecutive panels."""
    xs, ws = roots_legendre(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * xs + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * ws)
    return np.concatenate(nodes), np.concatenate(weights)


def smoothstep(t):
    """C^3 polynomial step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)
