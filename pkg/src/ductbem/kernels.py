"""Free-field Helmholtz Green's function and its normal derivatives.

All kernels take ``R = x - y`` implicitly through the point arguments and
use ``G(r) = exp(ikr) / (4 pi r)``.  The array variants broadcast over
leading dimensions and are what the quadrature loops call; the scalar
functions are thin wrappers for direct use and testing.
"""

from __future__ import annotations

import numpy as np

FOUR_PI = 4.0 * np.pi


class CoincidentPointsError(ValueError):
    """Raised when a kernel is evaluated at x == y."""


def _prepare(x, y):
    R = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.sqrt(np.sum(R * R, axis=-1))
    if np.any(r == 0.0):
        raise CoincidentPointsError("kernel evaluated at coincident points")
    return R, r


def green(k, x, y):
    """G(x, y) = exp(ik|x-y|) / (4 pi |x-y|)."""
    _, r = _prepare(x, y)
    return np.exp(1j * k * r) / (FOUR_PI * r)


def grad_green_ny(k, x, y, n_y):
    """Kernel H: derivative of G with respect to y along ``n_y``."""
    R, r = _prepare(x, y)
    g = np.exp(1j * k * r) / (FOUR_PI * r)
    dr = -np.sum(R * np.asarray(n_y, dtype=float), axis=-1) / r
    return g * (1j * k - 1.0 / r) * dr


def grad_green_nx(k, x, y, n_x):
    """Kernel H': derivative of G with respect to x along ``n_x``."""
    R, r = _prepare(x, y)
    g = np.exp(1j * k * r) / (FOUR_PI * r)
    dr = np.sum(R * np.asarray(n_x, dtype=float), axis=-1) / r
    return g * (1j * k - 1.0 / r) * dr


def hyper_kernel(k, x, y, n_x, n_y):
    """Kernel E: mixed second derivative of G along ``n_x`` and ``n_y``."""
    R, r = _prepare(x, y)
    n_x = np.asarray(n_x, dtype=float)
    n_y = np.asarray(n_y, dtype=float)
    return kernel_values(
        k, r,
        np.sum(R * n_x, axis=-1),
        np.sum(R * n_y, axis=-1),
        np.sum(n_x * n_y, axis=-1),
        ("E",),
    )["E"]


def kernel_values(k, r, rnx, rny, nxny, which):
    """Evaluate the requested kernels from precomputed geometry.

    ``r`` is |x - y|, ``rnx = (x - y).n_x``, ``rny = (x - y).n_y`` and
    ``nxny = n_x.n_y``.  ``which`` is any subset of ``{"G", "H", "Hp", "E"}``.
    Entries whose normals are not needed may be passed as ``None``.
    """
    ikr = 1j * k * r
    g = np.exp(ikr) / (FOUR_PI * r)
    out = {}
    if "G" in which:
        out["G"] = g
    if "H" in which or "Hp" in which:
        # G'(r) / r
        gp_r = g * (ikr - 1.0) / (r * r)
        if "H" in which:
            out["H"] = -gp_r * rny
        if "Hp" in which:
            out["Hp"] = gp_r * rnx
    if "E" in which:
        r2 = r * r
        term1 = -g * (ikr - 1.0) / r2 * nxny
        term2 = -g * (3.0 - 3.0 * ikr - (k * r) ** 2) / (r2 * r2) * rnx * rny
        out["E"] = term1 + term2
    return out
