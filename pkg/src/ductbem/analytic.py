"""One-dimensional duct references and error measures.

In one dimension the potential is a pair of plane waves,
phi(x) = A exp(ikx) + B exp(-ikx), with particle velocity v = dphi/dx and
pressure p = -i omega rho phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .assembly import WaveContext


@dataclass(frozen=True)
class PlaneWavePair:
    A: complex
    B: complex
    k: float

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return self.A * np.exp(1j * self.k * x) + self.B * np.exp(-1j * self.k * x)

    def velocity(self, x):
        x = np.asarray(x, dtype=float)
        return 1j * self.k * (self.A * np.exp(1j * self.k * x) - self.B * np.exp(-1j * self.k * x))

    def pressure(self, x, ctx: WaveContext):
        return ctx.pressure(self.phi(x))

    def impedance(self, x, ctx: WaveContext):
        return self.pressure(x, ctx) / self.velocity(x)


def duct_1d_solution(ctx: WaveContext, L: float, v0: complex, Z_L: complex) -> PlaneWavePair:
    """Plane waves with v(0) = v0 and p(L) / v(L) = Z_L."""
    k = ctx.k
    e, ei = np.exp(1j * k * L), np.exp(-1j * k * L)
    # v(0) = ik (A - B);  -i omega rho (A e + B ei) = Z_L ik (A e - B ei)
    M = np.array([
        [1j * k, -1j * k],
        [(-1j * ctx.omega * ctx.rho - Z_L * 1j * k) * e, (-1j * ctx.omega * ctx.rho + Z_L * 1j * k) * ei],
    ])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) <= 1e-300 or abs(det) < 1e-14 * np.abs(M).max() ** 2:
        raise ZeroDivisionError("end impedance makes the plane-wave system singular")
    A = v0 * M[1, 1] / det
    B = -v0 * M[1, 0] / det
    return PlaneWavePair(complex(A), complex(B), k)


def perturbed_impedance_solution(ctx: WaveContext, L: float, v0: complex, eps_z: float) -> PlaneWavePair:
    """Reference with a mismatched end impedance (1 + eps_z) rho c."""
    return duct_1d_solution(ctx, L, v0, (1.0 + eps_z) * ctx.rho_c)


def unflanged_radiation_impedance(k, a):
    """Low-frequency approximation 0.25 (ka)^2 + 0.6 i ka, scaled by rho c."""
    ka = np.asarray(k, dtype=float) * a
    z = 0.25 * ka ** 2 + 0.6j * ka
    return complex(z) if np.ndim(z) == 0 else z


@dataclass
class ErrorSeries:
    relative: np.ndarray        # |phi - phi_a| / |phi_a|
    magnitude: np.ndarray       # |phi_a| - |phi|
    angle: np.ndarray           # arg phi_a - arg phi, wrapped to (-pi, pi]


def relative_error(phi, phi_a) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    phi_a = np.asarray(phi_a, dtype=complex)
    mag = np.abs(phi_a)
    if np.any(mag == 0):
        raise ZeroDivisionError("analytic reference vanishes")
    return np.abs(phi - phi_a) / mag


def error_series(phi, phi_a) -> ErrorSeries:
    phi = np.asarray(phi, dtype=complex)
    phi_a = np.asarray(phi_a, dtype=complex)
    return ErrorSeries(
        relative=relative_error(phi, phi_a),
        magnitude=np.abs(phi_a) - np.abs(phi),
        angle=np.angle(phi_a * np.conj(phi)),
    )


def best_fit_eps_z(x, phi_num, ctx: WaveContext, L: float, v0: complex, bound: float = 0.5) -> float:
    """End-impedance perturbation whose |phi| ripple best matches ``phi_num`` (least squares)."""
    x = np.asarray(x, dtype=float)
    target = np.abs(np.asarray(phi_num))

    def misfit(eps):
        ref = np.abs(perturbed_impedance_solution(ctx, L, v0, eps).phi(x))
        return float(np.sum((ref - target) ** 2))

    res = minimize_scalar(misfit, bounds=(-bound, bound), method="bounded",
                          options={"xatol": 1e-6})
    return float(res.x)
