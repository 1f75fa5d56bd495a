"""Monte Carlo checks of the isotropic resolvent law and singular-value floors.

Outside the unit disk, the bilinear resolvent form u* G(z) v of the
scaled block-cycle matrix concentrates at -(u* v)/z, the resolvent norm
stays bounded, and the least singular value of the shifted matrix stays
bounded away from zero.  A finite annulus grid stands in for the
continuous region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import NearSingularError, as_matrix, singular_values


@dataclass(frozen=True)
class AnnulusGrid:
    """Radial-by-angular shift grid avoiding the unit disk."""

    inner_radius: float = 1.5
    outer_radius: float = 6.0
    radial_points: int = 12
    angular_points: int = 16

    def __post_init__(self):
        if self.inner_radius <= 1.0:
            raise ValueError("grid must stay outside the unit disk")
        if self.outer_radius <= self.inner_radius:
            raise ValueError("outer radius must exceed inner radius")
        if self.radial_points < 1 or self.angular_points < 1:
            raise ValueError("need at least one node in each direction")

    def nodes(self) -> np.ndarray:
        radii = np.linspace(self.inner_radius, self.outer_radius, self.radial_points)
        angles = np.arange(self.angular_points) * 2 * np.pi / self.angular_points
        return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


def _shifted(y_scaled, z):
    return y_scaled - z * np.eye(y_scaled.shape[0], dtype=complex)


def bilinear_resolvent(y_scaled, u, v, z: complex) -> complex:
    """u* (Y - zI)^{-1} v via one linear solve; u, v must be unit vectors."""
    y_scaled = as_matrix(y_scaled)
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    for name, vec in (("u", u), ("v", v)):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            raise ValueError(f"{name} must be a unit vector")
    try:
        x = np.linalg.solve(_shifted(y_scaled, z), v)
    except np.linalg.LinAlgError as exc:
        raise NearSingularError(f"shift z={z} is singular") from exc
    return complex(u.conj() @ x)


def isotropic_deviation(y_scaled, u, v, grid: AnnulusGrid) -> float:
    """max over grid nodes of |u* G(z) v + (u* v)/z|."""
    y_scaled = as_matrix(y_scaled)
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    inner = complex(u.conj() @ v)
    worst = 0.0
    for z in grid.nodes():
        try:
            g_uv = bilinear_resolvent(y_scaled, u, v, z)
        except NearSingularError:
            raise NearSingularError(f"singular grid node z={z}")
        worst = max(worst, abs(g_uv + inner / z))
    return worst


def resolvent_norm_sup(y_scaled, grid: AnnulusGrid) -> float:
    """max over grid nodes of ||(Y - zI)^{-1}|| = 1/s_min(Y - zI)."""
    y_scaled = as_matrix(y_scaled)
    worst = 0.0
    for z in grid.nodes():
        smin = singular_values(_shifted(y_scaled, z))[-1]
        if smin <= 0:
            raise NearSingularError(f"singular grid node z={z}")
        worst = max(worst, 1.0 / smin)
    return worst


def least_singular_inf(y_scaled, grid: AnnulusGrid) -> float:
    """min over grid nodes of s_min(Y - zI)."""
    y_scaled = as_matrix(y_scaled)
    return min(float(singular_values(_shifted(y_scaled, z))[-1]) for z in grid.nodes())
