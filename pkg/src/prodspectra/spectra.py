"""Empirical spectral statistics against the limiting radial law.

The limiting density of a product of m unit-variance iid matrices is
supported on the disk of radius sigma with radial CDF (r/sigma)^{2/m},
so goodness of fit reduces to a one-dimensional KS statistic on the
eigenvalue moduli.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Eigenvalues of one realized product, with its ensemble parameters."""

    eigenvalues: np.ndarray
    n: int
    m: int
    sigma: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.sigma <= 0:
            raise ValueError("need n >= 1, m >= 1, sigma > 0")
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=complex))


def spectral_radius(s: EmpiricalSpectrum) -> float:
    if len(s.eigenvalues) == 0:
        raise ValueError("empty spectrum")
    return float(np.max(np.abs(s.eigenvalues)))


def limit_radial_cdf(r, sigma: float, m: int):
    """Mass of the limiting law inside radius r: min(1, (r/sigma)^{2/m})."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    out = np.minimum(1.0, (np.minimum(r, sigma) / sigma) ** (2.0 / m))
    return out if out.ndim else float(out)


def sample_radial_law(count: int, sigma: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling of the limiting radial law (moduli only)."""
    u = rng.uniform(size=count)
    return sigma * u ** (m / 2.0)


def radial_ks(s: EmpiricalSpectrum) -> float:
    """KS distance between the empirical modulus CDF and the limit law.

    Evaluated at the jump points of the empirical CDF, which is exact for
    a step function against a continuous CDF.
    """
    radii = np.sort(np.abs(s.eigenvalues))
    count = len(radii)
    if count == 0:
        raise ValueError("empty spectrum")
    limit = limit_radial_cdf(radii, s.sigma, s.m)
    upper = np.arange(1, count + 1) / count - limit
    lower = limit - np.arange(0, count) / count
    return float(max(upper.max(), lower.max()))
