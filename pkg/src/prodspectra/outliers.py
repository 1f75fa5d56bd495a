"""Perturbation scenarios: prediction, detection, and matching of outliers.

Eight regimes are supported, covering products of independent iid
matrices and powers of a single repeated matrix under additive,
multiplicative, factor-wise, and nonzero-mean perturbations.  In every
regime the deterministic data alone predicts the outliers; detection
thresholds sit at sigma + 2 epsilon (sigma^m + 2 epsilon for repeated
regimes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import ensembles
from .linalg import as_matrix, determinant, eigenvalues, operator_norm, resolvent, sort_eigenvalues
from .spectra import EmpiricalSpectrum

INDEPENDENT_REGIMES = (
    "PureProduct",
    "Multiplicative",
    "AdditiveToProduct",
    "NonzeroMean",
    "PerturbedFactors",
)
REPEATED_REGIMES = ("RepeatedMultiplicative", "RepeatedAdditive", "RepeatedFactors")
NO_OUTLIER_REGIMES = ("PureProduct", "Multiplicative", "RepeatedMultiplicative")

#: finite-size matching tolerance at n = 500; scales as (500/n)^{1/4}
BASE_MATCH_TOLERANCE = 0.25


class ForbiddenBandError(ValueError):
    """A deterministic eigenvalue landed inside the excluded band."""


@dataclass(frozen=True)
class PerturbationScenario:
    """One product/perturbation regime with sizes and deterministic data.

    ``perturbations`` holds whatever the regime requires: the single
    additive matrix, the factor-wise A_k list, or the multiplicative
    (I + A_j) parts.  ``zero_noise`` replaces every random factor by its
    deterministic limit (test hook; never used by production runs).
    """

    regime: str
    m: int
    n: int
    atoms: tuple = ()
    perturbations: tuple = ()
    interleaving: tuple = ()
    epsilon: float = 0.1
    mu: complex = 0.0
    gamma: float = 0.0
    rank_cap: int = 10
    norm_cap: float = 10.0
    zero_noise: bool = False

    def __post_init__(self):
        if self.regime not in INDEPENDENT_REGIMES + REPEATED_REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.m < 1 or self.n < 1 or self.epsilon <= 0:
            raise ValueError("need m >= 1, n >= 1, epsilon > 0")
        atoms = tuple(self.atoms) if self.atoms else (ensembles.rademacher(),)
        needed = 1 if self.regime in REPEATED_REGIMES else self.m
        if len(atoms) == 1 and needed > 1:
            atoms = atoms * needed
        if len(atoms) != needed:
            raise ValueError(f"regime {self.regime} needs {needed} atoms")
        object.__setattr__(self, "atoms", atoms)
        perts = tuple(as_matrix(p) for p in self.perturbations)
        for p in perts:
            if p.shape != (self.n, self.n):
                raise ValueError("perturbations must be n x n")
            if np.linalg.matrix_rank(p, tol=1e-10) > self.rank_cap:
                raise ValueError("perturbation rank exceeds the declared cap")
            if operator_norm(p) > self.norm_cap:
                raise ValueError("perturbation norm exceeds the declared cap")
        object.__setattr__(self, "perturbations", perts)
        if self.regime == "NonzeroMean":
            if self.mu == 0 or self.gamma <= 0:
                raise ValueError("NonzeroMean needs mu != 0 and gamma > 0")

    @property
    def sigma(self) -> float:
        """sigma_1 ... sigma_m (sigma^m for repeated regimes)."""
        if self.regime in REPEATED_REGIMES:
            return math.sqrt(self.atoms[0].variance) ** self.m
        return math.prod(math.sqrt(a.variance) for a in self.atoms)

    @property
    def detection_threshold(self) -> float:
        return self.sigma + 2.0 * self.epsilon

    def match_tolerance(self) -> float:
        return BASE_MATCH_TOLERANCE * (500.0 / self.n) ** 0.25


@dataclass(frozen=True)
class OutlierReport:
    predicted: tuple
    observed: tuple
    pairs: tuple  # (predicted_idx, observed_idx, distance)
    unmatched_predicted: tuple
    unmatched_observed: tuple
    threshold: float

    @property
    def max_distance(self) -> float:
        return max((d for _, _, d in self.pairs), default=0.0)


def _factor_matrices(sc: PerturbationScenario, seed: int, trial: int = 0):
    """The random factors X_k, honoring the zero-noise hook."""
    if sc.zero_noise:
        zero = np.zeros((sc.n, sc.n), dtype=complex)
        count = 1 if sc.regime in REPEATED_REGIMES else sc.m
        return [zero] * count
    if sc.regime in REPEATED_REGIMES:
        return [ensembles.sample_iid_matrix(sc.atoms[0], sc.n, seed, stream=trial)]
    # stream id packs (trial, factor) so factors stay independent per trial
    return [
        ensembles.sample_iid_matrix(sc.atoms[k], sc.n, seed, stream=trial * sc.m + k)
        for k in range(sc.m)
    ]


def realize(sc: PerturbationScenario, seed: int, trial: int = 0) -> np.ndarray:
    """The realized n x n matrix for this scenario, deterministic in seed."""
    n, m = sc.n, sc.m
    factors = _factor_matrices(sc, seed, trial)
    scale = 1.0 / math.sqrt(n)

    if sc.regime == "PureProduct":
        out = np.eye(n, dtype=complex)
        for x in factors:
            out = out @ (scale * x)
        return out
    if sc.regime == "RepeatedMultiplicative" or sc.regime == "Multiplicative":
        return _interleaved_product(sc, factors, scale)
    if sc.regime in ("AdditiveToProduct", "RepeatedAdditive"):
        xs = factors if sc.regime == "AdditiveToProduct" else factors * m
        out = np.eye(n, dtype=complex)
        for x in xs:
            out = out @ (scale * x)
        return out + sc.perturbations[0]
    if sc.regime == "NonzeroMean":
        out = np.eye(n, dtype=complex)
        for x in factors:
            out = out @ (scale * x)
        spike = sc.mu * n**sc.gamma / n * np.ones((n, n), dtype=complex)
        return out + spike
    if sc.regime in ("PerturbedFactors", "RepeatedFactors"):
        xs = factors if sc.regime == "PerturbedFactors" else factors * m
        out = np.eye(n, dtype=complex)
        for x, a in zip(xs, sc.perturbations):
            out = out @ (scale * x + a)
        return out
    raise AssertionError(sc.regime)


def _interleaved_product(sc: PerturbationScenario, factors, scale):
    """Multiplicative regimes: interleave X/sqrt(n) with (I + A_j) terms.

    ``interleaving`` lists tokens "X<index>" and "A<index>" in product
    order; when empty, the normalized alternating order is used.
    """
    n = sc.n
    xs = factors if sc.regime == "Multiplicative" else factors * sc.m
    tokens = sc.interleaving
    if not tokens:
        tokens = []
        for k in range(max(len(xs), len(sc.perturbations))):
            if k < len(xs):
                tokens.append(f"X{k}")
            if k < len(sc.perturbations):
                tokens.append(f"A{k}")
    out = np.eye(n, dtype=complex)
    for tok in tokens:
        idx = int(tok[1:])
        if tok[0] == "X":
            out = out @ (scale * xs[idx])
        else:
            out = out @ (np.eye(n, dtype=complex) + sc.perturbations[idx])
    return out


def deterministic_comparison(sc: PerturbationScenario) -> np.ndarray | None:
    """The deterministic object whose eigenvalues predict the outliers."""
    if sc.regime in NO_OUTLIER_REGIMES:
        return None
    if sc.regime in ("AdditiveToProduct", "RepeatedAdditive"):
        return sc.perturbations[0]
    if sc.regime in ("PerturbedFactors", "RepeatedFactors"):
        out = np.eye(sc.n, dtype=complex)
        for a in sc.perturbations:
            out = out @ a
        return out
    if sc.regime == "NonzeroMean":
        return None  # handled analytically: single spike at mu n^gamma
    raise AssertionError(sc.regime)


def predict_outliers(sc: PerturbationScenario) -> np.ndarray:
    """Deterministic outlier predictions outside |z| >= sigma + 3 epsilon.

    Raises if any deterministic eigenvalue falls inside the forbidden
    band (sigma + epsilon, sigma + 3 epsilon), where the theory is
    silent.
    """
    if sc.regime == "NonzeroMean":
        return np.asarray([sc.mu * sc.n**sc.gamma], dtype=complex)
    comparison = deterministic_comparison(sc)
    if comparison is None:
        return np.asarray([], dtype=complex)
    if sc.regime in ("PerturbedFactors",) and any(
        not np.any(p) for p in sc.perturbations
    ):
        return np.asarray([], dtype=complex)
    lam = eigenvalues(comparison).eigenvalues
    lo, hi = sc.sigma + sc.epsilon, sc.sigma + 3.0 * sc.epsilon
    in_band = (np.abs(lam) > lo) & (np.abs(lam) < hi)
    if np.any(in_band):
        raise ForbiddenBandError(
            f"deterministic eigenvalues {lam[in_band]} lie in the band ({lo}, {hi})"
        )
    return sort_eigenvalues(lam[np.abs(lam) >= hi])


def detect_outliers(s: EmpiricalSpectrum, threshold: float) -> np.ndarray:
    """Observed eigenvalues with modulus >= threshold, canonically ordered."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    lam = np.asarray(s.eigenvalues, dtype=complex)
    return sort_eigenvalues(lam[np.abs(lam) >= threshold])


def match_outliers(predicted, observed, threshold: float = 0.0) -> OutlierReport:
    """Minimum-cost bipartite matching between predictions and detections."""
    predicted = np.asarray(predicted, dtype=complex)
    observed = np.asarray(observed, dtype=complex)
    if len(predicted) == 0 or len(observed) == 0:
        return OutlierReport(
            predicted=tuple(predicted),
            observed=tuple(observed),
            pairs=(),
            unmatched_predicted=tuple(range(len(predicted))),
            unmatched_observed=tuple(range(len(observed))),
            threshold=threshold,
        )
    cost = np.abs(predicted[:, None] - observed[None, :])
    rows, cols = linear_sum_assignment(cost)
    pairs = tuple((int(r), int(c), float(cost[r, c])) for r, c in zip(rows, cols))
    return OutlierReport(
        predicted=tuple(predicted),
        observed=tuple(observed),
        pairs=pairs,
        unmatched_predicted=tuple(i for i in range(len(predicted)) if i not in set(rows)),
        unmatched_observed=tuple(j for j in range(len(observed)) if j not in set(cols)),
        threshold=threshold,
    )


def criterion_function(y_scaled, b, c, z: complex) -> complex:
    """det(I_k + C (Y - zI)^{-1} B): zero exactly at eigenvalues of Y + BC."""
    b = np.asarray(b, dtype=complex)
    c = np.asarray(c, dtype=complex)
    if b.size == 0 or c.size == 0:
        return 1.0 + 0j
    g = resolvent(y_scaled, z)
    k = c.shape[0]
    return determinant(np.eye(k, dtype=complex) + c @ g @ b)


def run_scenario(sc: PerturbationScenario, seed: int, trials: int = 1):
    """Realize, detect, and match per trial; deterministic per (seed, trial)."""
    if trials < 1:
        raise ValueError("need at least one trial")
    predicted = predict_outliers(sc)
    reports, spectra = [], []
    for trial in range(trials):
        p = realize(sc, seed, trial)
        spec = EmpiricalSpectrum(
            eigenvalues(p).eigenvalues, n=sc.n, m=sc.m, sigma=sc.sigma
        )
        observed = detect_outliers(spec, sc.detection_threshold)
        reports.append(match_outliers(predicted, observed, sc.detection_threshold))
        spectra.append(spec)
    return reports, spectra
