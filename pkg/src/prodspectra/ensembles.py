"""Atom variables, truncation, and seeded iid matrix sampling.

An atom variable is the scalar distribution filling an iid matrix: mean
zero, finite fourth moment, independent real and imaginary parts.  Exact
mixed moments are available in closed form, which the path-graph moment
oracle relies on.

Sampling uses the counter-based Philox generator, keyed by (seed,
stream) so per-trial streams can be split deterministically: stream s of
seed q is Philox(key=(q, s)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

MAX_MOMENT_ORDER = 8

#: truncation level used when an experiment asks for "truncated" with no level
DEFAULT_TRUNCATION_LEVEL = 10.0


@dataclass(frozen=True)
class AtomVariable:
    """Distribution of a single matrix entry.

    ``re_support``/``re_probs`` describe the real part as a finite discrete
    distribution; ``im_support``/``im_probs`` the imaginary part.  A Gaussian
    part is flagged instead of enumerated (``re_gaussian_var`` > 0 means the
    real part is centered normal with that variance).  Mean zero is enforced
    at construction.
    """

    kind: str
    re_support: tuple = ()
    re_probs: tuple = ()
    im_support: tuple = ()
    im_probs: tuple = ()
    re_gaussian_var: float = 0.0
    im_gaussian_var: float = 0.0

    def __post_init__(self):
        for sup, pr, gvar, label in (
            (self.re_support, self.re_probs, self.re_gaussian_var, "real"),
            (self.im_support, self.im_probs, self.im_gaussian_var, "imaginary"),
        ):
            if gvar < 0:
                raise ValueError(f"negative {label} Gaussian variance")
            if gvar > 0 and sup:
                raise ValueError(f"{label} part is both Gaussian and discrete")
            if sup:
                if len(sup) != len(pr):
                    raise ValueError("support/probs length mismatch")
                if abs(sum(pr) - 1.0) > 1e-12:
                    raise ValueError("probabilities must sum to 1")
                mean = sum(x * p for x, p in zip(sup, pr))
                if abs(mean) > 1e-12:
                    raise ValueError(f"{label} part has nonzero mean {mean}")

    # -- exact real-part / imaginary-part moments ---------------------------

    def _part_moment(self, support, probs, gvar, j: int) -> float:
        if j == 0:
            return 1.0
        if gvar > 0:
            if j % 2 == 1:
                return 0.0
            # E[N(0,v)^{2p}] = v^p (2p-1)!!
            p = j // 2
            return gvar**p * math.prod(range(1, 2 * p, 2))
        if not support:
            return 0.0
        return sum(x**j * p for x, p in zip(support, probs))

    def re_moment(self, j: int) -> float:
        return self._part_moment(self.re_support, self.re_probs, self.re_gaussian_var, j)

    def im_moment(self, j: int) -> float:
        return self._part_moment(self.im_support, self.im_probs, self.im_gaussian_var, j)

    @property
    def variance(self) -> float:
        return self.re_moment(2) + self.im_moment(2)

    @property
    def fourth_moment(self) -> float:
        """E|xi|^4 = E[(Re^2 + Im^2)^2]."""
        return (
            self.re_moment(4)
            + 2.0 * self.re_moment(2) * self.im_moment(2)
            + self.im_moment(4)
        )

    @property
    def is_real(self) -> bool:
        return self.im_gaussian_var == 0.0 and not self.im_support

    def truncation_floor(self) -> float:
        """The level below which the truncation lemma gives no guarantee.

        Taken as sqrt(8 E|xi|^4); smaller levels are allowed but come with
        no variance lower bound.
        """
        return math.sqrt(8.0 * self.fourth_moment)

    # -- sampling -----------------------------------------------------------

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        re = self._sample_part(rng, shape, self.re_support, self.re_probs, self.re_gaussian_var)
        if self.is_real:
            return re.astype(complex)
        im = self._sample_part(rng, shape, self.im_support, self.im_probs, self.im_gaussian_var)
        return re + 1j * im

    @staticmethod
    def _sample_part(rng, shape, support, probs, gvar):
        if gvar > 0:
            return rng.normal(0.0, math.sqrt(gvar), size=shape)
        if not support:
            return np.zeros(shape)
        return rng.choice(np.asarray(support, dtype=float), size=shape, p=probs)


def rademacher() -> AtomVariable:
    return AtomVariable("Rademacher", re_support=(1.0, -1.0), re_probs=(0.5, 0.5))


def scaled_rademacher(sigma: float) -> AtomVariable:
    return AtomVariable(
        f"ScaledRademacher({sigma})",
        re_support=(sigma, -sigma),
        re_probs=(0.5, 0.5),
    )


def real_gaussian(variance: float = 1.0) -> AtomVariable:
    return AtomVariable("RealGaussian", re_gaussian_var=variance)


def complex_gaussian(variance: float = 1.0) -> AtomVariable:
    return AtomVariable(
        "ComplexGaussian",
        re_gaussian_var=variance / 2.0,
        im_gaussian_var=variance / 2.0,
    )


def discrete_symmetric(support, probs) -> AtomVariable:
    """Real discrete atom with mean zero (symmetry not required)."""
    return AtomVariable(
        "DiscreteSymmetric",
        re_support=tuple(float(x) for x in support),
        re_probs=tuple(float(p) for p in probs),
    )


ATOM_FACTORIES = {
    "Rademacher": rademacher,
    "RealGaussian": real_gaussian,
    "ComplexGaussian": complex_gaussian,
    "ScaledRademacher": scaled_rademacher,
    "DiscreteSymmetric": discrete_symmetric,
}


def moment(atom: AtomVariable, p: int, conjugates: int = 0) -> complex:
    """Exact mixed moment E[xi^p conj(xi)^c].

    Expands (x + iy)^p (x - iy)^c using independence of the real and
    imaginary parts; each part's moments are known in closed form.
    """
    if p < 0 or conjugates < 0:
        raise ValueError("moment orders must be nonnegative")
    if p + conjugates > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order {p + conjugates} exceeds {MAX_MOMENT_ORDER}")
    if atom.is_real:
        return complex(atom.re_moment(p + conjugates))
    total = 0j
    for j in range(p + 1):
        for l in range(conjugates + 1):
            coeff = (
                math.comb(p, j)
                * math.comb(conjugates, l)
                * (1j) ** (p - j)
                * (-1j) ** (conjugates - l)
            )
            total += coeff * atom.re_moment(j + l) * atom.im_moment((p - j) + (conjugates - l))
    return total


# -- truncation -------------------------------------------------------------


@dataclass(frozen=True)
class TruncatedAtom:
    """An atom with both parts center-truncated at L/sqrt(2) and rescaled.

    Following the standard truncation construction: each part is clipped
    to zero outside [-L/sqrt(2), L/sqrt(2)], recentered by its truncated
    mean, and the whole variable rescaled by 1/sqrt(var_tilde) so the
    result has mean zero and unit variance (for unit-variance bases).
    Samples are bounded by 4L in modulus.
    """

    base: AtomVariable
    level: float
    var_tilde: float = field(init=False, default=0.0)
    re_trunc_mean: float = field(init=False, default=0.0)
    im_trunc_mean: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.level <= 0:
            raise ValueError("truncation level must be positive")
        cut = self.level / math.sqrt(2.0)
        re_mean, re_var = _truncated_part_stats(self.base, "re", cut)
        im_mean, im_var = _truncated_part_stats(self.base, "im", cut)
        var_tilde = re_var + im_var
        if var_tilde < 1e-12:
            raise ValueError(f"degenerate truncation: var_tilde={var_tilde:.3e}")
        object.__setattr__(self, "re_trunc_mean", re_mean)
        object.__setattr__(self, "im_trunc_mean", im_mean)
        object.__setattr__(self, "var_tilde", var_tilde)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        raw = self.base.sample(rng, shape)
        cut = self.level / math.sqrt(2.0)
        re = np.where(np.abs(raw.real) <= cut, raw.real, 0.0) - self.re_trunc_mean
        im = np.where(np.abs(raw.imag) <= cut, raw.imag, 0.0) - self.im_trunc_mean
        return (re + 1j * im) / math.sqrt(self.var_tilde)


def _truncated_part_stats(atom: AtomVariable, part: str, cut: float):
    """Mean and variance of one part after clipping to [-cut, cut].

    Exact for discrete parts; adaptive quadrature for Gaussian parts.
    """
    if part == "re":
        support, probs, gvar = atom.re_support, atom.re_probs, atom.re_gaussian_var
    else:
        support, probs, gvar = atom.im_support, atom.im_probs, atom.im_gaussian_var
    if gvar > 0:
        sd = math.sqrt(gvar)
        density = lambda x: math.exp(-x * x / (2 * gvar)) / (sd * math.sqrt(2 * math.pi))
        mean = quad(lambda x: x * density(x), -cut, cut, epsabs=1e-10)[0]
        second = quad(lambda x: x * x * density(x), -cut, cut, epsabs=1e-10)[0]
        return mean, second - mean * mean
    if not support:
        return 0.0, 0.0
    clipped = [(x if abs(x) <= cut else 0.0, p) for x, p in zip(support, probs)]
    mean = sum(x * p for x, p in clipped)
    second = sum(x * x * p for x, p in clipped)
    return mean, second - mean * mean


def truncate(atom: AtomVariable, level: float) -> TruncatedAtom:
    """Truncate an atom at the given level; see TruncatedAtom."""
    return TruncatedAtom(atom, level)


# -- seeded sampling --------------------------------------------------------


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for (seed, stream); streams are independent."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), stream]))


def sample_iid_matrix(atom, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """An n x n matrix of iid copies of the atom; row-major entry order.

    Deterministic in (atom, n, seed, stream); accepts plain or truncated
    atoms.
    """
    if n < 1:
        raise ValueError("matrix size must be at least 1")
    rng = stream_rng(seed, stream)
    return atom.sample(rng, (n, n))
