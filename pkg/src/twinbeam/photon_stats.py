"""Photon-counting distribution algebra.

Truncated probability mass functions over non-negative counts, the
multimode thermal (negative binomial) law, Bernoulli detection loss as
binomial thinning, and moment summaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import betainc

from twinbeam._saddle import binom_pmf
from twinbeam.errors import DomainError

DEFAULT_EPS = 1e-12

# slack for rounding in the normalization checks of PhotonDist
_MASS_SLACK = 1e-15


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PhotonDist:
    """A truncated pmf over counts ``0..len(probs)-1``.

    ``tail_bound`` bounds the probability mass that lies beyond the last
    stored count (or that was otherwise omitted by truncation upstream).
    """

    probs: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("probs must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(probs)) or probs.min() < 0.0 or probs.max() > 1.0:
            raise DomainError("every probability must lie in [0, 1]")
        tail = float(self.tail_bound)
        if not 0.0 <= tail <= 1.0:
            raise DomainError(f"tail_bound {tail!r} outside [0, 1]")
        total = math.fsum(probs)
        if total > 1.0 + _MASS_SLACK:
            raise DomainError(f"probabilities sum to {total!r} > 1")
        if total + tail < 1.0 - _MASS_SLACK:
            raise DomainError(
                f"mass {total!r} plus tail bound {tail!r} does not reach 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_bound", tail)

    def __len__(self) -> int:
        return self.probs.size

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def mass(self) -> float:
        return math.fsum(self.probs)

    def pmf(self, n: int) -> float:
        """Stored probability of count ``n`` (0 beyond the truncation)."""
        if n < 0 or n > self.n_max:
            return 0.0
        return float(self.probs[n])

    @classmethod
    def point_mass(cls, k: int = 0) -> "PhotonDist":
        probs = np.zeros(k + 1)
        probs[k] = 1.0
        return cls(probs, 0.0)


@dataclass(frozen=True)
class MomentSummary:
    """Mean, variance and Fano factor of a count distribution.

    ``fano`` is ``None`` when the mean is zero.
    """

    mean: float
    variance: float
    fano: Optional[float]

    @classmethod
    def from_moments(cls, mean: float, variance: float) -> "MomentSummary":
        if mean < 0:
            raise DomainError(f"negative mean {mean!r}")
        # rounding can leave a degenerate variance at -1e-17
        variance = max(variance, 0.0)
        fano = variance / mean if mean > 0 else None
        return cls(mean, variance, fano)


def _check_nb_args(N: float, mu: float) -> None:
    if not np.isfinite(N) or N < 0:
        raise DomainError(f"mean photon number must be >= 0, got {N!r}")
    if not np.isfinite(mu) or mu <= 0:
        raise DomainError(f"mode count must be > 0, got {mu!r}")


def _check_eps(eps: float, upper: float = 1.0, closed: bool = False) -> None:
    ok = eps > 0 and (eps <= upper if closed else eps < upper)
    if not ok:
        raise DomainError(f"truncation tolerance {eps!r} out of range")


def nb_pmf(n, N: float, mu: float):
    """Multimode thermal photon-number probability.

    ``p(n) = Gamma(n+mu) / (n! Gamma(mu)) (1+N/mu)^-mu (1+mu/N)^-n``, the
    negative binomial law of ``mu`` equally populated thermal modes with
    ``N`` mean photons in total. ``mu`` may be non-integer.

    Evaluated as a saddle-point binomial term so that the relative error
    stays near machine precision in the far tail. Accepts a scalar or an
    array of counts.
    """
    _check_nb_args(N, mu)
    counts = np.asarray(n)
    if np.any(counts < 0) or np.any(counts != np.floor(counts)):
        raise DomainError("counts must be non-negative integers")
    counts = counts.astype(float)
    if N == 0:
        out = (counts == 0).astype(float)
    else:
        # p(n) = mu/(n+mu) * Binomial(mu; n+mu, q) with q = mu/(N+mu)
        q = mu / (N + mu)
        q_c = N / (N + mu)
        out = mu / (counts + mu) * binom_pmf(mu, counts + mu, q, q_c)
    return float(out) if out.ndim == 0 else out


def nb_survival(n, N: float, mu: float):
    """``P(count > n)`` under the multimode thermal law."""
    _check_nb_args(N, mu)
    n = np.asarray(n, dtype=float)
    if N == 0:
        return np.zeros_like(n) if n.ndim else 0.0
    out = betainc(n + 1.0, mu, N / (N + mu))
    return out if out.ndim else float(out)


def truncation_length(N: float, mu: float, eps: float = DEFAULT_EPS) -> int:
    """Smallest ``n_max`` whose cumulative thermal mass reaches ``1 - eps``."""
    _check_nb_args(N, mu)
    _check_eps(eps)
    if N == 0:
        return 0
    sd = math.sqrt(N * (1.0 + N / mu))
    hi = int(math.ceil(N + 10.0 * sd)) + 16
    lo = 0
    while True:
        ks = np.arange(lo, hi + 1, dtype=float)
        below = np.flatnonzero(nb_survival(ks, N, mu) <= eps)
        if below.size:
            return int(lo + below[0])
        lo, hi = hi + 1, 2 * hi


def nb_dist(N: float, mu: float, eps: float = DEFAULT_EPS) -> PhotonDist:
    """Multimode thermal pmf truncated so the omitted tail is at most ``eps``."""
    _check_nb_args(N, mu)
    _check_eps(eps, upper=1e-6, closed=True)
    n_max = truncation_length(N, mu, eps)
    if n_max == 0:
        return PhotonDist.point_mass(0)
    probs = nb_pmf(np.arange(n_max + 1), N, mu)
    tail = nb_survival(n_max, N, mu)
    # pin the stored mass to 1 - tail exactly; shifts entries by ~1e-16 relative
    probs = probs * ((1.0 - tail) / math.fsum(probs))
    return PhotonDist(probs, tail)


def binomial_kernel(n_max: int, eta: float) -> np.ndarray:
    """Matrix ``K[m, n] = C(n, m) eta^m (1-eta)^(n-m)`` for ``0 <= m, n <= n_max``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"efficiency must lie in [0, 1], got {eta!r}")
    m = np.arange(n_max + 1, dtype=float)[:, None]
    n = np.arange(n_max + 1, dtype=float)[None, :]
    return binom_pmf(m, n, eta, 1.0 - eta)


def binomial_thin(dist: PhotonDist, eta: float) -> PhotonDist:
    """Detected-count pmf when each photon is registered with probability ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"efficiency must lie in [0, 1], got {eta!r}")
    if eta == 1.0:
        return dist
    if eta == 0.0:
        return PhotonDist(np.concatenate(([dist.mass], np.zeros(dist.n_max))),
                          dist.tail_bound)
    out = binomial_kernel(dist.n_max, eta) @ dist.probs
    mass_in = dist.mass
    mass_out = math.fsum(out)
    if mass_out > 0:
        # thinning conserves mass; undo kernel rounding drift
        out = out * (mass_in / mass_out)
    return PhotonDist(out, dist.tail_bound)


def weighted_moments(probs: np.ndarray, values: Optional[np.ndarray] = None):
    """Normalized mean and variance of ``values`` under weights ``probs``.

    Returns ``(mass, mean, variance)`` with compensated summation.
    """
    probs = np.asarray(probs, dtype=float)
    if values is None:
        values = np.arange(probs.size, dtype=float)
    mass = math.fsum(probs)
    if mass <= 0:
        raise DomainError("distribution has no mass")
    mean = math.fsum(probs * values) / mass
    var = math.fsum(probs * (values - mean) ** 2) / mass
    return mass, mean, var


def dist_stats(dist: PhotonDist) -> MomentSummary:
    """Mean, variance and Fano factor of the stored (renormalized) pmf."""
    _, mean, var = weighted_moments(dist.probs)
    return MomentSummary.from_moments(mean, var)
