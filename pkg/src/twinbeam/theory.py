"""Twin-beam detection model and closed-form predictions.

The twin beam carries the same photon number ``n`` in both arms, with ``n``
drawn from the multimode thermal law. Each arm loses photons independently
(Bernoulli detection with efficiency ``eta1`` / ``eta2``), so

    P(m1, m2) = sum_n p(n) B(m1 | n, eta1) B(m2 | n, eta2).

Everything in this module labelled ``exact`` enumerates that sum; the
closed forms (:func:`conditional_fano_formula`, :func:`nrf_formula`) are
reference curves that can be compared against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from twinbeam.errors import ConditioningError, DomainError
from twinbeam.photon_stats import (
    DEFAULT_EPS,
    PhotonDist,
    _check_eps,
    binomial_kernel,
    binomial_thin,
    dist_stats,
    nb_dist,
    weighted_moments,
)

NRF_VARIANTS = ("difference", "product")


@dataclass(frozen=True)
class TwbParams:
    """Model point: ``N`` mean photons per arm, ``mu`` modes, arm efficiencies."""

    N: float
    mu: float
    eta1: float
    eta2: float

    def __post_init__(self):
        for name in ("N", "mu", "eta1", "eta2"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.N < 0:
            raise DomainError(f"N must be >= 0, got {self.N!r}")
        if self.mu <= 0:
            raise DomainError(f"mu must be > 0, got {self.mu!r}")
        for name in ("eta1", "eta2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {getattr(self, name)!r}")

    @classmethod
    def balanced(cls, N: float, mu: float, eta: float) -> "TwbParams":
        return cls(N, mu, eta, eta)

    @classmethod
    def from_detected_mean(cls, M: float, mu: float, eta1: float,
                           eta2: float | None = None) -> "TwbParams":
        """Build from the detected mean ``M = eta * N``.

        With unequal arms ``eta`` is the geometric mean of the two
        efficiencies (see :attr:`eta`).
        """
        eta2 = eta1 if eta2 is None else eta2
        eta = math.sqrt(eta1 * eta2)
        if eta == 0:
            if M != 0:
                raise DomainError("a nonzero detected mean needs a positive efficiency")
            return cls(0.0, mu, eta1, eta2)
        return cls(M / eta, mu, eta1, eta2)

    @property
    def M1(self) -> float:
        return self.eta1 * self.N

    @property
    def M2(self) -> float:
        return self.eta2 * self.N

    @property
    def eta(self) -> float:
        """Single efficiency used by the closed forms: ``sqrt(eta1 * eta2)``."""
        return math.sqrt(self.eta1 * self.eta2)

    @property
    def M(self) -> float:
        return self.eta * self.N


@dataclass(frozen=True, eq=False)
class JointDist:
    """Truncated joint pmf ``probs[m1, m2]`` of detected pairs."""

    probs: np.ndarray
    tail_bound: float

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2:
            raise DomainError("joint pmf must be 2-d")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def mass(self) -> float:
        return math.fsum(self.probs.sum(axis=1))

    def marginal(self, arm: int) -> PhotonDist:
        if arm not in (1, 2):
            raise DomainError(f"arm must be 1 or 2, got {arm!r}")
        probs = self.probs.sum(axis=1 if arm == 1 else 0)
        return PhotonDist(np.clip(probs, 0.0, 1.0), self.tail_bound)

    def moments(self):
        """Normalized ``(mean1, mean2, var1, var2, cov)`` of the detected pair."""
        m1 = np.arange(self.probs.shape[0], dtype=float)
        m2 = np.arange(self.probs.shape[1], dtype=float)
        _, mean1, var1 = weighted_moments(self.probs.sum(axis=1), m1)
        mass, mean2, var2 = weighted_moments(self.probs.sum(axis=0), m2)
        inner = self.probs @ (m2 - mean2)
        cov = math.fsum((m1 - mean1) * inner) / mass
        return mean1, mean2, var1, var2, cov

    def difference_variance(self) -> float:
        """Normalized variance of ``m1 - m2``."""
        k = self.probs.shape[0]
        m1 = np.arange(k, dtype=float)[:, None]
        m2 = np.arange(self.probs.shape[1], dtype=float)[None, :]
        d = m1 - m2
        mass = self.mass
        mean = math.fsum((self.probs * d).ravel()) / mass
        return math.fsum((self.probs * (d - mean) ** 2).ravel()) / mass


def _thermal(params: TwbParams, eps: float) -> PhotonDist:
    return nb_dist(params.N, params.mu, eps)


@lru_cache(maxsize=64)
def _joint_cached(params: TwbParams, eps: float) -> JointDist:
    photons = _thermal(params, eps)
    k1 = binomial_kernel(photons.n_max, params.eta1)
    k2 = binomial_kernel(photons.n_max, params.eta2)
    probs = (k1 * photons.probs[None, :]) @ k2.T
    np.clip(probs, 0.0, 1.0, out=probs)
    # detection conserves mass; undo kernel rounding drift
    probs *= photons.mass / math.fsum(probs.sum(axis=1))
    return JointDist(probs, photons.tail_bound)


def joint_detected_pmf(params: TwbParams, eps: float = DEFAULT_EPS) -> JointDist:
    """Exact joint pmf of detected counts ``(m1, m2)``.

    The photon number is enumerated up to
    :func:`~twinbeam.photon_stats.truncation_length`; both detected counts
    share that cutoff since ``m <= n``.
    """
    _check_eps(eps, upper=1e-6, closed=True)
    return _joint_cached(params, float(eps))


def conditional_signal_pmf(joint: JointDist, m2: int) -> PhotonDist:
    """Signal pmf ``P(m1 | m2)`` obtained by post-selecting the idler count."""
    if m2 < 0 or m2 != int(m2):
        raise DomainError(f"conditioning value must be a non-negative integer, got {m2!r}")
    m2 = int(m2)
    if m2 >= joint.probs.shape[1]:
        raise ConditioningError(
            f"m2={m2} lies beyond the truncated support (max {joint.probs.shape[1] - 1})")
    column = joint.probs[:, m2]
    herald = math.fsum(column)
    if herald <= 0:
        raise ConditioningError(f"m2={m2} has zero heralding probability at this truncation")
    probs = column / herald
    tail = min(1.0, joint.tail_bound / herald)
    return PhotonDist(np.clip(probs, 0.0, 1.0), tail)


def photon_posterior(params: TwbParams, m2: int, eps: float = DEFAULT_EPS) -> PhotonDist:
    """Photon-number pmf of the signal arm (before detection) given idler count ``m2``."""
    if m2 < 0:
        raise DomainError(f"m2 must be >= 0, got {m2!r}")
    photons = _thermal(params, eps)
    if m2 > photons.n_max:
        raise ConditioningError(f"m2={m2} lies beyond the truncated support")
    weights = photons.probs * binomial_kernel(photons.n_max, params.eta2)[m2, :]
    herald = math.fsum(weights)
    if herald <= 0:
        raise ConditioningError(f"m2={m2} has zero heralding probability at this truncation")
    return PhotonDist(np.clip(weights / herald, 0.0, 1.0),
                      min(1.0, photons.tail_bound / herald))


def heralding_probability(params: TwbParams, m2: int, eps: float = DEFAULT_EPS) -> float:
    """Probability that the idler registers exactly ``m2`` counts."""
    if m2 < 0:
        raise DomainError(f"m2 must be >= 0, got {m2!r}")
    idler = binomial_thin(_thermal(params, eps), params.eta2)
    return idler.pmf(int(m2))


def exact_conditional_fano(params: TwbParams, m2: int, eps: float = DEFAULT_EPS) -> float:
    """Fano factor of the detected signal counts given ``m2`` idler counts.

    Returns NaN when the conditional signal is the vacuum (zero mean).
    """
    herald = heralding_probability(params, m2, eps)
    if herald <= 10 * eps:
        raise ConditioningError(
            f"heralding probability {herald:.3g} for m2={m2} is below 10*eps")
    stats = dist_stats(conditional_signal_pmf(joint_detected_pmf(params, eps), m2))
    return math.nan if stats.fano is None else stats.fano


def exact_nrf(params: TwbParams, eps: float = DEFAULT_EPS) -> float:
    """Noise reduction factor ``var(m1 - m2) / <m1 + m2>`` of the exact model."""
    if params.N <= 0:
        raise DomainError("noise reduction factor needs N > 0")
    if params.eta1 == 0 and params.eta2 == 0:
        raise DomainError("noise reduction factor needs a positive efficiency")
    joint = joint_detected_pmf(params, eps)
    mean1, mean2, *_ = joint.moments()
    shot_noise = mean1 + mean2
    if shot_noise <= 0:
        raise DomainError("shot-noise level is zero")
    return joint.difference_variance() / shot_noise


def conditional_fano_formula(M: float, mu: float, eta: float, m2: int) -> float:
    """Closed-form conditional Fano factor of the multimode twin beam.

    F = (1-eta) M (m2+mu)(M+eta mu) / {(M+mu) [(m2+mu)(M+eta mu) - eta mu (M+mu) + 1]}

    ``M`` is the detected mean of the unconditioned beam. Kept literal; the
    exact enumeration (:func:`exact_conditional_fano`) is the reference.
    """
    if M < 0 or mu <= 0 or not 0.0 <= eta <= 1.0 or m2 < 0:
        raise DomainError(f"invalid arguments M={M!r}, mu={mu!r}, eta={eta!r}, m2={m2!r}")
    numerator = (1.0 - eta) * M * (m2 + mu) * (M + eta * mu)
    denominator = (M + mu) * ((m2 + mu) * (M + eta * mu) - eta * mu * (M + mu) + 1.0)
    if denominator == 0:
        raise DomainError(
            f"vanishing denominator at M={M!r}, mu={mu!r}, eta={eta!r}, m2={m2!r}")
    return numerator / denominator


def nrf_formula(mean1: float, mean2: float, eta: float, mu: float,
                variant: str = "difference") -> float:
    """Closed-form multimode noise reduction factor from detected means.

    ``R = 1 - 2 eta sqrt(m1 m2)/(m1 + m2) + X / (mu (m1 + m2))`` where the
    imbalance term ``X`` is ``(m1 - m2)**2`` for ``variant="difference"``
    (matches the exact model) or ``(m1 * m2)**2`` for ``variant="product"``.
    """
    if variant not in NRF_VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; expected one of {NRF_VARIANTS}")
    if mean1 < 0 or mean2 < 0 or mu <= 0 or not 0.0 <= eta <= 1.0:
        raise DomainError("invalid arguments to nrf_formula")
    total = mean1 + mean2
    if total == 0:
        raise DomainError("zero total mean: shot-noise level vanishes")
    extra = (mean1 - mean2) ** 2 if variant == "difference" else (mean1 * mean2) ** 2
    return 1.0 - 2.0 * eta * math.sqrt(mean1 * mean2) / total + extra / (mu * total)


def fano_detected_relation(fano_photons: float, eta: float) -> float:
    """Detected-count Fano factor ``eta F_n + (1 - eta)`` under Bernoulli loss."""
    if fano_photons < 0 or not 0.0 <= eta <= 1.0:
        raise DomainError(f"invalid arguments F_n={fano_photons!r}, eta={eta!r}")
    return eta * fano_photons + (1.0 - eta)
