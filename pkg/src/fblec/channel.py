"""Rayleigh block-fading power gains and their order statistics.

A gain gamma = rho |h|^2 with unit-variance Rayleigh |h| is exponential with
mean rho.  Users are ranked by gain; index 1 is the strongest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .specfun import beta_fn

DEFAULT_ALPHA1 = 0.3
DEFAULT_ALPHA2 = 0.7
DEFAULT_BLOCKLENGTH = 400
DEFAULT_EPSILON = 1e-6


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class LinkConfig:
    """Physical-link parameters.  ``rho`` is the linear transmit SNR.

    ``epsilon == 1`` is accepted as the degenerate every-block-lost case so
    that the effective capacity can report its trivial zero; rate functions
    reject it because Q^{-1}(1) is unbounded.
    """

    rho: float
    alpha1: float = DEFAULT_ALPHA1
    alpha2: float = DEFAULT_ALPHA2
    blocklength_n: int = DEFAULT_BLOCKLENGTH
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ConfigError(f"rho must be positive, got {self.rho}")
        if int(self.blocklength_n) != self.blocklength_n or self.blocklength_n < 1:
            raise ConfigError(f"blocklength must be a positive integer, got {self.blocklength_n}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0.0 < self.alpha1 <= self.alpha2:
            raise ConfigError(f"need 0 < alpha1 <= alpha2, got ({self.alpha1}, {self.alpha2})")
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise ConfigError(f"alpha1 + alpha2 must equal 1, got {self.alpha1 + self.alpha2}")

    @classmethod
    def from_db(cls, rho_db: float, **kwargs) -> "LinkConfig":
        return cls(rho=db_to_linear(rho_db), **kwargs)

    @property
    def rho_db(self) -> float:
        return linear_to_db(self.rho)


@dataclass(frozen=True)
class ChannelSample:
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if not self.gamma1 >= self.gamma2 >= 0:
            raise DomainError(f"need gamma1 >= gamma2 >= 0, got ({self.gamma1}, {self.gamma2})")


@dataclass(frozen=True)
class OrderStatSpec:
    """Rank ``index_i`` (1 = strongest) among ``num_users`` i.i.d. gains."""

    index_i: int
    num_users: int = 2

    def __post_init__(self):
        if not 1 <= self.index_i <= self.num_users:
            raise DomainError(f"order index {self.index_i} outside 1..{self.num_users}")

    @property
    def xi(self) -> float:
        return 1.0 / beta_fn(self.index_i, self.num_users - self.index_i + 1)

    def exp_mixture(self):
        """Density as a finite sum  sum_j w_j (1/rho) exp(-c_j gamma / rho).

        Expands (1 - e^{-x})^{K-i} binomially; returns ``(weights, rates)``.
        """
        k, i = self.num_users, self.index_i
        xi = k * math.comb(k - 1, i - 1)  # exact integer form of 1/B(i, K-i+1)
        m = k - i
        weights = [float(xi * math.comb(m, j) * (-1) ** j) for j in range(m + 1)]
        rates = [float(i + j) for j in range(m + 1)]
        return weights, rates


STRONG = OrderStatSpec(1)
WEAK = OrderStatSpec(2)


def unordered_gain_pdf(gamma, rho: float):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise DomainError("gain must be nonnegative")
    out = np.exp(-gamma / rho) / rho
    return out if out.ndim else float(out)


def unordered_gain_cdf(gamma, rho: float):
    out = -np.expm1(-np.asarray(gamma, dtype=float) / rho)
    return out if out.ndim else float(out)


def ordered_gain_pdf(spec: OrderStatSpec, gamma, rho: float):
    """Density of the ``spec.index_i``-th largest of ``spec.num_users`` gains.

    For two users this is 2 f F (strong) and 2 f (1 - F) (weak).
    """
    if not isinstance(spec, OrderStatSpec):
        raise DomainError(f"expected an OrderStatSpec, got {spec!r}")
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise DomainError("gain must be nonnegative")
    f = np.exp(-gamma / rho) / rho
    cdf = -np.expm1(-gamma / rho)
    k, i = spec.num_users, spec.index_i
    out = spec.xi * f * cdf ** (k - i) * (1.0 - cdf) ** (i - 1)
    return out if out.ndim else float(out)


def ordered_gain_cdf(spec: OrderStatSpec, gamma, rho: float):
    """CDF of the ``index_i``-th largest gain, via the binomial sum over exceedances."""
    gamma = np.asarray(gamma, dtype=float)
    cdf = -np.expm1(-gamma / rho)
    k, i = spec.num_users, spec.index_i
    # X_(i) <= g  iff fewer than i gains exceed g
    out = sum(math.comb(k, j) * (1.0 - cdf) ** j * cdf ** (k - j) for j in range(i))
    return out if np.ndim(out) else float(out)


def make_rng(master_seed: int, task_index: int = 0) -> np.random.Generator:
    """Counter-based stream keyed on (master_seed, task_index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), int(task_index)])))


def sample_ordered_gains(rng: np.random.Generator, rho: float) -> ChannelSample:
    g = rng.exponential(rho, size=2)
    return ChannelSample(float(max(g)), float(min(g)))


def sample_ordered_gain_matrix(rng: np.random.Generator, rho: float, size: int, num_users: int = 2) -> np.ndarray:
    """``size`` block realisations of ``num_users`` gains, each row sorted descending."""
    g = rng.exponential(rho, size=(size, num_users))
    return -np.sort(-g, axis=1)
