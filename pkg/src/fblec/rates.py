"""Finite-blocklength achievable rates (normal approximation), in b/s/Hz.

    r = share * (log2(1 + snr) - sqrt(V / n) * Qinv(eps)),   V = 1 - (1 + snr)^-2

``share`` is the fraction of the slot a user owns: 1 for NOMA, 1/2 for
two-user OMA.  Negative rates are returned as-is unless ``clamp`` is set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSample, LinkConfig
from .errors import DomainError
from .specfun import inv_gaussian_q


@dataclass(frozen=True)
class RateSample:
    rate: float
    dispersion: float
    effective_snr: float


def dispersion(snr):
    snr = np.asarray(snr, dtype=float)
    out = 1.0 - 1.0 / (1.0 + snr) ** 2
    return out if out.ndim else float(out)


def link_qinv(cfg: LinkConfig) -> float:
    if cfg.epsilon >= 1.0:
        raise DomainError("rates are undefined for epsilon = 1")
    return inv_gaussian_q(cfg.epsilon)


def fbl_rate(snr, n: int, qinv: float, share: float = 1.0, approx_dispersion: bool = False,
             clamp: bool = False):
    """Vectorised rate for an array of effective SNRs.

    With ``approx_dispersion`` the penalty uses sqrt(V) = 1 (high-SNR form).
    """
    snr = np.asarray(snr, dtype=float)
    root_v = 1.0 if approx_dispersion else np.sqrt(dispersion(snr))
    r = share * (np.log1p(snr) / math.log(2.0) - root_v * qinv / math.sqrt(n))
    if clamp:
        r = np.maximum(r, 0.0)
    return r if r.ndim else float(r)


def strong_snr_values(gamma1, alpha1: float):
    """SNR of the strong user after SIC; gamma already includes rho."""
    return alpha1 * np.asarray(gamma1, dtype=float)


def weak_sinr_values(gamma2, alpha1: float, alpha2: float):
    """SINR of the weak user, which treats the strong user's signal as noise."""
    g = np.asarray(gamma2, dtype=float)
    return alpha2 * g / (alpha1 * g + 1.0)


def noma_strong_sinr(sample: ChannelSample, cfg: LinkConfig) -> float:
    return cfg.alpha1 * sample.gamma1


def noma_weak_sinr(sample: ChannelSample, cfg: LinkConfig) -> float:
    return float(weak_sinr_values(sample.gamma2, cfg.alpha1, cfg.alpha2))


def _sample(snr: float, cfg: LinkConfig, share: float, clamp: bool) -> RateSample:
    r = fbl_rate(snr, cfg.blocklength_n, link_qinv(cfg), share=share, clamp=clamp)
    return RateSample(rate=r, dispersion=dispersion(snr), effective_snr=snr)


def fbl_rate_noma_strong(sample: ChannelSample, cfg: LinkConfig, clamp: bool = False) -> RateSample:
    return _sample(noma_strong_sinr(sample, cfg), cfg, 1.0, clamp)


def fbl_rate_noma_weak(sample: ChannelSample, cfg: LinkConfig, clamp: bool = False) -> RateSample:
    return _sample(noma_weak_sinr(sample, cfg), cfg, 1.0, clamp)


def fbl_rate_oma(gamma: float, cfg: LinkConfig, clamp: bool = False) -> RateSample:
    if gamma < 0:
        raise DomainError(f"gain must be nonnegative, got {gamma}")
    return _sample(float(gamma), cfg, 0.5, clamp)
