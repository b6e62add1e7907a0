import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from fblec.channel import ChannelSample, LinkConfig
from fblec.errors import DomainError
from fblec.rates import (
    dispersion,
    fbl_rate,
    fbl_rate_noma_strong,
    fbl_rate_noma_weak,
    fbl_rate_oma,
    link_qinv,
    noma_strong_sinr,
    noma_weak_sinr,
)

CFG = LinkConfig(rho=100.0)
QINV = norm.isf(1e-6)


def _reference_rate(snr, n=400, eps=1e-6, share=1.0):
    v = 1.0 - (1.0 + snr) ** -2
    return share * (math.log2(1.0 + snr) - math.sqrt(v / n) * norm.isf(eps))


def test_dispersion_limits():
    assert dispersion(0.0) == 0.0
    assert dispersion(1e12) == pytest.approx(1.0)
    np.testing.assert_allclose(dispersion(np.array([1.0, 3.0])), [0.75, 15 / 16])


@pytest.mark.parametrize("snr", [0.0, 0.01, 0.5, 3.0, 100.0, 1e4])
def test_fbl_rate_reference(snr):
    assert fbl_rate(snr, 400, QINV) == pytest.approx(_reference_rate(snr), rel=1e-12, abs=1e-15)


def test_fbl_rate_can_be_negative_or_clamped():
    r = fbl_rate(0.01, 400, QINV)
    assert r < 0
    assert fbl_rate(0.01, 400, QINV, clamp=True) == 0.0


def test_approx_dispersion_is_lower_bound():
    snr = np.logspace(-2, 4, 30)
    assert np.all(fbl_rate(snr, 400, QINV, approx_dispersion=True) <= fbl_rate(snr, 400, QINV))


def test_strong_user_rate():
    s = ChannelSample(50.0, 10.0)
    assert noma_strong_sinr(s, CFG) == pytest.approx(15.0)
    got = fbl_rate_noma_strong(s, CFG)
    assert got.rate == pytest.approx(_reference_rate(15.0), rel=1e-12)
    assert got.effective_snr == pytest.approx(15.0)
    assert got.dispersion == pytest.approx(1 - 16.0 ** -2)


def test_weak_user_rate():
    s = ChannelSample(50.0, 10.0)
    sinr = 0.7 * 10.0 / (0.3 * 10.0 + 1.0)
    assert noma_weak_sinr(s, CFG) == pytest.approx(sinr)
    assert fbl_rate_noma_weak(s, CFG).rate == pytest.approx(_reference_rate(sinr), rel=1e-12)


def test_oma_rate_halves_slot():
    assert fbl_rate_oma(20.0, CFG).rate == pytest.approx(_reference_rate(20.0, share=0.5), rel=1e-12)
    with pytest.raises(DomainError):
        fbl_rate_oma(-1.0, CFG)


def test_weak_sinr_saturates():
    s = ChannelSample(1e12, 1e12)
    assert noma_weak_sinr(s, CFG) == pytest.approx(0.7 / 0.3, rel=1e-9)


def test_qinv_rejects_certain_loss():
    with pytest.raises(DomainError):
        link_qinv(LinkConfig(rho=1.0, epsilon=1.0))


@given(st.floats(0.0, 1e6), st.floats(0.0, 1e6))
@settings(max_examples=200, deadline=None)
def test_rate_monotone_in_snr(a, b):
    lo, hi = sorted((a, b))
    # the dispersion penalty grows with snr but never outpaces log2(1+snr) once snr is not tiny
    if lo >= 0.1:
        assert fbl_rate(lo, 400, QINV) <= fbl_rate(hi, 400, QINV) + 1e-12


@given(st.floats(1e-4, 0.999999))
@settings(max_examples=100, deadline=None)
def test_rate_decreases_as_error_target_tightens(eps):
    cfg_loose = LinkConfig(rho=10.0, epsilon=eps)
    cfg_tight = LinkConfig(rho=10.0, epsilon=eps / 10)
    s = ChannelSample(5.0, 1.0)
    assert fbl_rate_noma_strong(s, cfg_tight).rate <= fbl_rate_noma_strong(s, cfg_loose).rate
