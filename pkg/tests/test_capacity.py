import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelcap.capacity import (
    CapacityDomainError,
    CapacityKind,
    c_alpha,
    c_alpha_array,
    classify_and_compute,
    depolarizing_capacity,
    lower_bound,
    pattern_match_exact,
)
from kernelcap.channel import ChannelSpectrum


def binary_entropy(p):
    return -sum(x * math.log(x) for x in (p, 1 - p) if x > 0)


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_special_values(d):
    assert abs(c_alpha(1.0, d) - math.log(d)) < 1e-12
    assert abs(c_alpha(0.0, d)) < 1e-12
    assert abs(c_alpha(-1 / (d - 1), d) - math.log(d / (d - 1))) < 1e-12


def test_qubit_symmetry_and_entropy_oracle():
    lam = np.linspace(-1, 1, 1001)
    c = c_alpha_array(lam, 2)
    assert np.abs(c - c[::-1]).max() < 1e-12
    oracle = np.array([math.log(2) - binary_entropy((1 + abs(x)) / 2) for x in lam])
    assert np.abs(c - oracle).max() < 1e-12


@pytest.mark.parametrize("d", [2, 3, 5])
def test_monotone_on_unit_interval(d):
    c = c_alpha_array(np.linspace(0, 1, 1001), d)
    assert np.all(np.diff(c) >= 0)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_scalar_matches_array(d):
    lam = np.linspace(-1 / (d - 1), 1, 257)
    scalar = np.array([c_alpha(x, d) for x in lam])
    assert np.abs(scalar - c_alpha_array(lam, d)).max() < 1e-14


@pytest.mark.parametrize("d", [2, 3, 5])
def test_depolarizing_identity(d):
    # the entropy form is an independent route to the same number
    for lam in np.linspace(-1 / (d - 1), 1, 401):
        assert abs(depolarizing_capacity(lam, d) - c_alpha(lam, d)) < 1e-12
        res = classify_and_compute(ChannelSpectrum(d, [lam] * (d + 1)))
        assert abs(res.value - depolarizing_capacity(lam, d)) < 1e-12
        assert res.exact


def test_domain_errors():
    with pytest.raises(CapacityDomainError):
        c_alpha(1.1, 2)
    with pytest.raises(CapacityDomainError):
        c_alpha(-0.6, 3)
    with pytest.raises(CapacityDomainError):
        c_alpha_array([0.0, -0.6], 3)
    # float slack at the endpoints is absorbed
    assert c_alpha(1 + 1e-14, 2) == math.log(2)


def test_classify_examples():
    r = classify_and_compute(ChannelSpectrum(2, [1, 1, 1]))
    assert r.kind is CapacityKind.DEPOLARIZING and abs(r.value - math.log(2)) < 1e-15

    for d in (2, 3, 5):
        r = classify_and_compute(ChannelSpectrum(d, [-1 / (d - 1)] * (d + 1)))
        assert r.kind is CapacityKind.EXACT_NEGATIVE
        assert abs(r.value - math.log(d / (d - 1))) < 1e-12

    r = classify_and_compute(ChannelSpectrum(2, [-0.4788, -0.4788, 0.3012]))
    assert r.kind is CapacityKind.LOWER_BOUND and r.argmax_alpha == 1
    assert abs(r.value - (math.log(2) - binary_entropy((1 + 0.4788) / 2))) < 1e-12
    assert abs(r.value - 0.1194636) < 1e-6


def test_pattern_examples():
    assert pattern_match_exact(ChannelSpectrum(3, [-0.2, -0.2, -0.2, -0.5])) is CapacityKind.EXACT_NEGATIVE
    assert pattern_match_exact(ChannelSpectrum(3, [0.9, 0.1, 0.1, 0.1])) is CapacityKind.EXACT_POSITIVE
    assert pattern_match_exact(ChannelSpectrum(3, [0.5, -0.1, 0.2, 0.3])) is CapacityKind.LOWER_BOUND
    # degeneracy within float noise still counts
    assert pattern_match_exact(ChannelSpectrum(3, [0.9, 0.1, 0.1 + 1e-13, 0.1])) is CapacityKind.EXACT_POSITIVE
    assert pattern_match_exact(ChannelSpectrum(3, [0.9, 0.1, 0.1 + 1e-6, 0.1])) is CapacityKind.LOWER_BOUND


@settings(max_examples=200, deadline=None)
@given(
    d=st.sampled_from([2, 3, 5]),
    u=st.floats(0, 1),
    v=st.floats(0, 1),
    sign=st.sampled_from([-1, 1]),
)
def test_bound_equals_exact_on_patterns(d, u, v, sign):
    lo = -1 / (d - 1)
    if sign < 0:
        big = lo * u
        small = lo + (big - lo) * v
        lam = [big] * d + [small]
    else:
        big = u
        small = big * v
        lam = [big] + [small] * d
    s = ChannelSpectrum(d, lam)
    res = classify_and_compute(s)
    assert res.exact
    assert abs(res.value - lower_bound(s)[0]) < 1e-12


def test_lower_bound_argmax():
    value, alpha = lower_bound(ChannelSpectrum(3, [0.1, -0.4, 0.3, 0.2]))
    assert alpha == 2
    assert value == pytest.approx(c_alpha(-0.4, 3))
