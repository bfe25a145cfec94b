import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavloc.channel import (
    C_LIGHT,
    ChannelParams,
    LinkClass,
    LinkGeometry,
    free_space_constant,
    mean_path_loss,
    mean_rss,
    p_los,
    p_nlos,
    sample_rss,
    shadowing_sigma,
)

P = ChannelParams()
angles = st.floats(0.0, math.pi / 2)


def test_free_space_constant():
    assert free_space_constant(P) == pytest.approx(38.46816, abs=1e-4)
    assert free_space_constant(ChannelParams(f=C_LIGHT / (4 * math.pi))) == pytest.approx(0.0, abs=1e-12)
    assert free_space_constant(ChannelParams(f=20e9)) == pytest.approx(58.46816, abs=1e-4)


def test_shadowing_sigma_examples():
    assert shadowing_sigma(0.0, LinkClass.LOS, P) == 10.0
    assert shadowing_sigma(0.0, LinkClass.NLOS, P) == 30.0
    assert shadowing_sigma(math.pi / 2, LinkClass.LOS, P) == pytest.approx(0.432139, abs=1e-6)


@pytest.mark.parametrize("theta", [-0.01, math.pi / 2 + 0.01])
def test_angle_domain_rejected(theta):
    with pytest.raises(ValueError):
        shadowing_sigma(theta, LinkClass.LOS, P)
    with pytest.raises(ValueError):
        p_los(theta, P)


def test_p_los_examples():
    assert p_los(0.0, P) == pytest.approx(1 / 48)
    # 47 exp(-10 pi) ~ 1.07e-12
    assert 1.0 - p_los(math.pi / 2, P) == pytest.approx(47 * math.exp(-10 * math.pi), rel=1e-3)
    assert p_los(math.pi / 2, P) == pytest.approx(1.0, abs=1.1e-12)


def test_p_los_limit_without_obstruction():
    # a_o must stay positive for a valid parameter set; probe the formula directly
    q = ChannelParams(a_o=1e-300)
    assert np.allclose(p_los(np.linspace(0, math.pi / 2, 7), q), 1.0)


def test_mean_path_loss():
    assert mean_path_loss(100.0, LinkClass.LOS, P) == pytest.approx(79.46816, abs=1e-4)
    unit = ChannelParams(f=C_LIGHT / (4 * math.pi), mu_los=0.0)
    assert mean_path_loss(1.0, LinkClass.LOS, unit) == pytest.approx(0.0, abs=1e-12)
    diff = mean_path_loss(1000.0, LinkClass.NLOS, P) - mean_path_loss(100.0, LinkClass.NLOS, P)
    assert diff == pytest.approx(20.0, abs=1e-12)
    with pytest.raises(ValueError):
        mean_path_loss(0.0, LinkClass.LOS, P)


def test_params_validation():
    with pytest.raises(ValueError, match="a_nlos"):
        ChannelParams(a_nlos=5.0)
    with pytest.raises(ValueError, match="f"):
        ChannelParams(f=0.0)
    with pytest.raises(ValueError, match="b_o"):
        ChannelParams(b_o=-1.0)


def test_link_geometry():
    g = LinkGeometry(r=120.0, h=200.0)
    assert g.d == pytest.approx(233.238076, abs=1e-6)
    assert LinkGeometry(r=0.0, h=50.0).theta == pytest.approx(math.pi / 2)
    assert LinkGeometry(r=50.0, h=50.0).theta == pytest.approx(math.pi / 4)
    with pytest.raises(ValueError):
        LinkGeometry(r=1.0, h=0.0)


@given(angles, angles)
def test_monotone_in_elevation(t1, t2):
    lo, hi = sorted((t1, t2))
    if hi - lo < 1e-6:
        return
    for cls in LinkClass:
        assert shadowing_sigma(hi, cls, P) < shadowing_sigma(lo, cls, P)
    assert p_los(hi, P) >= p_los(lo, P)


@given(angles)
def test_probabilities_complement(theta):
    assert p_los(theta, P) + p_nlos(theta, P) == pytest.approx(1.0, abs=0)


@given(st.floats(1e-3, 1e5))
def test_decade_law(d):
    for cls in LinkClass:
        assert mean_path_loss(10 * d, cls, P) - mean_path_loss(d, cls, P) == pytest.approx(20.0, abs=1e-9)


class TestSampleRss:
    link = LinkGeometry(r=150.0, h=200.0)

    def test_degenerate_sigma(self):
        rng = np.random.default_rng(0)
        got = sample_rss(self.link, LinkClass.NLOS, 10, rng, P, sigma=0.0)
        expect = P.c_offset - 20 * math.log10(self.link.d) - free_space_constant(P) - P.mu_nlos
        assert got == pytest.approx(expect, abs=1e-12)

    @pytest.mark.parametrize("method", ["aggregate", "per_sample"])
    def test_deterministic(self, method):
        a = sample_rss(self.link, LinkClass.LOS, 5, np.random.default_rng(7), P, size=4, method=method)
        b = sample_rss(self.link, LinkClass.LOS, 5, np.random.default_rng(7), P, size=4, method=method)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("method", ["aggregate", "per_sample"])
    @pytest.mark.parametrize("cls", list(LinkClass))
    def test_mean_and_variance(self, method, cls):
        n, trials = 10, 100_000
        rng = np.random.default_rng(123)
        x = sample_rss(self.link, cls, n, rng, P, size=trials, method=method)
        sigma = float(shadowing_sigma(self.link.theta, cls, P))
        se = sigma / math.sqrt(n) / math.sqrt(trials)
        assert abs(x.mean() - mean_rss(self.link.d, cls, P)) < 3 * se
        assert x.std() == pytest.approx(sigma / math.sqrt(n), rel=0.02)

    def test_large_sample_count_variance_reduction(self):
        n = 100_000
        rng = np.random.default_rng(5)
        x = sample_rss(self.link, LinkClass.NLOS, n, rng, P, size=2000)
        sigma = float(shadowing_sigma(self.link.theta, LinkClass.NLOS, P))
        assert x.std() == pytest.approx(sigma / math.sqrt(n), rel=0.05)

    def test_methods_agree_in_distribution(self):
        from scipy.stats import ks_2samp

        a = sample_rss(self.link, LinkClass.NLOS, 8, np.random.default_rng(1), P, size=20_000, method="aggregate")
        b = sample_rss(self.link, LinkClass.NLOS, 8, np.random.default_rng(2), P, size=20_000, method="per_sample")
        assert ks_2samp(a, b).pvalue > 1e-3

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            sample_rss(self.link, LinkClass.LOS, 0, np.random.default_rng(0), P)
