import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from spherebrats.losses import (
    BISCARTESIAN_WEIGHTS,
    DEFAULT_WEIGHTS,
    GaussianLatent,
    LossWeights,
    composite_loss,
    kl_gaussian,
    kl_gaussian_grad,
    l2_loss,
    soft_dice_loss,
)
from spherebrats.volume import Volume3D

latents = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-3, 3), min_size=n, max_size=n),
        st.lists(st.floats(0.1, 4), min_size=n, max_size=n),
    )
)


def kl_integral(mu, sigma):
    """KL(N(mu, sigma^2) || N(0, 1)) by quadrature."""
    p, q = stats.norm(mu, sigma), stats.norm(0, 1)
    f = lambda x: p.pdf(x) * (p.logpdf(x) - q.logpdf(x))
    return integrate.quad(f, mu - 40 * sigma, mu + 40 * sigma, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def test_soft_dice_examples():
    assert soft_dice_loss(np.array([0.5, 0.5]), np.array([1, 0])) == pytest.approx(1 - 1.0 / (1.5 + 1e-7), abs=1e-15)
    assert soft_dice_loss(np.array([0.5, 0.5]), np.array([1, 0])) == pytest.approx(1 / 3, abs=1e-7)
    t = np.array([1, 0, 1, 1.0])
    assert soft_dice_loss(t, t) == pytest.approx(0.0, abs=1e-7)
    assert soft_dice_loss(np.zeros(4), t) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        soft_dice_loss(np.array([1.2, 0.0]), np.array([1, 0]))
    with pytest.raises(ValueError):
        soft_dice_loss(np.array([0.2]), np.array([1, 0]))


def test_soft_dice_decreases_along_path():
    rng = np.random.default_rng(0)
    t = (rng.random(50) < 0.4).astype(float)
    p0 = rng.random(50)
    vals = [soft_dice_loss((1 - a) * p0 + a * t, t) for a in np.linspace(0, 1, 5)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert 0 <= min(vals) and max(vals) <= 1 + 1e-7


def test_l2_examples():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 2, 2)), rng.standard_normal((2, 2, 2))
    assert l2_loss(a, a) == 0.0
    assert l2_loss(a + 2, a) == pytest.approx(4.0, abs=1e-12)
    loop = sum((x - y) ** 2 for x, y in zip(a.ravel(), b.ravel())) / 8
    assert l2_loss(Volume3D(a), Volume3D(b)) == pytest.approx(loop, rel=1e-14)
    with pytest.raises(ValueError):
        l2_loss(a, b[:1])


def test_kl_examples():
    for n in (1, 3, 16):
        assert kl_gaussian(GaussianLatent(np.zeros(n), np.ones(n))) == 0.0
    # Per-dimension mean of (mu^2 + sigma^2 - ln sigma^2 - 1): twice the textbook KL.
    assert kl_gaussian(GaussianLatent([1.0], [1.0])) == 1.0
    assert kl_gaussian(GaussianLatent([1.0], [1.0])) == pytest.approx(2 * kl_integral(1.0, 1.0), abs=1e-10)
    vals = [kl_gaussian(GaussianLatent([0.0], [s])) for s in (1, 2, 4, 8, 16)]
    assert vals == sorted(vals) and vals[0] < vals[1]
    with pytest.raises(ValueError):
        GaussianLatent([0.0], [0.0])
    with pytest.raises(ValueError):
        GaussianLatent([0.0, 1.0], [1.0])


@pytest.mark.parametrize("mu,sigma", [(0.3, 0.7), (-1.5, 2.2), (2.0, 0.25)])
def test_kl_matches_quadrature(mu, sigma):
    assert kl_gaussian(GaussianLatent([mu], [sigma])) == pytest.approx(2 * kl_integral(mu, sigma), rel=1e-9)


@given(latents)
def test_kl_non_negative(lat):
    mu, sigma = lat
    v = kl_gaussian(GaussianLatent(mu, sigma))
    assert v >= -1e-15
    if v == 0:
        assert np.allclose(mu, 0, atol=1e-7) and np.allclose(sigma, 1, atol=1e-4)


def _fd_kl(mu, sigma, h=1e-6):
    gm, gs = np.zeros_like(mu), np.zeros_like(sigma)
    for i in range(len(mu)):
        e = np.zeros_like(mu)
        e[i] = h
        gm[i] = (kl_gaussian(GaussianLatent(mu + e, sigma)) - kl_gaussian(GaussianLatent(mu - e, sigma))) / (2 * h)
        gs[i] = (kl_gaussian(GaussianLatent(mu, sigma + e)) - kl_gaussian(GaussianLatent(mu, sigma - e))) / (2 * h)
    return gm, gs


def test_kl_gradient_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = rng.integers(1, 10)
        mu, sigma = rng.normal(0, 2, n), rng.uniform(0.3, 3, n)
        gm, gs = kl_gaussian_grad(GaussianLatent(mu, sigma))
        fm, fs = _fd_kl(mu, sigma)
        g, f = np.concatenate([gm, gs]), np.concatenate([fm, fs])
        assert np.linalg.norm(g - f) / np.linalg.norm(g) < 1e-6


def test_composite_examples():
    assert composite_loss(0.5, 1.0, 2.0) == pytest.approx(0.8, abs=1e-15)
    assert composite_loss(0.5, 1.0, 2.0, DEFAULT_WEIGHTS) == pytest.approx(0.8, abs=1e-15)
    assert composite_loss(0.5, 1.0, 2.0, BISCARTESIAN_WEIGHTS) == pytest.approx(0.6002, abs=1e-15)
    assert composite_loss(0, 0, 0) == 0.0
    assert (BISCARTESIAN_WEIGHTS.w_l2, BISCARTESIAN_WEIGHTS.w_kl) == (0.1, 0.0001)
    with pytest.raises(ValueError):
        LossWeights(w_l2=-1)


@given(st.floats(0, 2), st.floats(0, 5), st.floats(0, 5), st.floats(0, 5))
def test_composite_is_linear(d, l2, kl, extra):
    base = composite_loss(d, l2, kl)
    assert composite_loss(d + extra, l2, kl) == pytest.approx(base + extra, abs=1e-12)
    assert composite_loss(d, l2 + extra, kl) == pytest.approx(base + 0.1 * extra, abs=1e-12)
    assert composite_loss(d, l2, kl + extra) == pytest.approx(base + 0.1 * extra, abs=1e-12)
    assert math.isfinite(base)
