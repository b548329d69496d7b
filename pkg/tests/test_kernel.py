import math

import numpy as np
import pytest

from lrising import kernel as K
from lrising import oracles

# analytic values, frozen from independent evaluation (mpmath, 30 digits)
EPS_D1_S2 = 3.2898681336964529  # 2 zeta(2) = pi^2/3
EPS_D1_S4 = 2.1646464674222764  # 2 zeta(4) = pi^4/45
EPS_D2_S3 = 9.0336216831009503  # 4 zeta(3/2) beta(3/2), square-lattice identity
TORUS_D1_N4_S2 = 0.61685027506808491  # sum over odd multiples of 2: pi^2/16


def test_params_validation():
    with pytest.raises(K.DomainError):
        K.ModelParams(d=4, s=5.0)
    with pytest.raises(K.DomainError):
        K.ModelParams(d=2, s=2.0)  # s must exceed d
    with pytest.raises(K.DomainError):
        K.ModelParams(d=1, s=2.0, beta=0.0)
    with pytest.raises(K.DomainError):
        K.ModelParams(d=1, s=2.0, kappa=-1.0)


def test_coupling_examples():
    p = K.ModelParams(d=2, s=3.0)
    assert K.coupling((0, 0), (3, 4), p) == pytest.approx(1.0 / 125.0, rel=1e-14)
    p1 = K.ModelParams(d=1, s=2.0)
    assert K.coupling((7,), (7,), p1) == 0.0
    assert K.coupling((0,), (2,), p1) == pytest.approx(0.25, rel=1e-14)


def test_coupling_symmetry_and_translation():
    rng = np.random.default_rng(7)
    for d in (1, 2, 3):
        p = K.ModelParams(d=d, s=d + 0.7, kappa=1.3)
        for _ in range(40):
            i = rng.integers(-20, 20, size=d)
            j = rng.integers(-20, 20, size=d)
            t = rng.integers(-5, 5, size=d)
            assert K.coupling(i, j, p) == K.coupling(j, i, p)
            assert K.coupling(i + t, j + t, p) == pytest.approx(
                K.coupling(i, j, p), rel=1e-14)


def test_single_site_sum_analytic_values():
    tb = K.single_site_sum(K.ModelParams(d=1, s=2.0), tol=1e-10)
    assert tb.tail <= 1e-10
    assert tb.contains(EPS_D1_S2)
    tb = K.single_site_sum(K.ModelParams(d=1, s=4.0), tol=1e-12)
    assert tb.contains(EPS_D1_S4)
    tb = K.single_site_sum(K.ModelParams(d=2, s=3.0), tol=1e-8)
    assert tb.tail <= 1e-8
    assert tb.contains(EPS_D2_S3)


def test_single_site_sum_matches_plain_partial_sums():
    # independent oracle: raw partial sum + the crude integral majorant
    p = K.ModelParams(d=2, s=3.5)
    tb = K.single_site_sum(p, tol=1e-8)
    R = 30
    partial = oracles.single_site_partial(2, 3.5, R)
    upper = partial + K.box_tail_upper(2, 3.5, R + 1)
    assert partial <= tb.upper
    assert tb.value <= upper


def test_single_site_sum_monotone_in_s():
    for d in (1, 2):
        values = []
        for s in (d + 0.5, d + 1.0, d + 1.5, d + 2.0):
            values.append(K.single_site_sum(K.ModelParams(d=d, s=s), tol=1e-9))
        for lo, hi in zip(values[1:], values[:-1]):
            assert lo.upper < hi.value  # strictly decreasing, interval-safe


def test_single_site_sum_kappa_scaling():
    a = K.single_site_sum(K.ModelParams(d=1, s=2.5, kappa=1.0), tol=1e-10)
    b = K.single_site_sum(K.ModelParams(d=1, s=2.5, kappa=2.5), tol=1e-10)
    assert b.value == pytest.approx(2.5 * a.value, rel=1e-13)
    assert K.single_site_sum(K.ModelParams(d=1, s=2.5, kappa=0.0)).value == 0.0


def test_torus_coupling_analytic_d1():
    tb = K.torus_coupling([0], [2], 4, K.ModelParams(d=1, s=2.0), tol=1e-10)
    assert tb.contains(TORUS_D1_N4_S2)
    assert tb.tail <= 1e-10


def test_torus_coupling_far_pair_is_nearly_open():
    tb = K.torus_coupling([0], [1], 1000, K.ModelParams(d=1, s=3.0))
    assert abs(tb.value - 1.0) <= 1e-8


def test_torus_coupling_minimum_image_self_is_zero():
    p = K.ModelParams(d=2, s=3.0)
    tb = K.torus_coupling([3, 3], [3, 3], 8, p, images="minimum")
    assert tb.value == 0.0
    # full policy keeps the self-image series
    full = K.torus_coupling([3, 3], [3, 3], 8, p)
    assert full.contains(EPS_D2_S3 / 8 ** 3)


def test_torus_coupling_matches_direct_image_oracle():
    for d, s, N in [(1, 2.0, 6), (2, 3.5, 8), (2, 3.0, 5), (3, 4.5, 4)]:
        p = K.ModelParams(d=d, s=s, kappa=1.2)
        i = (1,) * d
        j = (0,) * (d - 1) + (2,)
        ew = K.torus_coupling(i, j, N, p, tol=1e-9)
        radius = 64 if d == 3 else 400
        direct = oracles.torus_direct_images(i, j, N, p, image_radius=radius)
        assert ew.overlaps(direct), (d, s, N, ew, direct)


def test_torus_coupling_converges_to_open_coupling():
    p = K.ModelParams(d=2, s=3.0)
    open_value = K.coupling([0, 0], [1, 2], p)
    prev = None
    for N in (8, 16, 32, 64):
        tb = K.torus_coupling([0, 0], [1, 2], N, p, tol=1e-8)
        assert tb.value + tb.tail >= open_value  # periodization only adds
        if prev is not None:
            assert tb.value < prev
        prev = tb.value
    assert prev - open_value < 1e-3


def test_smeared_coupling_against_brute_quadrature():
    p = K.ModelParams(d=1, s=2.0)
    fast = K.smeared_coupling([0], [5], p, quad_order=24)
    brute = oracles.smeared_brute([0], [5], p, order=64)
    assert fast == pytest.approx(brute, rel=1e-12)
    p2 = K.ModelParams(d=2, s=3.5, kappa=0.8)
    fast2 = K.smeared_coupling([0, 0], [4, 3], p2, quad_order=20)
    brute2 = oracles.smeared_brute([0, 0], [4, 3], p2, order=48)
    assert fast2 == pytest.approx(brute2, rel=1e-11)


def test_smeared_coupling_sandwich():
    # K/(1+sqrt(d)/r)^s <= Ksmear <= K/(1-sqrt(d)/r)^s for r >= 2 sqrt(d)
    for d in (1, 2):
        p = K.ModelParams(d=d, s=d + 1.25)
        rd = math.sqrt(d)
        pairs = []
        if d == 1:
            pairs = [((0,), (j,)) for j in range(2, 51)]
        else:
            pairs = [((0, 0), (a, b)) for a in range(0, 51, 5)
                     for b in range(0, 51, 7)
                     if a * a + b * b >= 4 * d]
        for i, j in pairs:
            r = math.dist(i, j)
            if r < 2 * rd:
                continue
            val = K.smeared_coupling(i, j, p, quad_order=12)
            kij = K.coupling(i, j, p)
            assert kij / (1 + rd / r) ** p.s <= val + 1e-13
            assert val <= kij / (1 - rd / r) ** p.s + 1e-13


def test_smeared_coupling_short_distance_ratio_exceeds_one():
    # smearing weights the near corners more, so Ksmear/K > 1 at r = 2
    p = K.ModelParams(d=1, s=12.0)
    lo = K.smeared_coupling([0], [2], p, quad_order=24)
    hi = K.smeared_coupling([0], [2], p, quad_order=48)
    assert lo == pytest.approx(hi, rel=1e-10)  # order-consistent
    assert lo / K.coupling([0], [2], p) > 1.0


def test_smeared_coupling_rejects_touching_cells():
    with pytest.raises(K.DomainError):
        K.smeared_coupling([0], [1], K.ModelParams(d=1, s=2.0))
    with pytest.raises(K.DomainError):
        K.smeared_coupling([0, 0], [1, 1], K.ModelParams(d=2, s=3.0))


def test_block_averaging_envelope():
    # pairs drawn from two ell-blocks at separation >= a differ by at most
    # ((1 + 4 sqrt(d) ell / a)^s - 1) relative, which matches the paper's
    # C (ell/a) law with C -> 4 s sqrt(d) as ell/a -> 0
    rng = np.random.default_rng(11)
    for d in (1, 2):
        s = d + 1.0
        p = K.ModelParams(d=d, s=s)
        ell = 1
        for a in (4 * math.ceil(math.sqrt(d)) * ell + d, 20, 40):
            envelope = (1 + 4 * math.sqrt(d) * ell / a) ** s - 1
            for _ in range(20):
                c2 = rng.integers(a + 2 * ell + 1, a + 2 * ell + 20, size=d)
                block = np.stack(np.meshgrid(
                    *([np.arange(-ell, ell + 1)] * d), indexing="ij"),
                    axis=-1).reshape(-1, d)
                v1 = block
                v2 = block + c2
                dmin = math.sqrt(
                    ((v2[:, None, :] - v1[None, :, :]) ** 2)
                    .sum(axis=-1).min())
                if dmin < a:
                    continue
                kvals = np.array([[K.coupling(x, y, p) for y in v2]
                                  for x in v1])
                ref = kvals[0, 0]
                assert np.abs(kvals - ref).max() <= envelope * ref * (1 + 1e-12)
