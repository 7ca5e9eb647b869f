import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from privroute import field as fieldmod
from privroute.field import (
    BlindingSet,
    PrimeField,
    RoundMasks,
    blinded_inner_consts,
    deserialize_elements,
    embed_vector,
    encode_dest,
    encode_source,
    eval_encoded,
    in_release_interval,
    scale_vector,
    serialize_elements,
)

F61 = PrimeField(2**61 - 1)
F13 = PrimeField(8191)
F5 = PrimeField(31)


def test_rejects_non_mersenne_moduli():
    for bad in (7919, 2**61, 2**17 - 1, 1, 0):
        with pytest.raises(ValueError):
            PrimeField(bad)


def test_reduce_matches_mod_on_randoms():
    rng = random.Random(11)
    for f in (F61, F13, F5):
        for _ in range(2000):
            x = rng.randrange(0, f.p * f.p * 4)
            assert f.reduce(x) == x % f.p
        for x in (0, 1, f.p - 1, f.p, f.p + 1, 2 * f.p, f.p * f.p):
            assert f.reduce(x) == x % f.p


def test_field_ops_match_int_mod():
    rng = random.Random(12)
    for f in (F61, F13):
        for _ in range(500):
            a, b = rng.randrange(f.p), rng.randrange(f.p)
            assert f.add(a, b) == (a + b) % f.p
            assert f.sub(a, b) == (a - b) % f.p
            assert f.mul(a, b) == (a * b) % f.p
            assert f.neg(a) == (-a) % f.p
            if a:
                assert f.mul(a, f.inv(a)) == 1


def test_centered_range_and_sign():
    for f in (F13, F5):
        for a in range(f.p):
            c = f.centered(a)
            assert -f.p // 2 <= c <= f.p // 2
            assert c % f.p == a
    assert F61.centered(0) == 0
    assert F61.centered(F61.p - 1) == -1
    assert F61.centered(F61.half) == F61.half
    assert F61.centered(F61.half + 1) == -(F61.half)


@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=2**61 - 2), st.integers(min_value=0, max_value=2**61 - 2))
def test_mul_property_against_mod(a, b):
    assert F61.mul(a, b) == (a * b) % F61.p


def test_serialize_roundtrip():
    rng = random.Random(13)
    vals = [rng.randrange(F61.p) for _ in range(17)]
    blob = serialize_elements(vals)
    assert len(blob) == 8 * len(vals)
    assert list(deserialize_elements(blob, len(vals))) == vals


def test_blinding_inverse_identity():
    rng = random.Random(14)
    for f in (F61, F13, F5):
        for _ in range(200):
            bl = BlindingSet.sample(f, rng)
            z = f.rand(rng)
            assert bl.unblind(f, bl.blind(f, z)) == z


def _affine_pair(f, x, y, bl, masks):
    xs = scale_vector(f, x, bl.alpha)
    consts = blinded_inner_consts(f, bl, len(x))
    src = encode_source(f, xs, consts, masks)
    dst = encode_dest(f, embed_vector(f, y), masks)
    return src, dst


def test_affine_eval_matches_blinded_inner_product_random():
    # Oracle route: compute alpha*<x,y> + beta directly over the integers mod p.
    rng = random.Random(15)
    f = F61
    for _ in range(1000):
        d = rng.randrange(1, 9)
        x = [rng.randrange(-(2**20), 2**20) for _ in range(d)]
        y = [rng.randrange(-(2**20), 2**20) for _ in range(d)]
        bl = BlindingSet.sample(f, rng)
        masks = RoundMasks.sample(f, d, rng)
        src, dst = _affine_pair(f, x, y, bl, masks)
        want = (bl.alpha * sum(a * b for a, b in zip(x, y)) + bl.beta) % f.p
        assert eval_encoded(f, src, dst) == want


def test_affine_eval_exhaustive_d1_toy_field():
    f = F5
    rng = random.Random(16)
    for x in range(f.p):
        for y in range(f.p):
            for _ in range(4):
                bl = BlindingSet.sample(f, rng)
                masks = RoundMasks.sample(f, 1, rng)
                src, dst = _affine_pair(f, [x], [y], bl, masks)
                assert eval_encoded(f, src, dst) == (bl.alpha * x * y + bl.beta) % f.p


def test_affine_cross_pair_consistency():
    # Any source row combined with any destination row under shared masks
    # must evaluate correctly; this is what lets one PIR'd record of each
    # kind be combined freely.
    rng = random.Random(17)
    f = F13
    d = 5
    bl = BlindingSet.sample(f, rng)
    masks = RoundMasks.sample(f, d, rng)
    consts = blinded_inner_consts(f, bl, d)
    xs = [[rng.randrange(-50, 50) for _ in range(d)] for _ in range(6)]
    ys = [[rng.randrange(-50, 50) for _ in range(d)] for _ in range(6)]
    srcs = [encode_source(f, scale_vector(f, x, bl.alpha), consts, masks) for x in xs]
    dsts = [encode_dest(f, embed_vector(f, y), masks) for y in ys]
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            want = (bl.alpha * sum(a * b for a, b in zip(x, y)) + bl.beta) % f.p
            assert eval_encoded(f, srcs[i], dsts[j]) == want


def test_source_first_components_uniform_chix2():
    # Over fresh masks the first component x - r1 is a one-time pad; a
    # chi-square test at the 99% level over the toy field must not reject.
    from scipy.stats import chi2

    f = F13
    rng = random.Random(18)
    n = 100_000
    counts = [0] * f.p
    x = 4242
    for _ in range(n):
        r1 = f.rand(rng)
        counts[f.sub(x, r1)] += 1
    expected = n / f.p
    stat = sum((c - expected) ** 2 / expected for c in counts)
    assert stat < chi2.ppf(0.99, f.p - 1)


def test_blinding_family_pairwise_independence_exhaustive():
    # For fixed z != z', (alpha*z+beta, alpha*z'+beta) over all (alpha, beta)
    # hits every pair of distinct values exactly once.
    f = F5
    z, zp = 3, 17
    seen = {}
    for alpha in range(1, f.p):
        for beta in range(f.p):
            pair = ((alpha * z + beta) % f.p, (alpha * zp + beta) % f.p)
            seen[pair] = seen.get(pair, 0) + 1
    assert all(v == 1 for v in seen.values())
    assert len(seen) == f.p * (f.p - 1)
    assert all(a != b for a, b in seen)


def test_blinding_family_pairwise_independence_sampled():
    from scipy.stats import chi2

    f = F13
    rng = random.Random(19)
    z, zp = 77, 1234
    n = 100_000
    bins = 8
    width = (f.p + bins - 1) // bins
    counts = [[0] * bins for _ in range(bins)]
    for _ in range(n):
        alpha = f.rand_nonzero(rng)
        beta = f.rand(rng)
        a = (alpha * z + beta) % f.p
        b = (alpha * zp + beta) % f.p
        counts[a // width][b // width] += 1
    expected = n / (bins * bins)
    stat = sum((c - expected) ** 2 / expected for row in counts for c in row)
    assert stat < chi2.ppf(0.99, bins * bins - 1)


def test_release_interval_rate_toy_field():
    # A uniform field value lands in the closed release interval with
    # probability 2^(tau+1)/p (up to the single extra residue at zero, which
    # the binomial tolerance absorbs).
    f = F13
    tau = 4
    rng = random.Random(20)
    n = 100_000
    hits = sum(1 for _ in range(n) if in_release_interval(f, f.rand(rng), tau))
    target = 2 ** (tau + 1) / f.p
    sigma = math.sqrt(n * target * (1 - target))
    assert abs(hits - n * target) <= 3 * sigma


def test_release_interval_boundary_closed():
    f = F13
    tau = 4
    assert in_release_interval(f, 2**tau, tau)
    assert in_release_interval(f, f.p - 2**tau, tau)  # centered == -2^tau
    assert not in_release_interval(f, 2**tau + 1, tau)
    assert not in_release_interval(f, f.p - 2**tau - 1, tau)
    assert in_release_interval(f, 0, tau)
