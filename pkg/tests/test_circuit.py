import random

import pytest

from privroute.circuit import (
    CircuitBuilder,
    build_neighbor_circuit,
    eval_plain,
    plain_neighbor_eval,
)


def run1(build):
    """Build a one-shot circuit via `build(builder) -> dict of outputs`."""
    b = CircuitBuilder()
    values = build(b)
    return eval_plain(b.build(), values)


def test_add_exhaustive_small_widths():
    for w in (1, 2, 3, 4):
        b = CircuitBuilder()
        xa = b.add_inputs("a", w)
        xb = b.add_inputs("b", w)
        s, cout = b.add(xa, xb)
        b.mark_output("s", s)
        b.mark_output("c", [cout])
        circ = b.build()
        for a in range(1 << w):
            for bb in range(1 << w):
                r = eval_plain(circ, {"a": a, "b": bb})
                assert r["s"] == (a + bb) % (1 << w)
                assert r["c"] == (a + bb) >> w


def test_add_with_carry_in():
    b = CircuitBuilder()
    xa = b.add_inputs("a", 3)
    xb = b.add_inputs("b", 3)
    cin = b.add_inputs("cin", 1)[0]
    s, cout = b.add(xa, xb, cin)
    b.mark_output("s", s)
    b.mark_output("c", [cout])
    circ = b.build()
    for a in range(8):
        for bb in range(8):
            for c in range(2):
                r = eval_plain(circ, {"a": a, "b": bb, "cin": c})
                assert r["s"] + (r["c"] << 3) == a + bb + c


def test_increment_if_exhaustive():
    for w in (1, 2, 3, 5):
        b = CircuitBuilder()
        xa = b.add_inputs("a", w)
        c = b.add_inputs("c", 1)[0]
        s, cout = b.increment_if(xa, c)
        b.mark_output("s", s)
        b.mark_output("cout", [cout])
        circ = b.build()
        for a in range(1 << w):
            for cv in range(2):
                r = eval_plain(circ, {"a": a, "c": cv})
                assert r["s"] + (r["cout"] << w) == a + cv


def test_multiply_exhaustive_4bit():
    b = CircuitBuilder()
    xa = b.add_inputs("a", 4)
    xb = b.add_inputs("b", 4)
    b.mark_output("p", b.csa_multiply(xa, xb))
    circ = b.build()
    for a in range(16):
        for bb in range(16):
            assert eval_plain(circ, {"a": a, "b": bb})["p"] == a * bb


def test_multiply_random_61bit():
    b = CircuitBuilder()
    xa = b.add_inputs("a", 61)
    xb = b.add_inputs("b", 61)
    b.mark_output("p", b.csa_multiply(xa, xb))
    circ = b.build()
    rng = random.Random(11)
    for _ in range(25):
        a, bb = rng.getrandbits(61), rng.getrandbits(61)
        assert eval_plain(circ, {"a": a, "b": bb})["p"] == a * bb


@pytest.mark.parametrize("e", [5, 13])
def test_reduce_mersenne(e):
    p = 2**e - 1
    b = CircuitBuilder()
    x = b.add_inputs("x", 2 * e)
    b.mark_output("r", b.reduce_mersenne(x, e))
    circ = b.build()
    rng = random.Random(e)
    # all values a*b can take plus the awkward boundary region
    cases = [v for v in range(4 * p + 4)] if e == 5 else []
    cases += [rng.randrange((p - 1) ** 2 + 1) for _ in range(300)]
    cases += [0, p - 1, p, p + 1, 2 * p, (p - 1) ** 2]
    for v in cases:
        assert eval_plain(circ, {"x": v})["r"] == v % p, v


def test_mod_arithmetic_toy_exhaustive():
    e, p = 5, 31
    b = CircuitBuilder()
    xa = b.add_inputs("a", e)
    xb = b.add_inputs("b", e)
    b.mark_output("s", b.add_mod_mersenne(xa, xb, e))
    b.mark_output("m", b.mul_mod_mersenne(xa, xb, e))
    circ = b.build()
    for a in range(p):
        for bb in range(p):
            r = eval_plain(circ, {"a": a, "b": bb})
            assert r["s"] == (a + bb) % p
            assert r["m"] == (a * bb) % p


def test_mod_arithmetic_full_width():
    e = 61
    p = 2**e - 1
    b = CircuitBuilder()
    xa = b.add_inputs("a", e)
    xb = b.add_inputs("b", e)
    b.mark_output("s", b.add_mod_mersenne(xa, xb, e))
    b.mark_output("m", b.mul_mod_mersenne(xa, xb, e))
    circ = b.build()
    rng = random.Random(13)
    cases = [(rng.randrange(p), rng.randrange(p)) for _ in range(15)]
    cases += [(p - 1, p - 1), (0, p - 1), (1, 1), (p - 1, 1)]
    for a, bb in cases:
        r = eval_plain(circ, {"a": a, "b": bb})
        assert r["s"] == (a + bb) % p
        assert r["m"] == (a * bb) % p


def test_logic_trees_and_words():
    for w in (1, 2, 3, 5):
        b = CircuitBuilder()
        x = b.add_inputs("x", w)
        b.mark_output("or", [b.or_tree(x)])
        b.mark_output("and", [b.and_tree(x)])
        circ = b.build()
        for v in range(1 << w):
            r = eval_plain(circ, {"x": v})
            assert r["or"] == (1 if v else 0)
            assert r["and"] == (1 if v == (1 << w) - 1 else 0)

    b = CircuitBuilder()
    xa = b.add_inputs("a", 3)
    xb = b.add_inputs("b", 3)
    sel = b.add_inputs("sel", 1)[0]
    b.mark_output("eq", [b.eq_words(xa, xb)])
    b.mark_output("pick", b.select_word(sel, xa, xb))
    b.mark_output("gated", b.gate_word(sel, xa))
    circ = b.build()
    for a in range(8):
        for bb in range(8):
            for s in range(2):
                r = eval_plain(circ, {"a": a, "b": bb, "sel": s})
                assert r["eq"] == int(a == bb)
                assert r["pick"] == (a if s else bb)
                assert r["gated"] == (a if s else 0)


def _random_case(rng, p, tau, n, rho):
    def z_for(g, d):
        # bias toward the release interval, else the result is almost never valid
        if rng.random() < 0.6:
            w = rng.randrange(-(1 << tau), (1 << tau) + 1) % p
            return (w - d) * pow(g, -1, p) % p
        return rng.randrange(p)

    gne, gnw = rng.randrange(1, p), rng.randrange(1, p)
    dne, dnw = rng.randrange(p), rng.randrange(p)
    return dict(
        z_ne=z_for(gne, dne), z_nw=z_for(gnw, dnw),
        gamma_ne=gne, delta_ne=dne, gamma_nw=gnw, delta_nw=dnw,
        k_ne0=rng.getrandbits(rho), k_ne1=rng.getrandbits(rho),
        k_nw0=rng.getrandbits(rho), k_nw1=rng.getrandbits(rho),
        s=rng.randrange(n), t=rng.randrange(n),
    )


def _as_tuple(out):
    return (out["valid"], out["b_ne"], out["b_nw"], out["k_out_ne"], out["k_out_nw"])


@pytest.mark.parametrize("p,tau,n,rho,trials", [(31, 2, 4, 8, 1200), (8191, 4, 16, 16, 400)])
def test_neighbor_circuit_matches_reference(p, tau, n, rho, trials):
    circ = build_neighbor_circuit(p, tau, n, rho=rho)
    rng = random.Random(p)
    hits = 0
    for _ in range(trials):
        case = _random_case(rng, p, tau, n, rho)
        want = plain_neighbor_eval(p, tau, **case)
        assert _as_tuple(eval_plain(circ, case)) == want
        hits += want[0]
    assert hits > 0  # the valid branch must actually be exercised


def test_neighbor_circuit_boundaries():
    p, tau, n, rho = 8191, 4, 16, 16
    circ = build_neighbor_circuit(p, tau, n, rho=rho)
    base = dict(gamma_ne=1, delta_ne=0, gamma_nw=1, delta_nw=0,
                k_ne0=5, k_ne1=6, k_nw0=7, k_nw1=8, s=0, t=3)
    lim = 1 << tau
    for w_ne in (0, 1, lim, lim + 1, p - lim, p - lim - 1, p - 1):
        for w_nw in (0, lim, p - lim):
            case = dict(base, z_ne=w_ne, z_nw=w_nw)
            want = plain_neighbor_eval(p, tau, **case)
            assert _as_tuple(eval_plain(circ, case)) == want
    # same source and target is never answered
    case = dict(base, z_ne=1, z_nw=1, s=3)
    assert _as_tuple(eval_plain(circ, case)) == (0, 0, 0, 0, 0)


def test_neighbor_circuit_size_budget():
    circ = build_neighbor_circuit(2**61 - 1, 20, 400, rho=128)
    assert circ.n_and < 50_000


def test_neighbor_circuit_rejects_bad_params():
    with pytest.raises(ValueError):
        build_neighbor_circuit(2**61 - 2, 20, 10)
    with pytest.raises(ValueError):
        build_neighbor_circuit(31, 4, 10)
    with pytest.raises(ValueError):
        build_neighbor_circuit(31, 0, 10)
