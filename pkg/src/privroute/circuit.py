"""Boolean circuits over XOR/AND with a gadget library sized for garbling.

Circuits are built once and garbled many times, so construction favors low
AND-depth (carry-save trees, parallel-prefix adders) over minimum gate
count: the garbler batches each depth level through vectorized hashing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

OP_XOR = 0
OP_AND = 1


@dataclass
class LevelPlan:
    """Per-depth gate batches as numpy index arrays, reused across garblings."""

    xor_levels: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    and_levels: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    order: list[tuple[int, int]]  # interleaving: (0, xor_level_i) / (1, and_level_i)
    n_and: int


@dataclass
class Circuit:
    n_wires: int
    inputs: dict[str, list[int]]
    outputs: dict[str, list[int]]
    ops: np.ndarray   # u8 per gate
    gate_a: np.ndarray
    gate_b: np.ndarray
    gate_out: np.ndarray
    _plan: Optional[LevelPlan] = field(default=None, repr=False)

    @property
    def n_gates(self) -> int:
        return len(self.ops)

    @property
    def n_and(self) -> int:
        return int((self.ops == OP_AND).sum())

    def input_order(self) -> list[str]:
        return list(self.inputs)

    def plan(self) -> LevelPlan:
        if self._plan is not None:
            return self._plan
        level = np.zeros(self.n_wires, dtype=np.int32)
        glevel = np.empty(self.n_gates, dtype=np.int32)
        ops, a, b, out = self.ops, self.gate_a, self.gate_b, self.gate_out
        for i in range(self.n_gates):
            lv = max(level[a[i]], level[b[i]]) + 1
            glevel[i] = lv
            level[out[i]] = lv
        xor_levels, and_levels, order = [], [], []
        and_seen = 0
        for lv in range(1, int(glevel.max(initial=0)) + 1):
            sel = glevel == lv
            for op in (OP_XOR, OP_AND):
                idx = np.nonzero(sel & (ops == op))[0]
                if idx.size == 0:
                    continue
                if op == OP_XOR:
                    order.append((0, len(xor_levels)))
                    xor_levels.append((a[idx], b[idx], out[idx]))
                else:
                    order.append((1, len(and_levels)))
                    ordinal = np.arange(and_seen, and_seen + idx.size, dtype=np.int64)
                    and_seen += idx.size
                    and_levels.append((a[idx], b[idx], out[idx], ordinal))
        # AND ordinals must follow gate order for deterministic table layout
        self._plan = LevelPlan(xor_levels, and_levels, order, and_seen)
        return self._plan


class CircuitBuilder:
    def __init__(self):
        self.n_wires = 0
        self.inputs: dict[str, list[int]] = {}
        self.outputs: dict[str, list[int]] = {}
        self.ops: list[int] = []
        self.ga: list[int] = []
        self.gb: list[int] = []
        self.gout: list[int] = []
        self._one: Optional[int] = None
        self._zero: Optional[int] = None

    def _wire(self) -> int:
        w = self.n_wires
        self.n_wires += 1
        return w

    def add_inputs(self, name: str, width: int) -> list[int]:
        if name in self.inputs:
            raise ValueError(f"duplicate input group {name!r}")
        ws = [self._wire() for _ in range(width)]
        self.inputs[name] = ws
        return ws

    def one(self) -> int:
        """Constant-true wire, realized as a one-bit input the garbler fixes."""
        if self._one is None:
            self._one = self.add_inputs("const_one", 1)[0]
        return self._one

    def zero(self) -> int:
        if self._zero is None:
            self._zero = self.xor(self.one(), self.one())
        return self._zero

    def _gate(self, op: int, a: int, b: int) -> int:
        out = self._wire()
        self.ops.append(op)
        self.ga.append(a)
        self.gb.append(b)
        self.gout.append(out)
        return out

    def xor(self, a: int, b: int) -> int:
        return self._gate(OP_XOR, a, b)

    def and_(self, a: int, b: int) -> int:
        return self._gate(OP_AND, a, b)

    def not_(self, a: int) -> int:
        return self.xor(a, self.one())

    def or_(self, a: int, b: int) -> int:
        return self.xor(self.xor(a, b), self.and_(a, b))

    def mux(self, sel: int, a: int, b: int) -> int:
        """sel ? a : b"""
        return self.xor(b, self.and_(sel, self.xor(a, b)))

    def mark_output(self, name: str, wires: Sequence[int]):
        if name in self.outputs:
            raise ValueError(f"duplicate output group {name!r}")
        self.outputs[name] = list(wires)

    def build(self) -> Circuit:
        return Circuit(
            self.n_wires,
            dict(self.inputs),
            dict(self.outputs),
            np.array(self.ops, dtype=np.uint8),
            np.array(self.ga, dtype=np.int32),
            np.array(self.gb, dtype=np.int32),
            np.array(self.gout, dtype=np.int32),
        )

    # -- word-level gadgets (bit lists are LSB first) --

    def and_tree(self, bits: Sequence[int]) -> int:
        bits = list(bits)
        if not bits:
            return self.one()
        while len(bits) > 1:
            nxt = [self.and_(bits[i], bits[i + 1]) for i in range(0, len(bits) - 1, 2)]
            if len(bits) % 2:
                nxt.append(bits[-1])
            bits = nxt
        return bits[0]

    def or_tree(self, bits: Sequence[int]) -> int:
        bits = list(bits)
        if not bits:
            return self.zero()
        while len(bits) > 1:
            nxt = [self.or_(bits[i], bits[i + 1]) for i in range(0, len(bits) - 1, 2)]
            if len(bits) % 2:
                nxt.append(bits[-1])
            bits = nxt
        return bits[0]

    def full_adder(self, a: int, b: int, c: int) -> tuple[int, int]:
        """(sum, carry): carry as majority with a single AND."""
        axc = self.xor(a, c)
        bxc = self.xor(b, c)
        return self.xor(axc, b), self.xor(self.and_(axc, bxc), c)

    def _prefix_carries(self, g: list[int], p: list[int], cin: Optional[int]) -> list[int]:
        """Sklansky prefix: carries into positions 1..n (and out of n)."""
        n = len(g)
        G, P = list(g), list(p)
        dist = 1
        while dist < n:
            for i in range(n):
                if (i // dist) % 2 == 1:
                    j = (i // (2 * dist)) * 2 * dist + dist - 1
                    G[i] = self.xor(G[i], self.and_(P[i], G[j]))
                    P[i] = self.and_(P[i], P[j])
            dist *= 2
        if cin is None:
            return G
        return [self.xor(G[i], self.and_(P[i], cin)) for i in range(n)]

    def add(self, a: Sequence[int], b: Sequence[int], cin: Optional[int] = None) -> tuple[list[int], int]:
        """Parallel-prefix addition of equal-width words: (sum bits, carry out)."""
        if len(a) != len(b):
            raise ValueError("width mismatch")
        p = [self.xor(x, y) for x, y in zip(a, b)]
        g = [self.and_(x, y) for x, y in zip(a, b)]
        carries = self._prefix_carries(g, p, cin)
        first = p[0] if cin is None else self.xor(p[0], cin)
        sums = [first] + [self.xor(p[i], carries[i - 1]) for i in range(1, len(a))]
        return sums, carries[-1]

    def increment_if(self, a: Sequence[int], c: int) -> tuple[list[int], int]:
        """a + c for a single carry bit c: (sum bits, carry out)."""
        n = len(a)
        # prefix-AND of the low bits gates the carry ripple
        pre = list(a)
        for step in [1 << k for k in range(max(n - 1, 1).bit_length())]:
            nxt = list(pre)
            for i in range(step, len(pre)):
                nxt[i] = self.and_(pre[i], pre[i - step])
            pre = nxt
        carries = [self.and_(c, pre[i]) for i in range(n)]
        sums = [self.xor(a[0], c)] + [self.xor(a[i], carries[i - 1]) for i in range(1, n)]
        return sums, carries[-1]

    def csa_multiply(self, x: Sequence[int], y: Sequence[int]) -> list[int]:
        """Schoolbook partial products reduced by a carry-save tree, then one
        carry-propagate add; |x|+|y| output bits."""
        nx, ny = len(x), len(y)
        cols: list[list[int]] = [[] for _ in range(nx + ny)]
        for i in range(ny):
            for j in range(nx):
                cols[i + j].append(self.and_(x[j], y[i]))
        while max(len(c) for c in cols) > 2:
            ncols: list[list[int]] = [[] for _ in range(nx + ny)]
            for pos, col in enumerate(cols):
                i = 0
                while len(col) - i >= 3:
                    s, c = self.full_adder(col[i], col[i + 1], col[i + 2])
                    ncols[pos].append(s)
                    ncols[pos + 1].append(c)
                    i += 3
                ncols[pos].extend(col[i:])
            cols = ncols
        z = self.zero()
        a = [col[0] if len(col) > 0 else z for col in cols]
        b = [col[1] if len(col) > 1 else z for col in cols]
        sums, _ = self.add(a, b)
        return sums

    def reduce_mersenne(self, bits: Sequence[int], e: int) -> list[int]:
        """Fold a (up to 2e)-bit value into [0, 2^e - 1) for p = 2^e - 1."""
        lo = list(bits[:e])
        hi = list(bits[e:2 * e])
        z = self.zero()
        hi += [z] * (e - len(hi))
        s, c = self.add(lo, hi)
        s, c2 = self.increment_if(s, c)
        s, _ = self.increment_if(s, c2)
        # value may equal p (all ones); p is congruent to zero
        eq_p = self.and_tree(s)
        return [self.xor(bit, eq_p) for bit in s]

    def add_mod_mersenne(self, a: Sequence[int], b: Sequence[int], e: int) -> list[int]:
        s, c = self.add(list(a), list(b))
        s, c2 = self.increment_if(s, c)
        s, _ = self.increment_if(s, c2)
        eq_p = self.and_tree(s)
        return [self.xor(bit, eq_p) for bit in s]

    def mul_mod_mersenne(self, a: Sequence[int], b: Sequence[int], e: int) -> list[int]:
        return self.reduce_mersenne(self.csa_multiply(a, b), e)

    def eq_words(self, a: Sequence[int], b: Sequence[int]) -> int:
        return self.and_tree([self.not_(self.xor(x, y)) for x, y in zip(a, b)])

    def select_word(self, sel: int, ones: Sequence[int], zeros: Sequence[int]) -> list[int]:
        return [self.mux(sel, o, z) for o, z in zip(ones, zeros)]

    def gate_word(self, sel: int, word: Sequence[int]) -> list[int]:
        return [self.and_(sel, w) for w in word]


def eval_plain(circuit: Circuit, values: dict[str, int]) -> dict[str, int]:
    """Gate-by-gate boolean evaluation; input/output groups as packed ints
    (LSB first)."""
    v = np.zeros(circuit.n_wires, dtype=bool)
    for name, wires in circuit.inputs.items():
        if name == "const_one":
            v[wires[0]] = True
            continue
        if name not in values:
            raise ValueError(f"missing input group {name!r}")
        x = values[name]
        for i, w in enumerate(wires):
            v[w] = (x >> i) & 1
    plan = circuit.plan()
    for kind, i in plan.order:
        if kind == 0:
            a, b, out = plan.xor_levels[i]
            v[out] = v[a] ^ v[b]
        else:
            a, b, out, _ = plan.and_levels[i]
            v[out] = v[a] & v[b]
    res = {}
    for name, wires in circuit.outputs.items():
        res[name] = sum(int(v[w]) << i for i, w in enumerate(wires))
    return res


# -- the neighbor-decision circuit --

BOT = None  # sentinel for refuse-to-answer in plain evaluations


def build_neighbor_circuit(p: int, tau: int, n: int, rho: int = 128) -> Circuit:
    """Decision circuit evaluated under garbling each round.

    Inputs: blinded products z per axis, unblinding coefficients gamma/delta,
    both PRF keys per axis, and the source/target node indices.  Outputs a
    validity bit, the two direction bits, and the PRF key selected by each
    direction bit; everything is forced to zero when invalid.
    """
    e = p.bit_length()
    if p != 2**e - 1:
        raise ValueError("modulus must be a Mersenne prime")
    if not 0 < tau < e - 1:
        raise ValueError(f"tau={tau} out of range for 2^{e}-1")
    m = max((n - 1).bit_length(), 1)
    b = CircuitBuilder()
    z_ne = b.add_inputs("z_ne", e)
    z_nw = b.add_inputs("z_nw", e)
    gamma_ne = b.add_inputs("gamma_ne", e)
    delta_ne = b.add_inputs("delta_ne", e)
    gamma_nw = b.add_inputs("gamma_nw", e)
    delta_nw = b.add_inputs("delta_nw", e)
    k_ne0 = b.add_inputs("k_ne0", rho)
    k_ne1 = b.add_inputs("k_ne1", rho)
    k_nw0 = b.add_inputs("k_nw0", rho)
    k_nw1 = b.add_inputs("k_nw1", rho)
    s_in = b.add_inputs("s", m)
    t_in = b.add_inputs("t", m)

    def axis(z, gamma, delta):
        w = b.add_mod_mersenne(b.mul_mod_mersenne(gamma, z, e), delta, e)
        # centered value in (-p/2, p/2): the top bit decides the sign
        low_or = b.or_tree(w[: e - 1])
        pos = b.and_(b.not_(w[e - 1]), low_or)
        # closed interval [-2^tau, 2^tau]: either w <= 2^tau, or w >= p - 2^tau
        hi_zero = b.not_(b.or_tree(w[tau + 1:]))
        small = b.and_(hi_zero, b.not_(b.and_(w[tau], b.or_tree(w[:tau]))))
        hi_ones = b.and_tree(w[tau + 1:])
        big = b.and_(hi_ones, b.or_(w[tau], b.and_tree(w[:tau])))
        ok = b.xor(small, big)  # the two ranges are disjoint
        return pos, ok

    pos_ne, ok_ne = axis(z_ne, gamma_ne, delta_ne)
    pos_nw, ok_nw = axis(z_nw, gamma_nw, delta_nw)
    same = b.eq_words(s_in, t_in)
    valid = b.and_(b.not_(same), b.and_(ok_ne, ok_nw))

    b_ne = b.and_(valid, pos_ne)
    b_nw = b.and_(valid, pos_nw)
    k_ne = b.gate_word(valid, b.select_word(pos_ne, k_ne1, k_ne0))
    k_nw = b.gate_word(valid, b.select_word(pos_nw, k_nw1, k_nw0))

    b.mark_output("valid", [valid])
    b.mark_output("b_ne", [b_ne])
    b.mark_output("b_nw", [b_nw])
    b.mark_output("k_out_ne", k_ne)
    b.mark_output("k_out_nw", k_nw)
    return b.build()


def plain_neighbor_eval(
    p: int,
    tau: int,
    z_ne: int,
    z_nw: int,
    gamma_ne: int,
    delta_ne: int,
    gamma_nw: int,
    delta_nw: int,
    k_ne0: int,
    k_ne1: int,
    k_nw0: int,
    k_nw1: int,
    s: int,
    t: int,
):
    """Reference semantics of the decision circuit, in plain integers.

    Returns (valid, b_ne, b_nw, k_ne, k_nw); invalid results are all zero.
    """
    if s == t:
        return (0, 0, 0, 0, 0)
    half = (p - 1) // 2
    out_bits = []
    for z, gamma, delta in ((z_ne, gamma_ne, delta_ne), (z_nw, gamma_nw, delta_nw)):
        w = (gamma * z + delta) % p
        c = w if w <= half else w - p
        if not (-(1 << tau) <= c <= (1 << tau)):
            return (0, 0, 0, 0, 0)
        out_bits.append(1 if c > 0 else 0)
    b_ne, b_nw = out_bits
    return (1, b_ne, b_nw, k_ne1 if b_ne else k_ne0, k_nw1 if b_nw else k_nw0)
