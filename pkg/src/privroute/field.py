"""Arithmetic over Mersenne-prime fields and masked affine vector encodings.

The protocol works over F_p with p = 2^61 - 1.  Smaller Mersenne primes
(8191, 31) are supported so that statistical properties can be measured
exhaustively; they are refused by the protocol layer unless explicitly
allowed for tests.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

# Mersenne primes 2^e - 1 for the supported exponents.  31 and 8191 are the
# toy sizes; 2^31 - 1 is a reduced size used to keep long test runs cheap;
# 2^61 - 1 is the production default.
MERSENNE_EXPONENTS = (5, 13, 31, 61)
DEFAULT_PRIME = 2**61 - 1
TOY_PRIMES = (31, 8191)
REDUCED_PRIMES = (31, 8191, 2**31 - 1)


class PrimeField:
    """F_p for a Mersenne prime p = 2^e - 1, elements as plain ints in [0, p)."""

    __slots__ = ("p", "exponent", "half")

    def __init__(self, p: int = DEFAULT_PRIME):
        exponent = p.bit_length()
        if p != 2**exponent - 1 or exponent not in MERSENNE_EXPONENTS:
            raise ValueError(f"unsupported field modulus {p}")
        self.p = p
        self.exponent = exponent
        self.half = (p - 1) // 2

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("PrimeField", self.p))

    def __repr__(self):
        return f"PrimeField(2^{self.exponent}-1)"

    def reduce(self, x: int) -> int:
        """Reduce a non-negative int: fold high bits down, 2^e == 1 (mod p)."""
        p, e = self.p, self.exponent
        while x > p:
            x = (x >> e) + (x & p)
        return 0 if x == p else x

    def element(self, x: int) -> int:
        """Embed an arbitrary (possibly negative) int."""
        return x % self.p

    def add(self, a: int, b: int) -> int:
        s = a + b
        return s - self.p if s >= self.p else s

    def sub(self, a: int, b: int) -> int:
        s = a - b
        return s + self.p if s < 0 else s

    def neg(self, a: int) -> int:
        return 0 if a == 0 else self.p - a

    def mul(self, a: int, b: int) -> int:
        return self.reduce(a * b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, self.p - 2, self.p)

    def centered(self, a: int) -> int:
        """Representative in (-p/2, p/2)."""
        return a if a <= self.half else a - self.p

    def rand(self, rng) -> int:
        return rng.randrange(self.p)

    def rand_nonzero(self, rng) -> int:
        return rng.randrange(1, self.p)


def serialize_elements(values: Sequence[int]) -> bytes:
    return struct.pack(f"<{len(values)}Q", *values)


def deserialize_elements(data: bytes, count: int) -> tuple[int, ...]:
    return struct.unpack_from(f"<{count}Q", data)


@dataclass(frozen=True)
class BlindingSet:
    """Multiplicative/additive blinding (alpha, beta) with its inverse pair.

    gamma*(alpha*z + beta) + delta == z for every z, so one side can blind a
    value and the other side's circuit can strip the blinding.
    """

    alpha: int
    beta: int
    gamma: int
    delta: int

    @classmethod
    def sample(cls, field: PrimeField, rng) -> "BlindingSet":
        alpha = field.rand_nonzero(rng)
        beta = field.rand(rng)
        gamma = field.inv(alpha)
        delta = field.neg(field.mul(gamma, beta))
        return cls(alpha, beta, gamma, delta)

    def blind(self, field: PrimeField, z: int) -> int:
        return field.add(field.mul(self.alpha, z), self.beta)

    def unblind(self, field: PrimeField, w: int) -> int:
        return field.add(field.mul(self.gamma, w), self.delta)


@dataclass(frozen=True)
class RoundMasks:
    """Per-round masking vectors shared by all source/destination encodings."""

    r1: tuple[int, ...]
    r2: tuple[int, ...]
    r3: tuple[int, ...]

    @classmethod
    def sample(cls, field: PrimeField, d: int, rng) -> "RoundMasks":
        return cls(
            tuple(field.rand(rng) for _ in range(d)),
            tuple(field.rand(rng) for _ in range(d)),
            tuple(field.rand(rng) for _ in range(d)),
        )


def encode_source(
    field: PrimeField,
    x: Sequence[int],
    consts: Sequence[int],
    masks: RoundMasks,
) -> tuple[tuple[int, int], ...]:
    """Per coordinate i: (x_i - r1_i,  x_i*r2_i + z_i + r3_i)."""
    out = []
    for xi, zi, r1, r2, r3 in zip(x, consts, masks.r1, masks.r2, masks.r3):
        out.append((field.sub(xi, r1), field.add(field.add(field.mul(xi, r2), zi), r3)))
    return tuple(out)


def encode_dest(
    field: PrimeField,
    y: Sequence[int],
    masks: RoundMasks,
) -> tuple[tuple[int, int], ...]:
    """Per coordinate i: (y_i - r2_i,  y_i*r1_i - r1_i*r2_i - r3_i)."""
    out = []
    for yi, r1, r2, r3 in zip(y, masks.r1, masks.r2, masks.r3):
        second = field.sub(field.sub(field.mul(yi, r1), field.mul(r1, r2)), r3)
        out.append((field.sub(yi, r2), second))
    return tuple(out)


def eval_encoded(
    field: PrimeField,
    src: Sequence[tuple[int, int]],
    dst: Sequence[tuple[int, int]],
) -> int:
    """Sum of src1*dst1 + src2 + dst2 over coordinates: <x, y> + sum(consts)."""
    if len(src) != len(dst):
        raise ValueError("encoding length mismatch")
    acc = 0
    for (s1, s2), (d1, d2) in zip(src, dst):
        acc = field.add(acc, field.add(field.mul(s1, d1), field.add(s2, d2)))
    return acc


def blinded_inner_consts(field: PrimeField, blind: BlindingSet, d: int) -> tuple[int, ...]:
    """Constants routing beta into coordinate 0 so eval gives alpha*<x,y> + beta."""
    return (blind.beta,) + (0,) * (d - 1)


def scale_vector(field: PrimeField, vec: Sequence[int], alpha: int) -> tuple[int, ...]:
    return tuple(field.mul(field.element(v), alpha) for v in vec)


def embed_vector(field: PrimeField, vec: Sequence[int]) -> tuple[int, ...]:
    return tuple(field.element(v) for v in vec)


def in_release_interval(field: PrimeField, w: int, tau: int) -> bool:
    """Whether the centered value lies in the closed interval [-2^tau, 2^tau]."""
    c = field.centered(w)
    return -(1 << tau) <= c <= (1 << tau)
