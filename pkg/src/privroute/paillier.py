"""Additively homomorphic encryption with CRT-accelerated private operations.

The generator is fixed to n+1, which makes encryption a single modular
exponentiation and gives the decryption helper constants a closed form.
Key sizes are the modulus bit length.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field

import gmpy2

KEY_BITS = (512, 1024, 2048)


@dataclass(frozen=True)
class PublicKey:
    n: int
    bits: int
    n_sq: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_sq", self.n * self.n)

    @property
    def ct_len(self) -> int:
        """Serialized ciphertext length in bytes."""
        return self.bits // 4

    def encrypt_with_r(self, m: int, r: int) -> int:
        """Textbook encryption, no secret-key speedups."""
        if not 0 <= m < self.n:
            raise ValueError("plaintext out of range")
        return int((1 + m * self.n) * gmpy2.powmod(r, self.n, self.n_sq) % self.n_sq)

    def add(self, c1: int, c2: int) -> int:
        return c1 * c2 % self.n_sq

    def rand_r(self) -> int:
        while True:
            r = secrets.randbelow(self.n)
            if r > 1 and gmpy2.gcd(r, self.n) == 1:
                return int(r)


@dataclass
class SecretKey:
    public: PublicKey
    p: int
    q: int

    def __post_init__(self):
        p, q, n = self.p, self.q, self.public.n
        if p * q != n:
            raise ValueError("factors do not match the modulus")
        self._p_sq = p * p
        self._q_sq = q * q
        # with g = n+1, g^(p-1) mod p^2 = 1 + (p-1)n, so the decryption
        # constant reduces to the inverse of -q modulo p
        self._hp = int(gmpy2.invert(-q % p, p))
        self._hq = int(gmpy2.invert(-p % q, q))
        self._q_inv_p = int(gmpy2.invert(q % p, p))
        self._qsq_inv_psq = int(gmpy2.invert(self._q_sq % self._p_sq, self._p_sq))

    def _crt(self, mp: int, mq: int) -> int:
        p, q = self.p, self.q
        u = (mp - mq) * self._q_inv_p % p
        return (mq + u * q) % self.public.n

    def encrypt(self, m: int, r: int | None = None) -> int:
        """Same function as the public path but with the exponentiation split
        over the two prime-square moduli."""
        n, n_sq = self.public.n, self.public.n_sq
        if not 0 <= m < n:
            raise ValueError("plaintext out of range")
        if r is None:
            r = self.public.rand_r()
        rp = gmpy2.powmod(r, n, self._p_sq)
        rq = gmpy2.powmod(r, n, self._q_sq)
        u = (rp - rq) * self._qsq_inv_psq % self._p_sq
        rn = (rq + u * self._q_sq) % n_sq
        return int((1 + m * n) * rn % n_sq)

    def decrypt(self, c: int) -> int:
        p, q = self.p, self.q
        if not 0 < c < self.public.n_sq:
            raise ValueError("ciphertext out of range")
        cp = gmpy2.powmod(c, p - 1, self._p_sq)
        cq = gmpy2.powmod(c, q - 1, self._q_sq)
        mp = (cp - 1) // p * self._hp % p
        mq = (cq - 1) // q * self._hq % q
        return self._crt(mp, mq)


def _random_prime(bits: int) -> int:
    # top two bits forced so the product of two such primes has full length
    while True:
        cand = secrets.randbits(bits) | (0b11 << (bits - 2)) | 1
        p = int(gmpy2.next_prime(cand))
        if p.bit_length() == bits:
            return p


def keygen(bits: int = 512) -> SecretKey:
    if bits not in KEY_BITS:
        raise ValueError(f"key size must be one of {KEY_BITS}")
    half = bits // 2
    p = _random_prime(half)
    while True:
        q = _random_prime(half)
        if q != p:
            break
    n = p * q
    assert n.bit_length() == bits
    return SecretKey(PublicKey(n, bits), p, q)
