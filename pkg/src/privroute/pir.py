"""Private retrieval of one record from a public database.

Records live in a cube of side ceil(n^(1/3)).  The query is three encrypted
indicator vectors, one per axis; the server folds the cube one axis at a
time, re-chunking the concatenated intermediate ciphertexts between folds.
Communication therefore scales with the cube side, not with n.

All ciphertexts are serialized at fixed width so message sizes depend only
on the database geometry, never on the values involved.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import gmpy2

from .paillier import PublicKey, SecretKey


@dataclass(frozen=True)
class Geometry:
    n: int
    record_len: int
    bits: int
    dim: int
    chunk: int
    ct_len: int
    k_levels: tuple[int, int, int]

    @property
    def query_cts(self) -> int:
        return 3 * self.dim

    @property
    def response_cts(self) -> int:
        return self.k_levels[2]


def plan_geometry(n: int, record_len: int, bits: int) -> Geometry:
    if n < 1:
        raise ValueError("empty database")
    if record_len < 1:
        raise ValueError("empty records")
    dim = 1
    while dim * dim * dim < n:
        dim += 1
    chunk = (bits - 64) // 8
    ct_len = bits // 4
    k1 = -(-record_len // chunk)
    k2 = -(-(k1 * ct_len) // chunk)
    k3 = -(-(k2 * ct_len) // chunk)
    return Geometry(n, record_len, bits, dim, chunk, ct_len, (k1, k2, k3))


def unrank(geom: Geometry, index: int) -> tuple[int, int, int]:
    if not 0 <= index < geom.n:
        raise ValueError("index out of range")
    d = geom.dim
    return index // (d * d), index // d % d, index % d


def make_query(geom: Geometry, key: SecretKey | PublicKey, index: int) -> list[int]:
    """Three concatenated indicator vectors; a secret key speeds this up but
    any holder of the public key can form a (useless to them) query."""
    coords = unrank(geom, index)
    pub = key.public if isinstance(key, SecretKey) else key
    enc = key.encrypt if isinstance(key, SecretKey) else (
        lambda m: pub.encrypt_with_r(m, pub.rand_r())
    )
    cts = []
    for axis in range(3):
        for j in range(geom.dim):
            cts.append(enc(1 if j == coords[axis] else 0))
    return cts


def _byte_tables(bases: list[int], n_sq):
    tabs = []
    for b in bases:
        t = [gmpy2.mpz(1), gmpy2.mpz(b)]
        for _ in range(254):
            t.append(t[-1] * b % n_sq)
        tabs.append(t)
    return tabs


def _fold_axis(bases: list[int], groups: list[list[int]], n_sq, exp_bits: int):
    """For each group of per-base exponents, compute prod base_i^exp_i.

    Byte-windowed multi-exponentiation: one shared squaring chain per group,
    window digits read straight out of the exponent bytes, and per-base
    power tables built once for the whole axis.
    """
    tabs = _byte_tables(bases, n_sq)
    nwin = -(-exp_bits // 8)
    one = gmpy2.mpz(1)
    out = []
    rng = range(len(bases))
    for exps in groups:
        digs = [e.to_bytes(nwin, "big") for e in exps]
        acc = one
        for win in range(nwin):
            if acc is not one:
                for _ in range(8):
                    acc = acc * acc % n_sq
            for bi in rng:
                d = digs[bi][win]
                if d:
                    t = tabs[bi][d]
                    acc = t if acc is one else acc * t % n_sq
        out.append(int(acc))
    return out


def _chunks(blob: bytes, chunk: int, count: int) -> list[int]:
    # right-pad so a partial final chunk stays left-aligned in its window,
    # letting the decoder rebuild the byte stream with fixed-width to_bytes
    blob = blob.ljust(count * chunk, b"\x00")
    return [int.from_bytes(blob[i * chunk:(i + 1) * chunk], "big") for i in range(count)]


def _ct_blob(cts: list[int], ct_len: int) -> bytes:
    return b"".join(int(c).to_bytes(ct_len, "big") for c in cts)


def respond(geom: Geometry, pub: PublicKey, query: list[int], records: list[bytes]) -> list[int]:
    if len(query) != geom.query_cts:
        raise ValueError("query has wrong shape")
    if len(records) > geom.n:
        raise ValueError("too many records")
    for r in records:
        if len(r) != geom.record_len:
            raise ValueError("records must be padded to equal length")
    d = geom.dim
    k1, k2, k3 = geom.k_levels
    n_sq = gmpy2.mpz(pub.n_sq)
    exp_bits = geom.chunk * 8
    v1, v2, v3 = query[:d], query[d:2 * d], query[2 * d:]

    cube = records + [b""] * (d * d * d - len(records))
    cells = [_chunks(r, geom.chunk, k1) for r in cube]
    groups = [
        [cells[(i1 * d + i2) * d + i3][j] for i1 in range(d)]
        for i2 in range(d) for i3 in range(d) for j in range(k1)
    ]
    level1 = _fold_axis(v1, groups, n_sq, exp_bits)

    cells = [
        _chunks(_ct_blob(level1[c * k1:(c + 1) * k1], geom.ct_len), geom.chunk, k2)
        for c in range(d * d)
    ]
    groups = [
        [cells[i2 * d + i3][j] for i2 in range(d)]
        for i3 in range(d) for j in range(k2)
    ]
    level2 = _fold_axis(v2, groups, n_sq, exp_bits)

    cells = [
        _chunks(_ct_blob(level2[c * k2:(c + 1) * k2], geom.ct_len), geom.chunk, k3)
        for c in range(d)
    ]
    groups = [[cells[i3][j] for i3 in range(d)] for j in range(k3)]
    return _fold_axis(v3, groups, n_sq, exp_bits)


def decode(geom: Geometry, sk: SecretKey, response: list[int]) -> bytes:
    k1, k2, k3 = geom.k_levels
    if len(response) != k3:
        raise ValueError("response has wrong shape")
    blob = b"".join(sk.decrypt(c).to_bytes(geom.chunk, "big") for c in response)
    cts = _chunks(blob[:k2 * geom.ct_len], geom.ct_len, k2)
    blob = b"".join(sk.decrypt(c).to_bytes(geom.chunk, "big") for c in cts)
    cts = _chunks(blob[:k1 * geom.ct_len], geom.ct_len, k1)
    blob = b"".join(sk.decrypt(c).to_bytes(geom.chunk, "big") for c in cts)
    return blob[:geom.record_len]


def serialize_cts(cts: list[int], ct_len: int) -> bytes:
    """Fixed-width elements: lengths are geometry-determined, value-free."""
    out = bytearray(struct.pack("<I", len(cts)))
    for c in cts:
        out += struct.pack("<I", ct_len)
        out += int(c).to_bytes(ct_len, "big")
    return bytes(out)


def parse_cts(blob: bytes, ct_len: int) -> list[int]:
    if len(blob) < 4:
        raise ValueError("truncated ciphertext list")
    (count,) = struct.unpack_from("<I", blob, 0)
    off = 4
    cts = []
    for _ in range(count):
        if off + 4 > len(blob):
            raise ValueError("truncated ciphertext list")
        (ln,) = struct.unpack_from("<I", blob, off)
        off += 4
        if ln != ct_len or off + ln > len(blob):
            raise ValueError("bad ciphertext length")
        cts.append(int.from_bytes(blob[off:off + ln], "big"))
        off += ln
    if off != len(blob):
        raise ValueError("trailing bytes after ciphertext list")
    return cts
