"""Oblivious transfer built on the prime-order group.

Two shapes, both a single round trip:

- one-of-n: used once per session to hand the client exactly one of the
  per-node key records.
- batched one-of-two: used every round to deliver garbled input encodings
  for client-chosen bits.

The receiver commits to its choice as U = g^k * C^choice against a
nothing-up-my-sleeve point C derived from the session context, and proves
knowledge of the opening (a batch uses one aggregated proof).  The sender
rerandomizes with r: the receiver can compute A^k = (U/C^choice)^r only
for its committed choice; every other record key would require C^r, which
is never revealed.  Record blobs are sealed so a wrong key is detected
rather than yielding garbage.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from . import group
from .symcrypt import AuthError, kdf, open_sealed, seal, sealed_len

_NUMS = b"privroute/ot/nums/v1"
_CHAL = b"privroute/ot/chal/v1"
_KEY = b"privroute/ot/key/v1"
_AGG = b"privroute/ot/agg/v1"


class OtError(Exception):
    """Malformed or unverifiable transfer message."""


def _nums_point(context: bytes) -> bytes:
    return group.hash_to_point(_NUMS + b"|" + context)


def _chal(*parts: bytes) -> int:
    buf = bytearray(_CHAL)
    for p in parts:
        buf += struct.pack("<I", len(p))
        buf += p
    return group.hash_scalar(bytes(buf))


def _scalar_bytes(z: int) -> bytes:
    return (z % group.ORDER).to_bytes(32, "little")


def _rec_key(context: bytes, a: bytes, w: bytes, index: int) -> bytes:
    return kdf(_KEY, context, a, w, struct.pack("<I", index))


def _agg_coeffs(context: bytes, points: list[bytes]) -> list[int]:
    seed = kdf(_AGG, context, b"".join(points))
    return [group.hash_scalar(seed + struct.pack("<I", i)) for i in range(len(points))]


# -- one-of-n --


@dataclass
class Ot1Receiver:
    n: int
    choice: int
    k: int
    context: bytes
    u: bytes


def ot1_request(n: int, choice: int, context: bytes) -> tuple[Ot1Receiver, bytes]:
    if not 0 <= choice < n:
        raise ValueError("choice out of range")
    c = _nums_point(context)
    k = group.rand_scalar()
    u = group.base_mult(k)
    if choice:
        u = group.add(u, group.mult(choice, c))
    # knowledge of (k, choice) with U = g^k C^choice
    a, b = group.rand_scalar(), group.rand_scalar()
    t = group.add(group.base_mult(a), group.mult(b, c))
    e = _chal(context, c, u, t)
    z1 = (a + e * k) % group.ORDER
    z2 = (b + e * choice) % group.ORDER
    req = u + t + _scalar_bytes(z1) + _scalar_bytes(z2)
    return Ot1Receiver(n, choice, k, context, u), req


def _verify_opening(context: bytes, c: bytes, u: bytes, t: bytes, z1: int, z2: int) -> bool:
    e = _chal(context, c, u, t)
    try:
        lhs = group.base_mult(z1)
        if z2:
            lhs = group.add(lhs, group.mult(z2, c))
        rhs = group.add(t, group.mult(e, u))
    except group.GroupError:
        return False
    return lhs == rhs


def ot1_respond(records: list[bytes], request: bytes, context: bytes) -> bytes:
    if len(request) != 128:
        raise OtError("bad request size")
    if len({len(r) for r in records}) != 1:
        raise ValueError("records must have equal length")
    u, t = request[:32], request[32:64]
    z1 = int.from_bytes(request[64:96], "little")
    z2 = int.from_bytes(request[96:128], "little")
    c = _nums_point(context)
    if not (group.is_valid(u) and group.is_valid(t)):
        raise OtError("invalid request point")
    if not _verify_opening(context, c, u, t, z1, z2):
        raise OtError("request proof rejected")
    r = group.rand_scalar()
    a = group.base_mult(r)
    try:
        w = group.mult(r, u)
    except group.GroupError as exc:
        raise OtError("degenerate request point") from exc
    step = group.mult(group.ORDER - r, c)
    blobs = []
    for j, rec in enumerate(records):
        if j:
            w = group.add(w, step)
        blobs.append(seal(_rec_key(context, a, w, j), rec))
    return a + struct.pack("<I", len(blobs[0])) + b"".join(blobs)


def ot1_receive(state: Ot1Receiver, response: bytes) -> bytes:
    if len(response) < 36:
        raise OtError("short response")
    a = response[:32]
    (blob_len,) = struct.unpack_from("<I", response, 32)
    body = response[36:]
    if len(body) != state.n * blob_len:
        raise OtError("bad response shape")
    try:
        w = group.mult(state.k, a)
    except group.GroupError as exc:
        raise OtError("degenerate response point") from exc
    blob = body[state.choice * blob_len:(state.choice + 1) * blob_len]
    try:
        return open_sealed(_rec_key(state.context, a, w, state.choice), blob)
    except AuthError as exc:
        raise OtError("record failed authentication") from exc


# -- batched one-of-two --


@dataclass
class Ot2Receiver:
    bits: list[int]
    ks: list[int]
    context: bytes
    points: list[bytes]


def ot2_request(bits: list[int], context: bytes) -> tuple[Ot2Receiver, bytes]:
    if not bits or any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be a nonempty 0/1 list")
    c = _nums_point(context)
    ks, points = [], []
    for b in bits:
        k = group.rand_scalar()
        u = group.base_mult(k)
        if b:
            u = group.add(u, c)
        ks.append(k)
        points.append(u)
    # one aggregated opening proof over a random linear combination
    coeffs = _agg_coeffs(context, points)
    a, b2 = group.rand_scalar(), group.rand_scalar()
    t = group.add(group.base_mult(a), group.mult(b2, c))
    e = _chal(context, c, t, b"".join(points))
    sk = sum(ci * ki for ci, ki in zip(coeffs, ks)) % group.ORDER
    sb = sum(ci * bi for ci, bi in zip(coeffs, bits)) % group.ORDER
    z1 = (a + e * sk) % group.ORDER
    z2 = (b2 + e * sb) % group.ORDER
    req = struct.pack("<I", len(bits)) + b"".join(points) + t + _scalar_bytes(z1) + _scalar_bytes(z2)
    return Ot2Receiver(list(bits), ks, context, points), req


def _parse_ot2_request(request: bytes):
    if len(request) < 4:
        raise OtError("short request")
    (m,) = struct.unpack_from("<I", request, 0)
    if m == 0 or len(request) != 4 + 32 * m + 96:
        raise OtError("bad request size")
    points = [request[4 + 32 * i:4 + 32 * (i + 1)] for i in range(m)]
    off = 4 + 32 * m
    t = request[off:off + 32]
    z1 = int.from_bytes(request[off + 32:off + 64], "little")
    z2 = int.from_bytes(request[off + 64:off + 96], "little")
    return points, t, z1, z2


def ot2_respond(pairs: list[tuple[bytes, bytes]], request: bytes, context: bytes) -> bytes:
    points, t, z1, z2 = _parse_ot2_request(request)
    if len(points) != len(pairs):
        raise OtError("request size does not match pair count")
    lens = {len(x) for pair in pairs for x in pair}
    if len(lens) != 1:
        raise ValueError("pair entries must have equal length")
    c = _nums_point(context)
    for u in points:
        if not group.is_valid(u):
            raise OtError("invalid request point")
    if not group.is_valid(t):
        raise OtError("invalid request point")
    coeffs = _agg_coeffs(context, points)
    e = _chal(context, c, t, b"".join(points))
    try:
        s = None
        for ci, u in zip(coeffs, points):
            term = group.mult(ci, u)
            s = term if s is None else group.add(s, term)
        lhs = group.base_mult(z1)
        if z2:
            lhs = group.add(lhs, group.mult(z2, c))
        rhs = group.add(t, group.mult(e, s))
    except group.GroupError as exc:
        raise OtError("degenerate request point") from exc
    if lhs != rhs:
        raise OtError("request proof rejected")

    r = group.rand_scalar()
    a = group.base_mult(r)
    cneg = group.mult(group.ORDER - r, c)
    blobs = []
    for i, (u, pair) in enumerate(zip(points, pairs)):
        try:
            w0 = group.mult(r, u)
        except group.GroupError as exc:
            raise OtError("degenerate request point") from exc
        w1 = group.add(w0, cneg)
        blobs.append(seal(_rec_key(context, a, w0, 2 * i), pair[0]))
        blobs.append(seal(_rec_key(context, a, w1, 2 * i + 1), pair[1]))
    blob_len = len(blobs[0])
    return a + struct.pack("<I", blob_len) + b"".join(blobs)


def ot2_receive(state: Ot2Receiver, response: bytes) -> list[bytes]:
    m = len(state.bits)
    if len(response) < 36:
        raise OtError("short response")
    a = response[:32]
    (blob_len,) = struct.unpack_from("<I", response, 32)
    body = response[36:]
    if len(body) != 2 * m * blob_len:
        raise OtError("bad response shape")
    out = []
    for i, (b, k) in enumerate(zip(state.bits, state.ks)):
        try:
            w = group.mult(k, a)
        except group.GroupError as exc:
            raise OtError("degenerate response point") from exc
        idx = 2 * i + b
        blob = body[idx * blob_len:(idx + 1) * blob_len]
        try:
            out.append(open_sealed(_rec_key(state.context, a, w, idx), blob))
        except AuthError as exc:
            raise OtError("record failed authentication") from exc
    return out


def ot2_expected_response_len(m: int, record_len: int) -> int:
    return 36 + 2 * m * sealed_len(record_len)
