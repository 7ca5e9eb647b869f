"""Garbling engine: free XOR, three-row AND tables, point-and-permute.

Wire labels are 128-bit (an 80-bit compatibility mode exists) held as
uint64 pairs.  Hashing is fixed-key AES in a Davies-Meyer-style
construction with a per-gate tweak; whole depth levels of the circuit are
hashed through single batched ECB calls.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .circuit import Circuit

MAGIC = b"PRGC"
DEFAULT_LABEL_BITS = 128
COMPAT_LABEL_BITS = 80

_U64 = np.uint64
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)

_FIXED_KEY = hashlib.sha256(b"privroute.garble.fixed-key.v1").digest()[:16]
_AES_ECB = Cipher(algorithms.AES(_FIXED_KEY), modes.ECB()).encryptor()


class EvalError(Exception):
    """Garbled evaluation failed an authenticity or decode check."""


def _prp(hi, lo):
    """Fixed-key AES over packed (hi, lo) uint64 pairs, one call per batch."""
    n = hi.shape[0]
    buf = np.empty((n, 2), dtype="<u8")
    buf[:, 0] = lo
    buf[:, 1] = hi
    ct = np.frombuffer(_AES_ECB.update(buf.tobytes()), dtype="<u8")
    return ct[1::2].astype(np.uint64), ct[0::2].astype(np.uint64)


def _dbl(hi, lo):
    """Doubling in GF(2^128) mod x^128 + x^7 + x^2 + x + 1."""
    carry = hi >> _U64(63)
    return (hi << _U64(1)) | (lo >> _U64(63)), (lo << _U64(1)) ^ (carry * _U64(0x87))


def _hash_pairs(a_hi, a_lo, b_hi, b_lo, tweak_hi, tweak_lo):
    """H(A, B, tweak) = E(T) xor T with T = 2A xor 4B xor tweak."""
    da_hi, da_lo = _dbl(a_hi, a_lo)
    db_hi, db_lo = _dbl(*_dbl(b_hi, b_lo))
    t_hi = da_hi ^ db_hi ^ tweak_hi
    t_lo = da_lo ^ db_lo ^ tweak_lo
    e_hi, e_lo = _prp(t_hi, t_lo)
    return e_hi ^ t_hi, e_lo ^ t_lo


def _hash_single(hi, lo, tweak_hi, tweak_lo):
    zero = np.zeros_like(hi)
    return _hash_pairs(hi, lo, zero, zero, tweak_hi, tweak_lo)

_OUTPUT_TWEAK_HI = _U64(1 << 62)


def label_bytes_len(label_bits: int) -> int:
    return label_bits // 8


def labels_to_bytes(labels: np.ndarray, label_bits: int) -> bytes:
    """Each label: lo as LE u64 then the used high bytes, little endian."""
    flat = labels.reshape(-1, 2)
    step = label_bytes_len(label_bits)
    n = flat.shape[0]
    buf = np.zeros((n, step), dtype=np.uint8)
    buf[:, :8] = flat[:, 1].astype("<u8").view(np.uint8).reshape(n, 8)
    hi = flat[:, 0].astype("<u8").view(np.uint8).reshape(n, 8)
    buf[:, 8:] = hi[:, : step - 8]
    return buf.tobytes()


def bytes_to_labels(data: bytes, count: int, label_bits: int) -> np.ndarray:
    step = label_bytes_len(label_bits)
    if len(data) != count * step:
        raise ValueError("label blob length mismatch")
    buf = np.frombuffer(data, dtype=np.uint8).reshape(count, step)
    arr = np.zeros((count, 2), dtype=np.uint64)
    lo = np.ascontiguousarray(buf[:, :8])
    arr[:, 1] = lo.view("<u8").ravel()
    hi = np.zeros((count, 8), dtype=np.uint8)
    hi[:, : step - 8] = buf[:, 8:]
    arr[:, 0] = hi.view("<u8").ravel()
    return arr


@dataclass
class Keyset:
    """Garbler-side secrets: zero labels for every input wire plus the
    global offset."""

    circuit: Circuit
    label_bits: int
    zero_labels: dict[str, np.ndarray]  # group name -> (width, 2) uint64
    delta: np.ndarray

    def encode(self, name: str, value: int) -> np.ndarray:
        zeros = self.zero_labels[name]
        width = zeros.shape[0]
        bits = np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint64)
        return zeros ^ (bits[:, None] * self.delta[None, :])

    def encode_all(self, values: dict[str, int]) -> dict[str, np.ndarray]:
        out = {}
        for name in self.circuit.inputs:
            if name == "const_one":
                out[name] = self.encode(name, 1)
            else:
                out[name] = self.encode(name, values[name])
        return out


@dataclass
class GarbledCircuit:
    circuit: Circuit
    label_bits: int
    tables: np.ndarray        # (n_and, 3, 2) uint64
    decode_bits: np.ndarray   # (n_out,) uint8
    auth: np.ndarray          # (n_out, 2, 2) uint64, indexed by pointer bit

    def fingerprint(self) -> bytes:
        return hashlib.sha256(serialize_garbled(self)).digest()


def _rand_words(shape, rng) -> np.ndarray:
    if rng is None:
        flat = int(np.prod(shape))
        return np.frombuffer(os.urandom(flat * 8), dtype=np.uint64).reshape(shape).copy()
    return rng.integers(0, 1 << 64, size=shape, dtype=np.uint64)


def garble(circuit: Circuit, label_bits: int = DEFAULT_LABEL_BITS, rng=None):
    """Garble the circuit; returns (GarbledCircuit, Keyset)."""
    if label_bits not in (DEFAULT_LABEL_BITS, COMPAT_LABEL_BITS):
        raise ValueError("label size must be 128 or 80 bits")
    mask_hi = _MASK64 if label_bits == 128 else _U64((1 << (label_bits - 64)) - 1)
    plan = circuit.plan()
    Z = np.zeros((circuit.n_wires, 2), dtype=np.uint64)
    delta = _rand_words((2,), rng)
    delta[0] &= mask_hi
    delta[1] |= _U64(1)
    input_wires = [w for ws in circuit.inputs.values() for w in ws]
    iw = np.array(input_wires, dtype=np.int64)
    Z[iw] = _rand_words((len(input_wires), 2), rng)
    Z[iw, 0] &= mask_hi

    tables = np.zeros((plan.n_and, 3, 2), dtype=np.uint64)
    for kind, i in plan.order:
        if kind == 0:
            a, b, out = plan.xor_levels[i]
            Z[out] = Z[a] ^ Z[b]
            continue
        a, b, out, ordinal = plan.and_levels[i]
        A0, B0 = Z[a], Z[b]
        pa = A0[:, 1] & _U64(1)
        pb = B0[:, 1] & _U64(1)
        k = len(a)
        # rows stacked in pointer order (ra, rb) = (0,0), (0,1), (1,0), (1,1)
        ah = np.empty(4 * k, dtype=np.uint64); al = np.empty(4 * k, dtype=np.uint64)
        bh = np.empty(4 * k, dtype=np.uint64); bl = np.empty(4 * k, dtype=np.uint64)
        vv = np.empty(4 * k, dtype=np.uint64)
        for r, (ra, rb) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            x = pa ^ _U64(ra)
            y = pb ^ _U64(rb)
            sl = slice(r * k, (r + 1) * k)
            ah[sl] = A0[:, 0] ^ (x * delta[0])
            al[sl] = A0[:, 1] ^ (x * delta[1])
            bh[sl] = B0[:, 0] ^ (y * delta[0])
            bl[sl] = B0[:, 1] ^ (y * delta[1])
            vv[sl] = x & y
        tw_lo = np.tile(ordinal.astype(np.uint64), 4)
        h_hi, h_lo = _hash_pairs(ah, al, bh, bl, _U64(0), tw_lo)
        h_hi &= mask_hi
        c0_hi = h_hi[:k] ^ (vv[:k] * delta[0])
        c0_lo = h_lo[:k] ^ (vv[:k] * delta[1])
        for r in (1, 2, 3):
            sl = slice(r * k, (r + 1) * k)
            tables[ordinal, r - 1, 0] = h_hi[sl] ^ c0_hi ^ (vv[sl] * delta[0])
            tables[ordinal, r - 1, 1] = h_lo[sl] ^ c0_lo ^ (vv[sl] * delta[1])
        Z[out, 0] = c0_hi
        Z[out, 1] = c0_lo

    out_wires = np.array([w for ws in circuit.outputs.values() for w in ws], dtype=np.int64)
    C0 = Z[out_wires]
    d = (C0[:, 1] & _U64(1)).astype(np.uint8)
    C1 = C0 ^ delta[None, :]
    tw = np.arange(len(out_wires), dtype=np.uint64)
    # auth is indexed by semantic bit, which is also bound into the tweak so
    # a flipped decode bit or swapped hash pair cannot forge an output
    auth = np.zeros((len(out_wires), 2, 2), dtype=np.uint64)
    auth[:, 0, 0], auth[:, 0, 1] = _hash_single(C0[:, 0], C0[:, 1], _OUTPUT_TWEAK_HI, tw)
    auth[:, 1, 0], auth[:, 1, 1] = _hash_single(C1[:, 0], C1[:, 1], _OUTPUT_TWEAK_HI, tw | _U64(1 << 32))

    keyset = Keyset(
        circuit,
        label_bits,
        {name: Z[np.array(ws, dtype=np.int64)].copy() for name, ws in circuit.inputs.items()},
        delta,
    )
    return GarbledCircuit(circuit, label_bits, tables, d, auth), keyset


def evaluate(gc: GarbledCircuit, active: dict[str, np.ndarray]) -> dict[str, int]:
    """Evaluate with active input labels; raises EvalError when any output
    label fails its authenticity check."""
    circuit = gc.circuit
    mask_hi = _MASK64 if gc.label_bits == 128 else _U64((1 << (gc.label_bits - 64)) - 1)
    V = np.zeros((circuit.n_wires, 2), dtype=np.uint64)
    for name, ws in circuit.inputs.items():
        if name not in active:
            raise EvalError(f"missing labels for input group {name!r}")
        labels = active[name]
        if labels.shape != (len(ws), 2):
            raise EvalError(f"bad label shape for input group {name!r}")
        V[np.array(ws, dtype=np.int64)] = labels
    plan = circuit.plan()
    for kind, i in plan.order:
        if kind == 0:
            a, b, out = plan.xor_levels[i]
            V[out] = V[a] ^ V[b]
            continue
        a, b, out, ordinal = plan.and_levels[i]
        A, B = V[a], V[b]
        h_hi, h_lo = _hash_pairs(A[:, 0], A[:, 1], B[:, 0], B[:, 1], _U64(0), ordinal.astype(np.uint64))
        h_hi &= mask_hi
        row = ((A[:, 1] & _U64(1)) << _U64(1)) | (B[:, 1] & _U64(1))
        nz = row > 0
        t = gc.tables[ordinal[nz], (row[nz] - _U64(1)).astype(np.int64)]
        h_hi[nz] ^= t[:, 0]
        h_lo[nz] ^= t[:, 1]
        V[out, 0] = h_hi
        V[out, 1] = h_lo

    out_wires = np.array([w for ws in circuit.outputs.values() for w in ws], dtype=np.int64)
    L = V[out_wires]
    q = (L[:, 1] & _U64(1)).astype(np.uint8)
    bits = q ^ gc.decode_bits
    tw = np.arange(len(out_wires), dtype=np.uint64) | (bits.astype(np.uint64) << _U64(32))
    hh, hl = _hash_single(L[:, 0], L[:, 1], _OUTPUT_TWEAK_HI, tw)
    want = gc.auth[np.arange(len(out_wires)), bits.astype(np.int64)]
    if not (np.array_equal(hh, want[:, 0]) and np.array_equal(hl, want[:, 1])):
        raise EvalError("output label authenticity check failed")
    res = {}
    pos = 0
    for name, ws in circuit.outputs.items():
        res[name] = sum(int(bits[pos + i]) << i for i in range(len(ws)))
        pos += len(ws)
    return res


def _pack_groups(groups: dict[str, list[int]]) -> bytes:
    out = bytearray(struct.pack("<I", len(groups)))
    for name, ws in groups.items():
        nb = name.encode()
        out += struct.pack("<H", len(nb)) + nb + struct.pack("<I", len(ws))
        out += struct.pack(f"<{len(ws)}I", *ws)
    return bytes(out)


def _unpack_groups(blob: bytes, off: int):
    (count,) = struct.unpack_from("<I", blob, off)
    off += 4
    groups = {}
    for _ in range(count):
        (nl,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off:off + nl].decode()
        off += nl
        (width,) = struct.unpack_from("<I", blob, off)
        off += 4
        groups[name] = list(struct.unpack_from(f"<{width}I", blob, off))
        off += 4 * width
    return groups, off


def serialize_garbled(gc: GarbledCircuit) -> bytes:
    """Deterministic layout: magic, gate count, per-gate records
    (op u8, in u32, in u32, out u32), label length, then wiring metadata,
    AND tables in gate order and the output decode section."""
    c = gc.circuit
    out = bytearray(MAGIC)
    out += struct.pack("<I", c.n_gates)
    rec = np.zeros(c.n_gates, dtype=[("op", "u1"), ("a", "<u4"), ("b", "<u4"), ("o", "<u4")])
    rec["op"], rec["a"], rec["b"], rec["o"] = c.ops, c.gate_a, c.gate_b, c.gate_out
    out += rec.tobytes()
    out += struct.pack("<I", label_bytes_len(gc.label_bits))
    out += struct.pack("<I", c.n_wires)
    out += _pack_groups(c.inputs)
    out += _pack_groups(c.outputs)
    out += labels_to_bytes(gc.tables, gc.label_bits)
    n_out = len(gc.decode_bits)
    out += struct.pack("<I", n_out)
    out += gc.decode_bits.tobytes()
    out += labels_to_bytes(gc.auth, 128)
    return bytes(out)


def deserialize_garbled(blob: bytes) -> GarbledCircuit:
    if blob[:4] != MAGIC:
        raise ValueError("bad magic; not a garbled circuit blob")
    off = 4
    (n_gates,) = struct.unpack_from("<I", blob, off)
    off += 4
    rec = np.frombuffer(blob, dtype=[("op", "u1"), ("a", "<u4"), ("b", "<u4"), ("o", "<u4")],
                        count=n_gates, offset=off)
    off += n_gates * 13
    (label_len,) = struct.unpack_from("<I", blob, off)
    off += 4
    label_bits = label_len * 8
    (n_wires,) = struct.unpack_from("<I", blob, off)
    off += 4
    inputs, off = _unpack_groups(blob, off)
    outputs, off = _unpack_groups(blob, off)
    circuit = Circuit(
        n_wires, inputs, outputs,
        rec["op"].astype(np.uint8), rec["a"].astype(np.int32),
        rec["b"].astype(np.int32), rec["o"].astype(np.int32),
    )
    n_and = circuit.n_and
    tables = bytes_to_labels(blob[off:off + 3 * n_and * label_len], 3 * n_and, label_bits)
    off += 3 * n_and * label_len
    tables = tables.reshape(n_and, 3, 2)
    (n_out,) = struct.unpack_from("<I", blob, off)
    off += 4
    decode_bits = np.frombuffer(blob, dtype=np.uint8, count=n_out, offset=off).copy()
    off += n_out
    auth = bytes_to_labels(blob[off:off + 2 * n_out * 16], 2 * n_out, 128).reshape(n_out, 2, 2)
    off += 2 * n_out * 16
    if off != len(blob):
        raise ValueError("trailing bytes in garbled circuit blob")
    return GarbledCircuit(circuit, label_bits, tables, decode_bits, auth)
