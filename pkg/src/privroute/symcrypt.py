"""Symmetric building blocks: authenticated encryption, the direction PRF,
and key derivation.

Sealing is AES-CTR plus a truncated HMAC tag (encrypt-then-MAC).  Every key
is used for exactly one message, so the CTR nonce is fixed.
"""

from __future__ import annotations

import hashlib
import hmac

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

KEY_LEN = 32
TAG_LEN = 16
PRF_KEY_LEN = 16


class AuthError(Exception):
    """Ciphertext failed authentication."""


def kdf(*parts: bytes) -> bytes:
    """Domain-separated derivation of a 32-byte key."""
    h = hashlib.sha256()
    for part in parts:
        h.update(len(part).to_bytes(4, "little"))
        h.update(part)
    return h.digest()


def seal(key: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
    if len(key) != KEY_LEN:
        raise ValueError("seal key must be 32 bytes")
    enc = Cipher(algorithms.AES(key[:16]), modes.CTR(b"\x00" * 16)).encryptor()
    ct = enc.update(plaintext) + enc.finalize()
    tag = hmac.new(key[16:], aad + ct, hashlib.sha256).digest()[:TAG_LEN]
    return ct + tag


def open_sealed(key: bytes, blob: bytes, aad: bytes = b"") -> bytes:
    if len(key) != KEY_LEN:
        raise ValueError("seal key must be 32 bytes")
    if len(blob) < TAG_LEN:
        raise AuthError("sealed blob too short")
    ct, tag = blob[:-TAG_LEN], blob[-TAG_LEN:]
    want = hmac.new(key[16:], aad + ct, hashlib.sha256).digest()[:TAG_LEN]
    if not hmac.compare_digest(tag, want):
        raise AuthError("authentication tag mismatch")
    dec = Cipher(algorithms.AES(key[:16]), modes.CTR(b"\x00" * 16)).decryptor()
    return dec.update(ct) + dec.finalize()


def sealed_len(plaintext_len: int) -> int:
    return plaintext_len + TAG_LEN


def prf_direction(key: bytes, direction: str) -> bytes:
    """One AES block per direction; used to combine the circuit's two
    released keys into a single direction key."""
    if len(key) != PRF_KEY_LEN:
        raise ValueError("PRF key must be 16 bytes")
    if direction not in ("N", "E", "S", "W"):
        raise ValueError(f"unknown direction {direction!r}")
    block = b"dir/" + direction.encode() + b"\x00" * 11
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def direction_key(k_ne: bytes, k_nw: bytes, direction: str) -> bytes:
    a = prf_direction(k_ne, direction)
    b = prf_direction(k_nw, direction)
    return bytes(x ^ y for x, y in zip(a, b))
