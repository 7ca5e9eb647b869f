"""Prime-order group used by the transfer protocols (ristretto255).

Points are opaque 32-byte encodings, scalars are ints modulo the group
order.  The system libsodium is used when loadable; a pure Python
implementation of the same encoding serves as fallback and as a
cross-check in tests.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import hashlib
import secrets

ORDER = 2**252 + 27742317777372353535851937790883648493
POINT_LEN = 32


class GroupError(Exception):
    """Invalid point, scalar, or degenerate result."""


# -- libsodium backend --


class SodiumBackend:
    name = "libsodium"

    def __init__(self):
        lib = None
        for cand in ("sodium", None):
            path = ctypes.util.find_library(cand) if cand else None
            names = [path] if path else []
            if not cand:
                names = ["libsodium.so.23", "libsodium.so", "libsodium.dylib"]
            for nm in names:
                try:
                    lib = ctypes.CDLL(nm)
                    break
                except OSError:
                    continue
            if lib is not None:
                break
        if lib is None:
            raise OSError("libsodium not found")
        if lib.sodium_init() < 0:
            raise OSError("libsodium failed to initialize")
        for fn in (
            "crypto_scalarmult_ristretto255",
            "crypto_scalarmult_ristretto255_base",
            "crypto_core_ristretto255_add",
            "crypto_core_ristretto255_sub",
            "crypto_core_ristretto255_from_hash",
            "crypto_core_ristretto255_is_valid_point",
        ):
            if not hasattr(lib, fn):
                raise OSError(f"libsodium lacks {fn}")
        self._lib = lib

    @staticmethod
    def _scalar(k: int) -> bytes:
        return (k % ORDER).to_bytes(32, "little")

    def base_mult(self, k: int) -> bytes:
        out = ctypes.create_string_buffer(32)
        if self._lib.crypto_scalarmult_ristretto255_base(out, self._scalar(k)) != 0:
            raise GroupError("scalar multiplication rejected")
        return out.raw

    def mult(self, k: int, point: bytes) -> bytes:
        out = ctypes.create_string_buffer(32)
        if self._lib.crypto_scalarmult_ristretto255(out, self._scalar(k), point) != 0:
            raise GroupError("scalar multiplication rejected")
        return out.raw

    def add(self, p: bytes, q: bytes) -> bytes:
        out = ctypes.create_string_buffer(32)
        if self._lib.crypto_core_ristretto255_add(out, p, q) != 0:
            raise GroupError("invalid point")
        return out.raw

    def sub(self, p: bytes, q: bytes) -> bytes:
        out = ctypes.create_string_buffer(32)
        if self._lib.crypto_core_ristretto255_sub(out, p, q) != 0:
            raise GroupError("invalid point")
        return out.raw

    def from_hash(self, h64: bytes) -> bytes:
        if len(h64) != 64:
            raise ValueError("need 64 hash bytes")
        out = ctypes.create_string_buffer(32)
        self._lib.crypto_core_ristretto255_from_hash(out, h64)
        return out.raw

    def is_valid(self, p: bytes) -> bool:
        return len(p) == 32 and self._lib.crypto_core_ristretto255_is_valid_point(p) == 1


# -- pure Python backend --

_P = 2**255 - 19
_D = (-121665 * pow(121666, _P - 2, _P)) % _P
_SQRT_M1 = pow(2, (_P - 1) // 4, _P)
_ONE_MINUS_D_SQ = (1 - _D * _D) % _P
_D_MINUS_ONE_SQ = (_D - 1) ** 2 % _P
_BASE_X = 15112221349535400772501151409588531511454012693041857206046113283949847762202
_BASE_Y = 46316835694926478169428394003475163141307993866256225615783033603165251855960
_BASE = (_BASE_X, _BASE_Y, 1, _BASE_X * _BASE_Y % _P)
_IDENT = (0, 1, 1, 0)


def _sqrt_ratio_m1(u: int, v: int) -> tuple[bool, int]:
    v3 = v * v % _P * v % _P
    v7 = v3 * v3 % _P * v % _P
    r = u * v3 % _P * pow(u * v7 % _P, (_P - 5) // 8, _P) % _P
    check = v * r % _P * r % _P
    correct = check == u % _P
    flipped = check == -u % _P
    flipped_i = check == -u % _P * _SQRT_M1 % _P
    if flipped or flipped_i:
        r = r * _SQRT_M1 % _P
    if r & 1:
        r = _P - r
    return correct or flipped, r


_INVSQRT_A_MINUS_D = _sqrt_ratio_m1(1, (-1 - _D) % _P)[1]
# the reference encoding fixes the odd square root here
_SQRT_AD_MINUS_ONE = _P - _sqrt_ratio_m1((-_D - 1) % _P, 1)[1]


def _pt_add(p, q):
    x1, y1, z1, t1 = p
    x2, y2, z2, t2 = q
    a = (y1 - x1) * (y2 - x2) % _P
    b = (y1 + x1) * (y2 + x2) % _P
    c = t1 * 2 % _P * _D % _P * t2 % _P
    d = z1 * 2 % _P * z2 % _P
    e, f, g, h = b - a, d - c, d + c, b + a
    return (e * f % _P, g * h % _P, f * g % _P, e * h % _P)


def _pt_mult(k, p):
    r = _IDENT
    for bit in bin(k)[2:]:
        r = _pt_add(r, r)
        if bit == "1":
            r = _pt_add(r, p)
    return r


def _decode(s_bytes: bytes):
    if len(s_bytes) != 32:
        raise GroupError("point must be 32 bytes")
    s = int.from_bytes(s_bytes, "little")
    if s >= _P or s & 1:
        raise GroupError("non-canonical point encoding")
    ss = s * s % _P
    u1 = (1 - ss) % _P
    u2 = (1 + ss) % _P
    u2s = u2 * u2 % _P
    v = (-(_D * u1 % _P * u1) - u2s) % _P
    ok, invsqrt = _sqrt_ratio_m1(1, v * u2s % _P)
    if not ok:
        raise GroupError("invalid point encoding")
    den_x = invsqrt * u2 % _P
    den_y = invsqrt * den_x % _P * v % _P
    x = 2 * s % _P * den_x % _P
    if x & 1:
        x = _P - x
    y = u1 * den_y % _P
    t = x * y % _P
    if t & 1 or y == 0:
        raise GroupError("invalid point encoding")
    return (x, y, 1, t)


def _encode(p) -> bytes:
    x0, y0, z0, t0 = p
    u1 = (z0 + y0) * (z0 - y0) % _P
    u2 = x0 * y0 % _P
    _, invsqrt = _sqrt_ratio_m1(1, u1 * u2 % _P * u2 % _P)
    den1 = invsqrt * u1 % _P
    den2 = invsqrt * u2 % _P
    z_inv = den1 * den2 % _P * t0 % _P
    if t0 * z_inv % _P & 1:
        x = y0 * _SQRT_M1 % _P
        y = x0 * _SQRT_M1 % _P
        den_inv = den1 * _INVSQRT_A_MINUS_D % _P
    else:
        x, y, den_inv = x0, y0, den2
    if x * z_inv % _P & 1:
        y = -y % _P
    s = den_inv * (z0 - y) % _P
    if s & 1:
        s = _P - s
    return s.to_bytes(32, "little")


def _elligator(t: int):
    r = _SQRT_M1 * t % _P * t % _P
    u = (r + 1) * _ONE_MINUS_D_SQ % _P
    v = (-1 - r * _D) % _P * ((r + _D) % _P) % _P
    was_sq, s = _sqrt_ratio_m1(u, v)
    if was_sq:
        c = -1 % _P
    else:
        s = s * t % _P
        if not s & 1:
            s = _P - s
        c = r
    n = (c * (r - 1) % _P * _D_MINUS_ONE_SQ - v) % _P
    w0 = 2 * s * v % _P
    w1 = n * _SQRT_AD_MINUS_ONE % _P
    w2 = (1 - s * s) % _P
    w3 = (1 + s * s) % _P
    return (w0 * w3 % _P, w2 * w1 % _P, w1 * w3 % _P, w0 * w2 % _P)


class PythonBackend:
    name = "python"

    def base_mult(self, k: int) -> bytes:
        return self.mult(k, None)

    def mult(self, k: int, point: bytes | None) -> bytes:
        k %= ORDER
        if k == 0:
            raise GroupError("zero scalar")
        p = _BASE if point is None else _decode(point)
        out = _encode(_pt_mult(k, p))
        if out == bytes(32):
            raise GroupError("identity result")
        return out

    def add(self, p: bytes, q: bytes) -> bytes:
        return _encode(_pt_add(_decode(p), _decode(q)))

    def sub(self, p: bytes, q: bytes) -> bytes:
        x, y, z, t = _decode(q)
        return _encode(_pt_add(_decode(p), (-x % _P, y, z, -t % _P)))

    def from_hash(self, h64: bytes) -> bytes:
        if len(h64) != 64:
            raise ValueError("need 64 hash bytes")
        mask = (1 << 255) - 1
        t1 = (int.from_bytes(h64[:32], "little") & mask) % _P
        t2 = (int.from_bytes(h64[32:], "little") & mask) % _P
        return _encode(_pt_add(_elligator(t1), _elligator(t2)))

    def is_valid(self, p: bytes) -> bool:
        try:
            _decode(p)
            return True
        except GroupError:
            return False


def _pick_backend():
    try:
        return SodiumBackend()
    except OSError:
        return PythonBackend()


_BACKEND = _pick_backend()


def backend_name() -> str:
    return _BACKEND.name


def base_mult(k: int) -> bytes:
    return _BACKEND.base_mult(k)


def mult(k: int, point: bytes) -> bytes:
    return _BACKEND.mult(k, point)


def add(p: bytes, q: bytes) -> bytes:
    return _BACKEND.add(p, q)


def sub(p: bytes, q: bytes) -> bytes:
    return _BACKEND.sub(p, q)


def from_hash(h64: bytes) -> bytes:
    return _BACKEND.from_hash(h64)


def is_valid(p: bytes) -> bool:
    return _BACKEND.is_valid(p)


def rand_scalar() -> int:
    return secrets.randbelow(ORDER - 1) + 1


def hash_to_point(data: bytes) -> bytes:
    """Nothing-up-my-sleeve point; nobody learns its discrete log."""
    return from_hash(hashlib.sha512(data).digest())


def hash_scalar(data: bytes) -> int:
    """Scalar from a hash, for challenges."""
    return int.from_bytes(hashlib.sha512(data).digest(), "little") % ORDER
