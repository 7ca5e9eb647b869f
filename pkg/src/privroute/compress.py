"""Sign-preserving low-rank factorization of next-hop bit matrices.

Each n x n bit matrix M is replaced by integer factors A, B (n x d) such
that sign((A B^T)_uv) recovers M_uv for every off-diagonal entry.  The
optimizer minimizes a smooth hinge surrogate; a float solution is then
quantized to integers at the smallest power-of-two scale whose products
still carry the right signs under exact integer arithmetic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .graph import NextHopMatrices

MAGIC = b"PRSF"
MAX_ITER = 5000
MAX_RESTARTS = 3
MAX_SCALE_EXP = 16
LBFGS_HISTORY = 10


def huber_hinge(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Smooth hinge on the margin t*x: squared inside [-1, inf), linear below."""
    tx = t * x
    return np.where(tx >= -1.0, np.square(np.maximum(0.0, 1.0 - tx)), -4.0 * tx)


def huber_hinge_grad(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """d/dx of huber_hinge: 0 for tx >= 1, -2t(1-tx) in the middle, -4t below."""
    tx = t * x
    mid = -2.0 * t * (1.0 - tx)
    return np.where(tx >= 1.0, 0.0, np.where(tx >= -1.0, mid, -4.0 * t))


def sign_targets(bits: np.ndarray) -> np.ndarray:
    """Map bits {0,1} to targets {-1,+1}."""
    return bits.astype(np.float64) * 2.0 - 1.0


def offdiag_mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def objective(A: np.ndarray, B: np.ndarray, targets: np.ndarray, mask: np.ndarray):
    """Masked Huber-hinge sum and its gradients with respect to A and B."""
    P = A @ B.T
    losses = huber_hinge(P, targets)
    J = float(losses[mask].sum())
    G = huber_hinge_grad(P, targets)
    G = np.where(mask, G, 0.0)
    return J, G @ B, G.T @ A


def signs_ok(P: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> bool:
    """Strict sign agreement on every unmasked entry; zero never passes."""
    prod = P * targets
    return bool(np.all(prod[mask] > 0))


@dataclass
class FactorResult:
    A: np.ndarray
    B: np.ndarray
    loss: float
    iterations: int
    perfect: bool


def factor_sign_matrix(
    bits: np.ndarray,
    d: int,
    seed: int = 0,
    max_iter: int = MAX_ITER,
    restarts: int = MAX_RESTARTS,
) -> FactorResult:
    """Minimize the masked Huber-hinge objective at rank d.

    Runs LBFGS (history 10) for up to max_iter iterations, restarting with a
    fresh seed up to `restarts` times; stops early once J < 1, which already
    guarantees every sign is correct.
    """
    n = bits.shape[0]
    if bits.shape != (n, n):
        raise ValueError("bit matrix must be square")
    targets = sign_targets(bits)
    mask = offdiag_mask(n)
    best: Optional[FactorResult] = None

    def fun(flat):
        A = flat[: n * d].reshape(n, d)
        B = flat[n * d:].reshape(n, d)
        J, dA, dB = objective(A, B, targets, mask)
        return J, np.concatenate([dA.ravel(), dB.ravel()])

    for attempt in range(1 + restarts):
        rng = np.random.default_rng(seed * 1000 + attempt)
        x = rng.standard_normal(2 * n * d) / np.sqrt(d)
        used = 0
        J = fun(x)[0]
        while used < max_iter and J >= 1.0:
            step = min(250, max_iter - used)
            res = _scipy_minimize(
                fun, x, jac=True, method="L-BFGS-B",
                options={"maxiter": step, "maxcor": LBFGS_HISTORY},
            )
            x = res.x
            J = float(res.fun)
            used += max(int(res.nit), 1)
            if res.nit < step and J >= 1.0:
                break  # converged without reaching a perfect solution
        A = x[: n * d].reshape(n, d)
        B = x[n * d:].reshape(n, d)
        perfect = signs_ok(A @ B.T, targets, mask)
        result = FactorResult(A, B, J, used, perfect)
        if perfect:
            return result
        if best is None or J < best.loss:
            best = result
    return best


@dataclass
class QuantizedFactors:
    A: np.ndarray  # int64
    B: np.ndarray  # int64
    scale_exp: int
    nu: int
    tau: int


def _exact_products(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Integer matrix product, falling back to arbitrary precision when an
    int64 product could wrap."""
    d = A.shape[1]
    bits = int(np.abs(A).max(initial=1)).bit_length() + int(np.abs(B).max(initial=1)).bit_length()
    if bits + d.bit_length() + 1 < 63:
        return A @ B.T
    return (A.astype(object) @ B.T.astype(object))


def quantize(result: FactorResult, bits: np.ndarray) -> QuantizedFactors:
    """Round at the smallest power-of-two scale whose integer products still
    carry the right signs.  Sign checks use exact integer arithmetic only."""
    if not result.perfect:
        raise ValueError("cannot quantize an imperfect factorization")
    targets = sign_targets(bits)
    mask = offdiag_mask(bits.shape[0])
    tsign = np.where(targets > 0, 1, -1).astype(object)
    for k in range(MAX_SCALE_EXP + 1):
        s = float(1 << k)
        Aq = np.rint(result.A * s).astype(np.int64)
        Bq = np.rint(result.B * s).astype(np.int64)
        P = _exact_products(Aq, Bq)
        good = np.all((P * tsign)[mask] > 0) if P.dtype == object else signs_ok(P.astype(object), targets, mask)
        if good:
            max_entry = int(max(np.abs(Aq).max(initial=0), np.abs(Bq).max(initial=0)))
            max_prod = int(np.abs(np.asarray(P, dtype=object)[mask]).max())
            nu = max(1, max_entry.bit_length())
            tau = max(1, (max_prod - 1).bit_length())
            return QuantizedFactors(Aq, Bq, k, nu, tau)
    raise ValueError(f"no scale up to 2^{MAX_SCALE_EXP} preserves signs")


def compression_factor(n: int, d: int, nu: int) -> float:
    """Plain-bits size over factored size: 2n^2 bits vs 4nd entries of nu bits."""
    return n / (2.0 * d * nu)


@dataclass
class CompressedRouting:
    """Quantized factor pairs for both bit matrices, sharing one rank and
    entry/product bit bounds."""

    n: int
    d: int
    nu: int
    tau: int
    A_ne: np.ndarray
    B_ne: np.ndarray
    A_nw: np.ndarray
    B_nw: np.ndarray

    def factor(self) -> float:
        return compression_factor(self.n, self.d, self.nu)

    def row_products(self, u: int, v: int) -> tuple[int, int]:
        """Exact integer products (A_ne[u].B_ne[v], A_nw[u].B_nw[v])."""
        ne = int(sum(int(a) * int(b) for a, b in zip(self.A_ne[u], self.B_ne[v])))
        nw = int(sum(int(a) * int(b) for a, b in zip(self.A_nw[u], self.B_nw[v])))
        return ne, nw

    def bits_of(self, u: int, v: int) -> tuple[int, int]:
        ne, nw = self.row_products(u, v)
        return (1 if ne > 0 else 0, 1 if nw > 0 else 0)


class RankSearchError(ValueError):
    def __init__(self, msg, losses):
        super().__init__(msg)
        self.losses = losses


def search_rank(
    m: NextHopMatrices,
    seed: int = 0,
    max_rank: int = 256,
    max_iter: int = MAX_ITER,
    restarts: int = MAX_RESTARTS,
) -> CompressedRouting:
    """Find the smallest shared rank d at which both bit matrices factor
    perfectly: geometric sweep upward, then a linear scan downward."""
    losses: dict[int, tuple[float, float]] = {}
    cache: dict[int, tuple[FactorResult, FactorResult]] = {}

    def attempt(d: int) -> bool:
        r_ne = factor_sign_matrix(m.bits_ne, d, seed=seed, max_iter=max_iter, restarts=restarts)
        r_nw = factor_sign_matrix(m.bits_nw, d, seed=seed + 7919, max_iter=max_iter, restarts=restarts)
        losses[d] = (r_ne.loss, r_nw.loss)
        if r_ne.perfect and r_nw.perfect:
            cache[d] = (r_ne, r_nw)
            return True
        return False

    feasible = None
    d = 1
    while d <= max_rank:
        if attempt(d):
            feasible = d
            break
        d *= 2
    if feasible is None:
        raise RankSearchError(
            f"no rank up to {max_rank} gives perfect sign reconstruction; losses per rank: {losses}",
            losses,
        )
    d = feasible - 1
    while d >= 1 and d not in losses:
        if attempt(d):
            feasible = d
            d -= 1
        else:
            break
    r_ne, r_nw = cache[feasible]
    q_ne = quantize(r_ne, m.bits_ne)
    q_nw = quantize(r_nw, m.bits_nw)
    nu = max(q_ne.nu, q_nw.nu)
    tau = max(q_ne.tau, q_nw.tau)
    return CompressedRouting(m.n, feasible, nu, tau, q_ne.A, q_ne.B, q_nw.A, q_nw.B)


def save_compressed(c: CompressedRouting) -> bytes:
    """Binary layout: magic, then n, d, nu, tau as LE u32, then the four
    factor matrices row-major as LE i64 (A_ne, B_ne, A_nw, B_nw)."""
    out = bytearray(MAGIC)
    out += struct.pack("<4I", c.n, c.d, c.nu, c.tau)
    for mtx in (c.A_ne, c.B_ne, c.A_nw, c.B_nw):
        if mtx.shape != (c.n, c.d):
            raise ValueError("matrix shape mismatch")
        out += np.ascontiguousarray(mtx, dtype="<i8").tobytes()
    return bytes(out)


def load_compressed(blob: bytes) -> CompressedRouting:
    if blob[:4] != MAGIC:
        raise ValueError("bad magic; not a compressed routing file")
    n, d, nu, tau = struct.unpack_from("<4I", blob, 4)
    need = 16 + 4 + 4 * n * d * 8
    if len(blob) != need:
        raise ValueError(f"truncated or oversized file: {len(blob)} != {need}")
    mats = []
    off = 20
    for _ in range(4):
        arr = np.frombuffer(blob, dtype="<i8", count=n * d, offset=off).reshape(n, d).astype(np.int64)
        mats.append(arr)
        off += n * d * 8
    return CompressedRouting(n, d, nu, tau, *mats)
