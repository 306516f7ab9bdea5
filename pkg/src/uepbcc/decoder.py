"""Sum-product (LLR domain) decoding with a flooding schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

MAX_LLR = 50.0
# keeps the inverse tanh finite once tanh saturates in float64
TANH_GUARD = 1.0 - 1e-15


@dataclass
class DecodeResult:
    hard_bits: np.ndarray
    iterations_used: int
    converged: bool
    posterior: np.ndarray | None = None


@numba.njit(cache=True)
def _syndrome_ok(hard, chk_ptr, chk_var):
    m = chk_ptr.size - 1
    for c in range(m):
        acc = 0
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            acc ^= hard[chk_var[e]]
        if acc:
            return False
    return True


@numba.njit(cache=True, fastmath=True)
def _spa_frame(llr, chk_ptr, chk_var, var_ptr, var_edge, max_iter, max_llr, post, hard):
    n = llr.size
    m = chk_ptr.size - 1
    n_edges = chk_var.size
    v2c = np.empty(n_edges)
    c2v = np.zeros(n_edges)
    t = np.empty(n_edges)

    # undecided bits (exact-zero posterior) block convergence: a tie is not a decision
    undecided = 0
    for v in range(n):
        post[v] = llr[v]
        hard[v] = 1 if llr[v] < 0 else 0
        if llr[v] == 0.0:
            undecided += 1
    if undecided == 0 and _syndrome_ok(hard, chk_ptr, chk_var):
        return 0, True
    for e in range(n_edges):
        v2c[e] = llr[chk_var[e]]

    for it in range(1, max_iter + 1):
        for c in range(m):
            s0 = chk_ptr[c]
            s1 = chk_ptr[c + 1]
            prod = 1.0
            zeros = 0
            for e in range(s0, s1):
                t[e] = np.tanh(0.5 * v2c[e])
                if t[e] == 0.0:
                    zeros += 1
                else:
                    prod *= t[e]
            for e in range(s0, s1):
                if zeros == 0:
                    x = prod / t[e]
                elif zeros == 1 and t[e] == 0.0:
                    x = prod
                else:
                    x = 0.0
                if x > TANH_GUARD:
                    x = TANH_GUARD
                elif x < -TANH_GUARD:
                    x = -TANH_GUARD
                c2v[e] = np.log((1.0 + x) / (1.0 - x))

        undecided = 0
        for v in range(n):
            acc = llr[v]
            for j in range(var_ptr[v], var_ptr[v + 1]):
                acc += c2v[var_edge[j]]
            post[v] = acc
            hard[v] = 1 if acc < 0 else 0
            if acc == 0.0:
                undecided += 1
            for j in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[j]
                x = acc - c2v[e]
                if x > max_llr:
                    x = max_llr
                elif x < -max_llr:
                    x = -max_llr
                v2c[e] = x
        if undecided == 0 and _syndrome_ok(hard, chk_ptr, chk_var):
            return it, True
    return max_iter, False


@numba.njit(cache=True)
def _spa_batch(llrs, chk_ptr, chk_var, var_ptr, var_edge, max_iter, max_llr):
    B, n = llrs.shape
    hard = np.zeros((B, n), dtype=np.uint8)
    post = np.zeros((B, n))
    iters = np.zeros(B, dtype=np.int64)
    conv = np.zeros(B, dtype=np.bool_)
    for b in range(B):
        it, ok = _spa_frame(llrs[b], chk_ptr, chk_var, var_ptr, var_edge,
                            max_iter, max_llr, post[b], hard[b])
        iters[b] = it
        conv[b] = ok
    return hard, post, iters, conv


class SpaDecoder:
    """Flooding LLR sum-product decoder bound to one parity-check matrix.

    Positive LLRs favour bit 0. A posterior of exactly zero decides bit 0
    but keeps the frame from being declared converged.
    """

    def __init__(self, h, max_iter: int = 100, max_llr: float = MAX_LLR):
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        h = sp.csr_matrix(h)
        h.sort_indices()
        self.shape = h.shape
        self.max_iter = int(max_iter)
        self.max_llr = float(max_llr)
        # edges numbered in row-major order
        self._chk_ptr = h.indptr.astype(np.int64)
        self._chk_var = h.indices.astype(np.int64)
        order = np.argsort(self._chk_var, kind="stable")
        self._var_edge = order.astype(np.int64)
        self._var_ptr = np.r_[0, np.cumsum(np.bincount(self._chk_var, minlength=h.shape[1]))].astype(np.int64)

    def decode(self, llr, max_iter: int | None = None) -> DecodeResult:
        llr = np.clip(np.asarray(llr, dtype=np.float64), -self.max_llr, self.max_llr)
        hard, post, iters, conv = self.decode_batch(llr[None, :], max_iter)
        return DecodeResult(hard[0], int(iters[0]), bool(conv[0]), post[0])

    def decode_batch(self, llrs, max_iter: int | None = None):
        """Decode a (B, n) array; returns (hard, posterior, iterations, converged)."""
        llrs = np.ascontiguousarray(np.clip(np.atleast_2d(llrs).astype(np.float64),
                                            -self.max_llr, self.max_llr))
        if llrs.shape[1] != self.shape[1]:
            raise ValueError(f"expected LLR rows of length {self.shape[1]}")
        mi = self.max_iter if max_iter is None else int(max_iter)
        return _spa_batch(llrs, self._chk_ptr, self._chk_var, self._var_ptr, self._var_edge,
                          mi, self.max_llr)


def decode(code, channel_llrs, max_iter: int = 100) -> DecodeResult:
    """One-shot decode of a single frame against ``code.h``."""
    return SpaDecoder(code.h, max_iter=max_iter).decode(channel_llrs)
