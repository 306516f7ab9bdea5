"""Zigzag-random construction of UEP-LDPC parity-check matrices.

Column layout of every built code is ``[PC1 | PC2 | PC3]``: the k1 most
protected information bits, the k2 remaining information bits and the r
parity bits. The parity block is lower triangular with a unit diagonal and
a unit sub-diagonal (the zigzag chain), so systematic encoding is a single
forward substitution. Parity columns whose target degree exceeds two get
their extra edges strictly below the sub-diagonal, which keeps the block
triangular.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy.sparse as sp

from .degrees import DegreeDistribution, ProtectionProfile, apportion


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UepCode:
    """Sparse parity-check matrix plus protection-class column sets."""

    h: sp.csr_matrix
    profile: ProtectionProfile
    seed: int = 0
    four_cycles: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        h = sp.csr_matrix(self.h, dtype=np.uint8)
        h.sort_indices()
        p = self.profile
        if h.shape != (p.r, p.n):
            raise ValueError(f"matrix shape {h.shape} does not match profile r x n = {p.r} x {p.n}")
        object.__setattr__(self, "h", h)
        # encoder structure: H_info (r x k), parity block rows in CSR
        hp = h[:, p.k:].tocsr()
        if np.any(hp.diagonal() != 1) or sp.triu(hp, 1).nnz:
            raise ValueError("parity block is not lower triangular with unit diagonal")
        strict = sp.tril(hp, -1).tocsr()
        strict.sort_indices()
        object.__setattr__(self, "_hinfo", h[:, : p.k].tocsr())
        object.__setattr__(self, "_par_ptr", strict.indptr.astype(np.int64))
        object.__setattr__(self, "_par_idx", strict.indices.astype(np.int64))

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def k(self) -> int:
        return self.profile.k

    @property
    def r(self) -> int:
        return self.profile.r

    @property
    def pc1_cols(self) -> np.ndarray:
        return np.arange(0, self.profile.k1)

    @property
    def pc2_cols(self) -> np.ndarray:
        return np.arange(self.profile.k1, self.profile.k)

    @property
    def pc3_cols(self) -> np.ndarray:
        return np.arange(self.profile.k, self.profile.n)

    def column_degrees(self) -> np.ndarray:
        return np.asarray(self.h.sum(axis=0)).ravel()

    def row_degrees(self) -> np.ndarray:
        return np.diff(self.h.indptr)

    def syndrome(self, words: np.ndarray) -> np.ndarray:
        """H c^T over GF(2) for one word (n,) or a batch (B, n)."""
        w = np.atleast_2d(words).astype(np.int64)
        s = (self.h @ w.T).T % 2
        return s[0] if np.ndim(words) == 1 else s

    def encode(self, public_bits, secret_bits) -> np.ndarray:
        """Systematic codeword(s) carrying public bits in PC1, secret in PC2.

        Accepts single vectors or batches with a leading frame axis.
        """
        u1 = np.asarray(public_bits, dtype=np.uint8)
        u2 = np.asarray(secret_bits, dtype=np.uint8)
        single = u1.ndim == 1
        u1, u2 = np.atleast_2d(u1), np.atleast_2d(u2)
        if u1.shape[1] != self.profile.k1 or u2.shape[1] != self.profile.k2:
            raise ValueError(
                f"expected {self.profile.k1} public and {self.profile.k2} secret bits, "
                f"got {u1.shape[1]} and {u2.shape[1]}"
            )
        if u1.shape[0] != u2.shape[0]:
            raise ValueError("public and secret batches differ in length")
        u = np.concatenate([u1, u2], axis=1)
        s = np.asarray(self._hinfo @ u.T.astype(np.int64)).T.astype(np.uint8) & 1
        parity = _forward_substitute(np.ascontiguousarray(s), self._par_ptr, self._par_idx)
        c = np.concatenate([u, parity], axis=1)
        return c[0] if single else c

    def with_meta(self, **kw) -> "UepCode":
        return UepCode(self.h, self.profile, self.seed, self.four_cycles, {**self.meta, **kw})


@numba.njit(cache=True)
def _forward_substitute(s, ptr, idx):
    B, r = s.shape
    p = np.zeros((B, r), dtype=np.uint8)
    for b in range(B):
        for j in range(r):
            acc = s[b, j]
            for t in range(ptr[j], ptr[j + 1]):
                acc ^= p[b, idx[t]]
            p[b, j] = acc
    return p


def separation_score(code: UepCode) -> int:
    """Number of check rows touching both PC1 and PC2."""
    h = code.h.tocsc()
    p = code.profile
    t1 = np.zeros(p.r, dtype=bool)
    t2 = np.zeros(p.r, dtype=bool)
    t1[h[:, : p.k1].indices] = True
    t2[h[:, p.k1 : p.k].indices] = True
    return int(np.count_nonzero(t1 & t2))


def count_four_cycles(h) -> int:
    """Number of 4-cycles (pairs of columns sharing >= 2 rows, counted per row pair)."""
    h = sp.csc_matrix(h, dtype=np.int64)
    overlap = (h.T @ h).tocoo()
    mask = overlap.row < overlap.col
    v = overlap.data[mask]
    return int(np.sum(v * (v - 1) // 2))


def four_cycle_columns(h) -> np.ndarray:
    """Boolean mask of columns lying on at least one 4-cycle."""
    h = sp.csc_matrix(h, dtype=np.int64)
    overlap = (h.T @ h).tocoo()
    mask = (overlap.row != overlap.col) & (overlap.data >= 2)
    out = np.zeros(h.shape[1], dtype=bool)
    out[overlap.row[mask]] = True
    return out


def _column_degrees(nu: DegreeDistribution, profile: ProtectionProfile) -> np.ndarray:
    counts = apportion(nu, profile.n)
    degs = np.sort(np.repeat(list(counts), list(counts.values())))[::-1]
    k1, k2, r = profile.k1, profile.k2, profile.r
    pc1 = degs[:k1]
    rest = degs[k1:]
    # parity takes the lowest remaining degrees, PC2 the others
    parity = np.sort(rest[len(rest) - r :])[::-1]
    pc2 = rest[: len(rest) - r]
    # parity column j can only reach rows j..r-1, so the last one has degree 1
    parity = np.minimum(parity, np.arange(r, 0, -1))
    return np.concatenate([pc1, pc2, parity]).astype(np.int64)


def _row_degrees(c: DegreeDistribution, r: int, n_edges: int, rng) -> np.ndarray:
    counts = apportion(c, r)
    rows = np.sort(np.repeat(list(counts), list(counts.values())))
    diff = n_edges - int(rows.sum())
    # shift whole units between the lowest/highest rows so the histogram stays concentrated
    while diff > 0:
        rows[np.argmin(rows)] += 1
        diff -= 1
    while diff < 0:
        rows[np.argmax(rows)] -= 1
        diff += 1
    rng.shuffle(rows)
    return rows


def build(nu: DegreeDistribution, c: DegreeDistribution, profile: ProtectionProfile,
          seed: int = 0, separation_effort: int = 8) -> UepCode:
    """Build a zigzag-random parity-check matrix for the given ensemble.

    Parameters
    ----------
    nu, c : DegreeDistribution
        Node-perspective variable and check distributions.
    profile : ProtectionProfile
    seed : int
        Construction seed; equal seeds give bit-identical matrices.
    separation_effort : int
        Number of candidate rows drawn (weighted by spare degree) per edge
        when trying to keep PC1 and PC2 on disjoint checks. A block of rows
        with just enough spare degree is reserved for PC1 and each edge
        prefers a candidate inside its own block. 1 disables the preference
        and places every edge on the row with most spare degree.

    Notes
    -----
    Edges are placed column by column (highest degree first). A row is
    eligible when it has spare degree and does not close a 4-cycle; when
    no such row exists the 4-cycle constraint is dropped and the residual
    count is stored on the result.
    """
    n, k, r = profile.n, profile.k, profile.r
    k1 = profile.k1
    if r < 1:
        raise ConstructionError("code needs at least one parity bit")
    rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), 0x5EED]))
    col_deg = _column_degrees(nu, profile)
    if col_deg.max() > r:
        raise ConstructionError(f"column degree {col_deg.max()} exceeds number of rows {r}")
    n_edges = int(col_deg.sum())
    row_deg = _row_degrees(c, r, n_edges, rng)
    zig = np.full(r, 2)
    zig[0] = 1
    if np.any(row_deg < zig) or row_deg.sum() != n_edges:
        raise ConstructionError("degree sequence unrealizable after rounding repair")

    col_rows: list[list[int]] = [[] for _ in range(n)]
    row_cols: list[list[int]] = [[] for _ in range(r)]
    cap = row_deg.astype(np.int64).copy()

    def add(row, col):
        col_rows[col].append(row)
        row_cols[row].append(col)
        cap[row] -= 1

    for j in range(r):
        add(j, k + j)
        if j + 1 < r:
            add(j + 1, k + j)

    # reserve a block of rows with just enough spare degree for the PC1 edges
    pc1_edges = int(col_deg[:k1].sum())
    order = rng.permutation(r)
    filled = np.cumsum(cap[order])
    zone1 = np.zeros(r, dtype=bool)
    zone1[order[: int(np.searchsorted(filled, pc1_edges)) + 1]] = True
    effort = max(1, int(separation_effort))

    # information columns, highest degree first; parity extras last
    info_order = np.argsort(-col_deg[:k], kind="stable")
    extra_cols = [k + j for j in range(r) if col_deg[k + j] > len(col_rows[k + j])]
    for v in list(info_order) + extra_cols:
        need = col_deg[v] - len(col_rows[v])
        if need <= 0:
            continue
        cls = 1 if v < k1 else (2 if v < k else 3)
        adj = np.zeros(r, dtype=bool)
        forb = np.zeros(r, dtype=bool)
        lo = 0
        if cls == 3:
            # extra parity edges go strictly below the sub-diagonal
            lo = v - k + 2
            adj[:lo] = True
        for row in col_rows[v]:
            adj[row] = True
            for u in row_cols[row]:
                forb[col_rows[u]] = True
        for _ in range(need):
            open_rows = (cap > 0) & ~adj
            ok = open_rows & ~forb
            if not ok.any():
                ok = open_rows
            if not ok.any():
                row = _swap_in(v, lo, cap, col_rows, row_cols, adj, k, rng)
                if row is None:
                    raise ConstructionError(f"could not place edge for column {v}")
            else:
                cand = np.flatnonzero(ok)
                if effort == 1 or cls == 3:
                    # PEG-style: most remaining capacity, random tie-break
                    row = cand[np.argmax(cap[cand] + rng.random(cand.size))]
                else:
                    w = cap[cand] / cap[cand].sum()
                    pick = rng.choice(cand, size=min(effort, cand.size), replace=False, p=w)
                    home = pick[zone1[pick] == (cls == 1)]
                    pool = home if home.size else pick
                    row = pool[np.argmax(cap[pool])]
                add(row, v)
            adj[row] = True
            for u in row_cols[row]:
                forb[col_rows[u]] = True

    rows = np.concatenate([np.asarray(rs, dtype=np.int64) for rs in col_rows])
    cols = np.repeat(np.arange(n), [len(rs) for rs in col_rows])
    h = sp.csr_matrix((np.ones(rows.size, dtype=np.uint8), (rows, cols)), shape=(r, n))
    return UepCode(h, profile, seed=seed, four_cycles=count_four_cycles(h),
                   meta={"separation_effort": effort})


def _swap_in(v, lo, cap, col_rows, row_cols, adj, k, rng):
    """Place an edge of ``v`` when every row with spare degree is already adjacent.

    Moves an existing information edge (u, c2) to a spare row c and gives c2
    to ``v``. Returns the row assigned to ``v`` or None.
    """
    spare = np.flatnonzero(cap > 0)
    for c in rng.permutation(spare):
        for c2 in rng.permutation(np.flatnonzero(~adj)):
            if c2 < lo:
                continue
            for u in row_cols[c2]:
                if u >= k or u == v or c in col_rows[u]:
                    continue
                col_rows[u][col_rows[u].index(c2)] = c
                row_cols[c2].remove(u)
                row_cols[c].append(u)
                col_rows[v].append(c2)
                row_cols[c2].append(v)
                cap[c] -= 1
                return int(c2)
    return None


# ----------------------------------------------------------------------------
# serialisation

def write_alist(h, path) -> None:
    """Write H in alist format (1-based indices, zero-padded lists)."""
    h = sp.csr_matrix(h)
    h.sort_indices()
    hc = h.tocsc()
    hc.sort_indices()
    m, n = h.shape
    cdeg = np.diff(hc.indptr)
    rdeg = np.diff(h.indptr)
    lines = [f"{n} {m}", f"{cdeg.max()} {rdeg.max()}",
             " ".join(map(str, cdeg)), " ".join(map(str, rdeg))]
    for j in range(n):
        idx = list(hc.indices[hc.indptr[j] : hc.indptr[j + 1]] + 1)
        lines.append(" ".join(map(str, idx + [0] * (cdeg.max() - len(idx)))))
    for i in range(m):
        idx = list(h.indices[h.indptr[i] : h.indptr[i + 1]] + 1)
        lines.append(" ".join(map(str, idx + [0] * (rdeg.max() - len(idx)))))
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> sp.csr_matrix:
    tokens = Path(path).read_text().split()
    it = iter(int(t) for t in tokens)
    n, m = next(it), next(it)
    max_c, _max_r = next(it), next(it)
    cdeg = [next(it) for _ in range(n)]
    _rdeg = [next(it) for _ in range(m)]
    rows, cols = [], []
    for j in range(n):
        idx = [next(it) for _ in range(max_c)]
        idx = [i for i in idx if i > 0]
        if len(idx) != cdeg[j]:
            raise ValueError(f"column {j + 1}: degree {cdeg[j]} but {len(idx)} indices")
        rows += [i - 1 for i in idx]
        cols += [j] * len(idx)
    # row lists are redundant; they are checked against the column lists
    h = sp.csr_matrix((np.ones(len(rows), dtype=np.uint8), (rows, cols)), shape=(m, n))
    if not np.array_equal(np.diff(h.indptr), _rdeg):
        raise ValueError("row degrees disagree with column lists")
    return h


def save_code(code: UepCode, stem) -> tuple[Path, Path]:
    """Write ``<stem>.alist`` and the ``<stem>.json`` class sidecar."""
    stem = Path(stem)
    alist = stem.with_suffix(".alist")
    side = stem.with_suffix(".json")
    write_alist(code.h, alist)
    side.write_text(json.dumps({
        "pc1": code.pc1_cols.tolist(),
        "pc2": code.pc2_cols.tolist(),
        "pc3": code.pc3_cols.tolist(),
        "seed": code.seed,
        "profile": code.profile.to_dict(),
        "four_cycles": code.four_cycles,
        "separation_score": separation_score(code),
        **code.meta,
    }, indent=1))
    return alist, side


def load_code(stem) -> UepCode:
    stem = Path(stem)
    h = read_alist(stem.with_suffix(".alist"))
    side = json.loads(stem.with_suffix(".json").read_text())
    profile = ProtectionProfile(**side["profile"])
    expect = {"pc1": range(0, profile.k1), "pc2": range(profile.k1, profile.k),
              "pc3": range(profile.k, profile.n)}
    for key, rng_ in expect.items():
        if list(side[key]) != list(rng_):
            raise ValueError(f"sidecar {key} columns do not follow the [PC1|PC2|PC3] layout")
    meta = {k: v for k, v in side.items()
            if k not in ("pc1", "pc2", "pc3", "seed", "profile", "four_cycles", "separation_score")}
    return UepCode(h, profile, seed=side["seed"], four_cycles=side.get("four_cycles", 0), meta=meta)
