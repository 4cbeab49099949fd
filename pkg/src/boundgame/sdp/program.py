"""Conic program container and compiled solver data.

A program holds symmetric per-block data in SDPA-like sparse semantics: an
entry (block, i, j, v) with i <= j sets both M[i, j] and M[j, i] to v.
Block sizes are positive for dense PSD blocks and negative for diagonal
(elementwise nonnegative) blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class ConicProgram:
    sense: str
    block_sizes: list[int]
    obj_entries: list[tuple[int, int, int, float]] = field(default_factory=list)
    con_entries: list[list[tuple[int, int, int, float]]] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if not self.block_sizes or any(s == 0 for s in self.block_sizes):
            raise ValueError("block sizes must be nonzero")

    @property
    def n_constraints(self) -> int:
        return len(self.rhs)

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)

    def _check_entry(self, blk: int, i: int, j: int):
        if not (0 <= blk < self.n_blocks):
            raise ValueError(f"block index {blk} out of range")
        size = abs(self.block_sizes[blk])
        if not (0 <= i <= j < size):
            raise ValueError(f"entry ({i}, {j}) out of range for block of size {size}")
        if self.block_sizes[blk] < 0 and i != j:
            raise ValueError("diagonal blocks admit diagonal entries only")

    def add_objective(self, blk: int, i: int, j: int, value: float):
        self._check_entry(blk, i, j)
        if value != 0.0:
            self.obj_entries.append((blk, i, j, float(value)))

    def add_constraint(self, entries, rhs: float) -> int:
        """Append one equality row sum_entries <A, X> = rhs; returns its index."""
        row = []
        for blk, i, j, v in entries:
            if j < i:
                i, j = j, i
            self._check_entry(blk, i, j)
            if v != 0.0:
                row.append((blk, i, j, float(v)))
        self.con_entries.append(row)
        self.rhs.append(float(rhs))
        return len(self.rhs) - 1

    # -- dense views used by tests and by the solver compile step ----------

    def objective_blocks(self) -> list[np.ndarray]:
        return _entries_to_blocks(self.block_sizes, self.obj_entries)

    def constraint_blocks(self, k: int) -> list[np.ndarray]:
        return _entries_to_blocks(self.block_sizes, self.con_entries[k])

    def canonical_entries(self):
        """Sorted, duplicate-merged entry lists (for equality/round-trip tests)."""

        def canon(entries):
            acc: dict[tuple[int, int, int], float] = {}
            for blk, i, j, v in entries:
                acc[(blk, i, j)] = acc.get((blk, i, j), 0.0) + v
            return sorted((k, v) for k, v in acc.items() if v != 0.0)

        return canon(self.obj_entries), [canon(r) for r in self.con_entries], list(self.rhs)


def _entries_to_blocks(block_sizes, entries) -> list[np.ndarray]:
    out = []
    for s in block_sizes:
        n = abs(s)
        out.append(np.zeros((n, n)) if s > 0 else np.zeros(n))
    for blk, i, j, v in entries:
        if block_sizes[blk] > 0:
            out[blk][i, j] += v
            if i != j:
                out[blk][j, i] += v
        else:
            out[blk][i] += v
    return out


def prune_dependent_rows(prog: ConicProgram) -> tuple["ConicProgram", np.ndarray]:
    """Drop linearly dependent equality rows via pivoted Cholesky of A A'.

    Valid whenever the constraint system is consistent (it is, for any
    program whose rows all hold on some exact feasible point): a dependency
    among rows then extends to the right-hand sides automatically.
    """
    from scipy.linalg.lapack import dpstrf

    m = prog.n_constraints
    data = [
        _BlockData(
            size,
            m,
            [[(i, j, v) for (_b, i, j, v) in row if _b == bi] for row in prog.con_entries],
            None,
        )
        for bi, size in enumerate(prog.block_sizes)
    ]
    gram = np.zeros((m, m))
    for d in data:
        gram += (d.p @ d.p.T).toarray()
    scale = float(np.max(np.diag(gram)))
    _, piv, rank, _ = dpstrf(gram, tol=1e-12 * scale, lower=1)
    keep = np.sort(piv[:rank] - 1)
    pruned = ConicProgram(prog.sense, list(prog.block_sizes))
    pruned.obj_entries = list(prog.obj_entries)
    for k in keep:
        pruned.con_entries.append(list(prog.con_entries[k]))
        pruned.rhs.append(prog.rhs[k])
    return pruned, keep


@dataclass
class SdpSolution:
    """Primal-dual result of one solve.

    For sense=max the primal value is the maximum estimate and the dual
    value is an upper bound (primal <= dual at optimality up to the gap);
    for sense=min the dual value is a lower bound.
    """

    sense: str
    status: str  # optimal | numerical-limit | infeasible
    primal_value: float
    dual_value: float
    primal_blocks: list[np.ndarray]
    dual_multipliers: np.ndarray
    dual_slack_blocks: list[np.ndarray]
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    stop_reason: str = ""


    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# Compiled form consumed by the interior-point iteration.
# ---------------------------------------------------------------------------

_OUTER_MAX_TERMS = 64


class _BlockData:
    """Per-block constraint operator with a Schur-assembly strategy.

    Sparse blocks batch rank-one updates over the expanded constraint
    triplets (BLAS matmuls), with dense rows multiplied out individually;
    'stack' blocks hold the constraint matrices as one dense array, the
    natural form for the block-diagonalized relaxation solves.
    """

    def __init__(self, size: int, m: int, con_entries, c_block):
        self.is_diag = size < 0
        self.n = abs(size)
        self.m = m
        self.c = c_block  # dense (n, n) or diag vector (n,)

        rows, cols, vals, cons = [], [], [], []
        for k, row in enumerate(con_entries):
            for i, j, v in row:
                rows.append(i)
                cols.append(j)
                vals.append(v)
                cons.append(k)
                if i != j:
                    rows.append(j)
                    cols.append(i)
                    vals.append(v)
                    cons.append(k)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        cons = np.asarray(cons, dtype=np.int64)
        self.nnz = len(vals)

        if self.is_diag:
            self.p = sp.csr_matrix((vals, (cons, rows)), shape=(m, self.n))
            self.mode = "diag"
            return

        flat = rows * self.n + cols
        self.p = sp.csr_matrix((vals, (cons, flat)), shape=(m, self.n * self.n))
        self.mode = "outer"
        self._build_outer()

    @classmethod
    def from_stack(cls, m: int, stack: np.ndarray, c_block: np.ndarray) -> "_BlockData":
        """Dense constraint stack of shape (m, n, n), rows symmetric."""
        obj = cls.__new__(cls)
        obj.is_diag = False
        obj.n = stack.shape[1]
        obj.m = m
        obj.c = c_block
        obj.stack = np.ascontiguousarray(stack, dtype=float)
        obj.nnz = int(np.count_nonzero(stack))
        obj.mode = "stack"
        return obj

    def row_norms_sq(self) -> np.ndarray:
        if self.mode == "stack":
            return np.einsum("kab,kab->k", self.stack, self.stack)
        return np.asarray(self.p.multiply(self.p).sum(axis=1)).ravel()

    def rescale_rows(self, inv_scale: np.ndarray):
        if self.mode == "stack":
            self.stack *= inv_scale[:, None, None]
        else:
            self.p = self.p.multiply(inv_scale[:, None]).tocsr()
            if not self.is_diag:
                self._build_outer()

    def _build_outer(self):
        """Partition rows by density for the Schur assembly.

        Rows with few entries combine pairwise through gathered slices of W;
        medium rows batch into BLAS matmuls; a lone dense row (a trace
        constraint, say) would otherwise force the padding width for every
        row in the block, so dense rows multiply out individually.
        """
        coo = self.p.tocoo()
        m, n = self.m, self.n
        per_con = np.bincount(coo.row, minlength=m)
        self.light = np.flatnonzero((per_con > 0) & (per_con <= _OUTER_MAX_TERMS))
        self.heavy = np.flatnonzero(per_con > _OUTER_MAX_TERMS)

        rows = self.light
        kmax = max(int(per_con[rows].max()) if rows.size else 0, 1)
        a_idx = np.zeros((rows.size, kmax), dtype=np.int64)
        b_idx = np.zeros((rows.size, kmax), dtype=np.int64)
        val = np.zeros((rows.size, kmax))
        pos = -np.ones(m, dtype=np.int64)
        pos[rows] = np.arange(rows.size)
        slot = np.zeros(m, dtype=np.int64)
        for k, flat, v in zip(coo.row, coo.col, coo.data):
            pk = pos[k]
            if pk < 0:
                continue
            s = slot[k]
            a_idx[pk, s] = flat // n
            b_idx[pk, s] = flat % n
            val[pk, s] = v
            slot[k] += 1
        self.l_a, self.l_b, self.l_val, self.l_k = a_idx, b_idx, val, kmax

    # -- operator pieces ----------------------------------------------------

    def apply_a(self, x) -> np.ndarray:
        """<A_k, X> for every constraint k."""
        if self.mode == "stack":
            return np.tensordot(self.stack, x, axes=([1, 2], [0, 1]))
        if self.is_diag:
            return self.p @ x
        return self.p @ x.reshape(-1)

    def apply_at(self, y):
        """sum_k y_k A_k as a dense block."""
        if self.mode == "stack":
            return np.tensordot(y, self.stack, axes=([0], [0]))
        if self.is_diag:
            return self.p.T @ y
        return (self.p.T @ y).reshape(self.n, self.n)

    def schur(self, w) -> np.ndarray:
        """Contribution [tr(A_k W A_l W)]_{kl} for the NT scaling point W.

        Light rows batch the rank-one expansion W a b' W into BLAS matmuls;
        heavy rows multiply out densely one at a time.
        """
        if self.mode == "stack":
            t = np.matmul(np.matmul(w, self.stack), w)
            return self.stack.reshape(self.m, -1) @ t.reshape(self.m, -1).T
        if self.is_diag:
            return (self.p.multiply(w * w) @ self.p.T).toarray()
        out = np.zeros((self.m, self.m))
        n = self.n
        ml = self.light.size

        if ml:
            kk = self.l_k
            chunk = max(1, min(ml, int(4e7) // (n * n)))
            for lo in range(0, ml, chunk):
                hi = min(lo + chunk, ml)
                rows = slice(lo, hi)
                a_flat = self.l_a[rows].reshape(-1)
                b_flat = self.l_b[rows].reshape(-1)
                u = (w[:, a_flat].reshape(n, hi - lo, kk) * self.l_val[None, rows]).transpose(1, 0, 2)
                v = w[:, b_flat].reshape(n, hi - lo, kk).transpose(1, 2, 0)
                s_stack = np.matmul(u, v)  # (chunk, n, n)
                cols = self.p @ np.ascontiguousarray(s_stack.reshape(hi - lo, n * n).T)
                out[:, self.light[rows]] = cols
                out[self.light[rows], :] = cols.T

        for k in self.heavy:
            a_k = self.p.getrow(k).toarray().reshape(n, n)
            t = w @ a_k @ w
            col = self.p @ t.reshape(-1)
            out[:, k] = col
            out[k, :] = col
        return out
