"""Simultaneous block-diagonalization of the model's structure matrices.

The transform comes from the eigendecomposition of a random positive
combination of the structure matrices; eigenvalue clusters seed candidate
blocks, which are then merged wherever any structure matrix couples two
clusters. The result is accepted only if the residual off-block mass of
every transformed matrix is negligible, otherwise a fresh seed is tried.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reduced import ReducedMomentModel

LEAKAGE_TOL = 1e-9
CLUSTER_RTOL = 1e-8
MAX_RETRIES = 10


@dataclass
class BlockDiagonalizer:
    transform: np.ndarray = field(repr=False)
    block_slices: list  # index arrays into the transformed basis
    leakage: float
    fallback: bool
    seed: int

    @property
    def block_sizes(self) -> list[int]:
        return [len(ix) for ix in self.block_slices]

    def transform_matrix(self, mat) -> list[np.ndarray]:
        """Per-block components T' M T restricted to each block."""
        out = []
        for ix in self.block_slices:
            q = self.transform[:, ix]
            out.append(np.asarray(q.T @ (mat @ q)))
        return out


def _cluster(eigenvalues: np.ndarray, rtol: float) -> list[np.ndarray]:
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    order = np.argsort(eigenvalues)
    groups = [[order[0]]]
    for idx in order[1:]:
        if eigenvalues[idx] - eigenvalues[groups[-1][-1]] <= rtol * scale:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return [np.asarray(g, dtype=np.int64) for g in groups]


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def block_diagonalize(model: ReducedMomentModel, seed: int = 0) -> BlockDiagonalizer:
    """Find an orthogonal transform splitting all structure matrices.

    Retries coarsen the eigenvalue clustering: when two inequivalent
    components land accidentally close in the random combination, the
    eigenvectors mix them at noise level eps/gap, which the leakage gate
    rejects; merging such near-coincident clusters restores clean blocks.
    Falls back to the identity (one full block) after MAX_RETRIES attempts;
    the fallback is flagged so callers can report the missing reduction.
    """
    mats = list(model.structure.values())
    n = model.size
    for attempt in range(MAX_RETRIES):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(attempt,)))
        weights = rng.uniform(0.1, 1.0, size=len(mats))
        combo = sum(wt * m for wt, m in zip(weights, mats)).toarray()
        combo = (combo + combo.T) / 2
        vals, vecs = np.linalg.eigh(combo)
        rtol = min(CLUSTER_RTOL * 100.0**attempt, 1e-3)
        clusters = _cluster(vals, rtol)

        merged = _merge_coupled(mats, vecs, clusters, rng)
        blocks = [np.concatenate([clusters[c] for c in comp]) for comp in merged]

        diag = _finalize(model, vecs, blocks, seed)
        if diag is not None:
            return diag
    eye = np.eye(n)
    return BlockDiagonalizer(
        transform=eye,
        block_slices=[np.arange(n)],
        leakage=0.0,
        fallback=True,
        seed=seed,
    )


def _merge_coupled(mats, vecs, clusters, rng, probes: int = 3):
    """Union clusters coupled by any structure matrix, probed through
    random vectors per cluster (cheaper than full transforms)."""
    k = len(clusters)
    uf = _UnionFind(k)
    starts = np.cumsum([0] + [len(c) for c in clusters])
    perm = np.concatenate(clusters)
    q = vecs[:, perm]  # columns grouped by cluster
    for _ in range(probes):
        g = np.zeros((q.shape[1], k))
        for ci in range(k):
            lo, hi = starts[ci], starts[ci + 1]
            g[lo:hi, ci] = rng.standard_normal(hi - lo)
        probe = q @ g  # (n, k): one random vector inside each cluster
        for mat in mats:
            image = q.T @ (mat @ probe)  # (total, k)
            norm = max(1.0, float(np.max(np.abs(image))))
            for ci in range(k):
                col = image[:, ci]
                hits = np.flatnonzero(np.abs(col) > 1e-7 * norm)
                for h in hits:
                    cj = int(np.searchsorted(starts, h, side="right") - 1)
                    if cj != ci:
                        uf.union(ci, cj)
    comps: dict[int, list[int]] = {}
    for ci in range(k):
        comps.setdefault(uf.find(ci), []).append(ci)
    return list(comps.values())


def _finalize(model, vecs, blocks, seed):
    """Check the Frobenius norm of the off-block entries of every transform.

    The off-block entries are summed directly (squares of small numbers),
    never by subtracting nearly equal norms, which would drown the signal
    in cancellation error.
    """
    perm = np.concatenate(blocks)
    starts = np.cumsum([0] + [len(b) for b in blocks])
    q = vecs[:, perm]
    worst = 0.0
    for mat in model.structure.values():
        t = q.T @ (mat @ q)
        off_sq = 0.0
        for bi in range(len(blocks)):
            lo, hi = starts[bi], starts[bi + 1]
            rows = t[lo:hi]
            off_sq += float(np.sum(rows[:, : lo] ** 2)) + float(np.sum(rows[:, hi:] ** 2))
        off = np.sqrt(off_sq)
        max_entry = float(np.abs(mat.data).max()) if mat.nnz else 1.0
        worst = max(worst, off / max(max_entry, 1e-300))
        if off > LEAKAGE_TOL * max(max_entry, 1.0):
            return None
    slices = []
    for bi in range(len(blocks)):
        slices.append(np.asarray(perm[starts[bi] : starts[bi + 1]], dtype=np.int64))
    return BlockDiagonalizer(
        transform=vecs,
        block_slices=slices,
        leakage=worst,
        fallback=False,
        seed=seed,
    )
