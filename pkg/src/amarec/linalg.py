"""Randomized truncated SVD and fixed item embeddings.

The item embedding matrix is the right factor of a rank-h randomized SVD of
the (train) interaction matrix: Gaussian range finding, a configurable
number of power iterations with QR re-orthonormalization after every pass,
and a deterministic sign convention so embeddings reproduce across runs.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class SvdResult:
    left: np.ndarray           # m x h
    singular_values: np.ndarray  # length h, nonincreasing
    right: np.ndarray          # n x h


def randomized_svd(R, rank, power_iters=10, oversample=10, seed=0):
    """Rank-``rank`` randomized SVD of a (sparse or dense) m x n matrix.

    Deterministic for a fixed seed. Each power iteration re-orthonormalizes
    via QR to avoid losing the small singular directions.
    """
    m, n = R.shape
    if not 1 <= rank <= min(m, n):
        raise ValueError(f"rank {rank} out of range for {m}x{n} matrix")
    if power_iters < 0:
        raise ValueError("power_iters must be >= 0")

    k = min(rank + oversample, min(m, n))
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((n, k))

    Y = _matmul(R, omega)
    Q, _ = np.linalg.qr(Y)
    for _ in range(power_iters):
        Z, _ = np.linalg.qr(_rmatmul(R, Q))
        Q, _ = np.linalg.qr(_matmul(R, Z))

    B = _rmatmul(R, Q).T          # k x n
    Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
    U = Q @ Ub

    U = U[:, :rank]
    s = s[:rank].copy()
    V = Vt[:rank].T.copy()

    # sign convention: largest-magnitude entry of each right column positive
    for j in range(rank):
        idx = np.argmax(np.abs(V[:, j]))
        if V[idx, j] < 0:
            V[:, j] = -V[:, j]
            U[:, j] = -U[:, j]
    return SvdResult(left=np.ascontiguousarray(U), singular_values=s,
                     right=np.ascontiguousarray(V))


def _matmul(R, X):
    out = R @ X
    return np.asarray(out)


def _rmatmul(R, X):
    # R^T @ X without materializing the transpose of a sparse matrix twice
    if sp.issparse(R):
        return np.asarray(R.T @ X)
    return R.T @ X


def item_embeddings(svd, scale="none"):
    """Item embedding matrix from an SvdResult.

    ``none`` returns the right factor unchanged; ``sqrt-sigma`` scales each
    column by the square root of its singular value.
    """
    if scale == "none":
        return svd.right.copy()
    if scale == "sqrt-sigma":
        return svd.right * np.sqrt(svd.singular_values)[None, :]
    raise ValueError(f"unknown scale {scale!r}")


_EMB_MAGIC = b"AMAEMB01"


def save_embeddings(V, path, meta=None):
    """Binary embedding file: magic, uint64 dims, row-major float64 payload.

    A JSON metadata file is written next to it when ``meta`` is given.
    """
    V = np.ascontiguousarray(V, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(_EMB_MAGIC)
        fh.write(struct.pack("<QQ", V.shape[0], V.shape[1]))
        fh.write(V.tobytes())
    if meta is not None:
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_embeddings(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _EMB_MAGIC:
            raise ValueError(f"bad magic bytes in {path}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(rows * cols * 8), dtype=np.float64)
    return data.reshape(rows, cols).copy()


def matrix_hash(mat):
    """Stable hash of a sparse matrix's pattern; ties embeddings to their source."""
    coo = mat.tocoo()
    h = hashlib.sha256()
    h.update(struct.pack("<QQ", *mat.shape))
    order = np.lexsort((coo.col, coo.row))
    h.update(coo.row[order].astype(np.int64).tobytes())
    h.update(coo.col[order].astype(np.int64).tobytes())
    return h.hexdigest()
