"""Dense linear algebra primitives used by the chart modules.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype ``float64``.
Functions here validate shapes and finiteness, then defer to LAPACK through
numpy/scipy.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, RankDeficient

#: Relative singular value cutoff used for all rank decisions.
RANK_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array (no copy when possible)."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def frozen(a, name: str = "matrix") -> np.ndarray:
    """Return a read-only float64 copy of ``a``."""
    m = np.array(as_matrix(a, name), dtype=np.float64, copy=True)
    m.flags.writeable = False
    return m


@dataclass(frozen=True)
class RankDecision:
    """Outcome of a numerical rank test.

    ``tolerance_used`` is the absolute cutoff ``tol_rel * sigma_max``; for a
    zero matrix it falls back to ``tol_rel`` itself so that it stays positive.
    """

    numerical_rank: int
    smallest_kept_sv: float
    largest_dropped_sv: float
    tolerance_used: float


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(as_matrix(a), compute_uv=False)


def sigma_ratio(a) -> float:
    """``sigma_min / sigma_max`` of a square or rectangular matrix (0 for zero)."""
    s = singular_values(a)
    if s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def numerical_rank(a, tol_rel: float = RANK_TOL) -> RankDecision:
    """Count singular values strictly above ``tol_rel * sigma_max``."""
    if not 0.0 < tol_rel < 1.0:
        raise ValueError(f"tol_rel must lie in (0, 1), got {tol_rel}")
    s = singular_values(a)
    smax = float(s[0])
    if smax == 0.0:
        return RankDecision(0, 0.0, 0.0, tol_rel)
    cutoff = tol_rel * smax
    kept = s > cutoff
    rank = int(np.count_nonzero(kept))
    return RankDecision(
        numerical_rank=rank,
        smallest_kept_sv=float(s[rank - 1]),
        largest_dropped_sv=float(s[rank]) if rank < s.size else 0.0,
        tolerance_used=cutoff,
    )


def _check_full_column_rank(z: np.ndarray, name: str = "Z") -> None:
    k, r = z.shape
    if k < r:
        raise DimensionMismatch(f"{name} must have at least as many rows as columns, got {z.shape}")
    got = numerical_rank(z).numerical_rank
    if got < r:
        raise RankDeficient(f"{name} has numerical rank {got} < {r}")


def pseudo_inverse(z) -> np.ndarray:
    """Moore-Penrose pseudo-inverse ``(Z^T Z)^{-1} Z^T`` of a full column rank ``Z``.

    Evaluated through a thin QR factorisation ``Z = QR`` as ``R^{-1} Q^T``.
    """
    z = as_matrix(z, "Z")
    _check_full_column_rank(z)
    q, r = np.linalg.qr(z, mode="reduced")
    return solve_triangular(r, q.T, lower=False)


def orthogonal_complement(z) -> np.ndarray:
    """Orthonormal basis of ``col(Z)^perp``, shape ``k x (k - r)``.

    Trailing columns of the complete QR factorisation of ``Z``.
    """
    z = as_matrix(z, "Z")
    k, r = z.shape
    if r >= k:
        raise DimensionMismatch(f"complement needs r < k, got k={k}, r={r}")
    _check_full_column_rank(z)
    q, _ = np.linalg.qr(z, mode="complete")
    return q[:, r:]


def factor_rank_r(a, r: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor the best rank-``r`` part of ``A`` as ``U @ G @ V.T``.

    ``U`` and ``V`` have orthonormal columns and ``G = diag(s_1, ..., s_r)``.

    Raises
    ------
    RankDeficient
        If the numerical rank of ``A`` is below ``r``.
    """
    a = as_matrix(a, "A")
    if not 1 <= r <= min(a.shape):
        raise DimensionMismatch(f"rank {r} incompatible with shape {a.shape}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    rank = int(np.count_nonzero(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    if rank < r:
        raise RankDeficient(f"matrix has numerical rank {rank} < {r}")
    return u[:, :r].copy(), np.diag(s[:r]), vt[:r].T.copy()


def truncated_svd(a, r: int) -> np.ndarray:
    """Best rank-``r`` approximation (Eckart-Young), without rank checks."""
    a = as_matrix(a, "A")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return (u[:, :r] * s[:r]) @ vt[:r]


def random_full_rank(k: int, r: int, seed=None) -> np.ndarray:
    """Gaussian ``k x r`` matrix of full column rank."""
    if not 1 <= r <= k:
        raise DimensionMismatch(f"need 1 <= r <= k, got k={k}, r={r}")
    rng = np.random.default_rng(seed)
    while True:
        z = rng.standard_normal((k, r))
        if numerical_rank(z).numerical_rank == r:
            return z


def random_rank_r(n: int, m: int, r: int, seed=None) -> np.ndarray:
    """Product of Gaussian ``n x r`` and ``r x m`` factors (rank exactly ``r``)."""
    if not 1 <= r <= min(n, m):
        raise DimensionMismatch(f"need 1 <= r <= min(n, m), got n={n}, m={m}, r={r}")
    rng = np.random.default_rng(seed)
    while True:
        a = rng.standard_normal((n, r)) @ rng.standard_normal((r, m))
        if numerical_rank(a).numerical_rank == r:
            return a


def random_orthonormal(k: int, r: int, seed=None) -> np.ndarray:
    q, _ = np.linalg.qr(random_full_rank(k, r, seed))
    return q


# -- text format -------------------------------------------------------------
# First line ``rows cols`` then one whitespace separated row per line.


def format_matrix(a) -> str:
    a = as_matrix(a)
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines.extend(" ".join(f"{x:.17g}" for x in row) for row in a)
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    blocks = parse_matrix_blocks(text)
    if len(blocks) != 1:
        raise ValueError(f"expected a single matrix block, found {len(blocks)}")
    return blocks[0]


def _parse_block(lines: list[str]) -> np.ndarray:
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"bad matrix header {lines[0]!r}")
    rows, cols = int(header[0]), int(header[1])
    body = lines[1:]
    if len(body) != rows:
        raise ValueError(f"header announces {rows} rows, found {len(body)}")
    data = []
    for line in body:
        vals = [float(tok) for tok in line.split()]
        if len(vals) != cols:
            raise ValueError(f"row has {len(vals)} entries, expected {cols}")
        data.append(vals)
    return as_matrix(np.array(data, dtype=np.float64).reshape(rows, cols))


def parse_matrix_blocks(text: str) -> list[np.ndarray]:
    """Parse consecutive matrix blocks separated by blank lines."""
    blocks, current = [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            if current:
                blocks.append(_parse_block(current))
                current = []
            continue
        current.append(line)
    if current:
        blocks.append(_parse_block(current))
    return blocks


def format_matrix_blocks(mats: Iterable) -> str:
    return "\n".join(format_matrix(m) for m in mats)


def _open(target, mode):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode, encoding="utf-8")
    return None


def write_matrix(target: str | os.PathLike | TextIO, a) -> None:
    text = format_matrix(a)
    fh = _open(target, "w")
    if fh is None:
        target.write(text)
        return
    with fh:
        fh.write(text)


def read_matrix(source: str | os.PathLike | TextIO) -> np.ndarray:
    fh = _open(source, "r")
    if fh is None:
        return parse_matrix(source.read())
    with fh:
        return parse_matrix(fh.read())


def read_matrix_blocks(source) -> list[np.ndarray]:
    if isinstance(source, io.TextIOBase):
        return parse_matrix_blocks(source.read())
    with open(source, "r", encoding="utf-8") as fh:
        return parse_matrix_blocks(fh.read())
