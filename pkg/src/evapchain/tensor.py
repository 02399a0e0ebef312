"""Dense tensor kernels: contraction, QR splitting, truncated SVD.

Tensors are numpy complex128 arrays in C (row-major) order throughout the
package; snapshots and the statevector conversions rely on that
linearization.  ``svd_truncate`` implements the bond compression used by
both time evolution and the variational ground-state search: keep at most
``max_bond`` singular values, and beyond that keep the smallest rank whose
relative discarded weight (sum of squared dropped singular values over the
total) stays within ``cutoff``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class TruncationPolicy:
    """Bond compression parameters.

    ``max_bond`` is a hard cap on the kept rank; ``cutoff`` is the relative
    discarded-weight threshold.  ``cutoff=0`` keeps every singular value
    that carries weight (exact up to the cap).
    """

    max_bond: int = 100
    cutoff: float = 1e-5

    def __post_init__(self) -> None:
        if self.max_bond < 1:
            raise ValueError(f"max_bond must be >= 1, got {self.max_bond}")
        if not 0.0 <= self.cutoff < 1.0:
            raise ValueError(f"cutoff must lie in [0, 1), got {self.cutoff}")


# No cap, no weight threshold: lossless splits for small exact runs.
EXACT = TruncationPolicy(max_bond=2**62, cutoff=0.0)


@dataclass
class SvdResult:
    """Truncated SVD of a tensor split into a (left axes, right axes) matrix.

    ``u`` carries the left axes plus a new bond axis of size k, ``vdag`` the
    bond axis plus the right axes, and ``s`` the k kept singular values in
    non-increasing order.  ``discarded_weight`` is relative to the total
    squared weight.  ``degenerate`` marks the zero-tensor edge case, where a
    trivial rank-1 factorization is returned.
    """

    u: np.ndarray
    s: np.ndarray
    vdag: np.ndarray
    discarded_weight: float
    degenerate: bool = False


def contract(a: np.ndarray, b: np.ndarray, pairs) -> np.ndarray:
    """Contract ``a`` with ``b`` over ``pairs`` of axes [(ax_a, ax_b), ...].

    Output axes are the unpaired axes of ``a`` in order, followed by the
    unpaired axes of ``b`` in order.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    axes_a = [int(p[0]) for p in pairs]
    axes_b = [int(p[1]) for p in pairs]
    for ax_a, ax_b in zip(axes_a, axes_b):
        if a.shape[ax_a] != b.shape[ax_b]:
            raise ValueError(
                "axis extent mismatch: a.shape[%d]=%d vs b.shape[%d]=%d"
                % (ax_a, a.shape[ax_a], ax_b, b.shape[ax_b])
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def _split_shapes(t: np.ndarray, split: int) -> tuple[tuple, tuple]:
    if not 0 < split < t.ndim:
        raise ValueError(
            f"split must leave both groups non-empty: split={split}, ndim={t.ndim}"
        )
    return t.shape[:split], t.shape[split:]


def _robust_svd(mat: np.ndarray):
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but dependable.
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")


def svd_truncate(t: np.ndarray, split: int, policy: TruncationPolicy) -> SvdResult:
    """Truncated SVD of ``t`` with axes [0:split) as rows, [split:) as columns.

    The kept rank is min(max_bond, smallest rank whose relative discarded
    weight is within cutoff), and never less than 1.  Exactly-zero trailing
    singular values are always dropped.  The kept spectrum is returned as is
    (no renormalization); callers decide how to restore the norm.
    """
    t = np.asarray(t, dtype=complex)
    left_shape, right_shape = _split_shapes(t, split)
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite entries")
    m = int(np.prod(left_shape))
    n = int(np.prod(right_shape))
    mat = t.reshape(m, n)
    u, s, vdag = _robust_svd(mat)

    sq = s.astype(float) ** 2
    # The running sum must be the same object on both sides of the rank
    # search: mixing np.sum (pairwise) with np.cumsum (sequential) can leave
    # the final dropped weight at +epsilon instead of exactly zero, which
    # would make the search come up empty.
    csum = np.cumsum(sq)
    total = float(csum[-1])
    if total == 0.0:
        u0 = np.zeros((m, 1), dtype=complex)
        v0 = np.zeros((1, n), dtype=complex)
        u0[0, 0] = 1.0
        v0[0, 0] = 1.0
        return SvdResult(
            u=u0.reshape(left_shape + (1,)),
            s=np.zeros(1),
            vdag=v0.reshape((1,) + right_shape),
            discarded_weight=0.0,
            degenerate=True,
        )

    # dropped[i] is the weight discarded when keeping i+1 values; it is
    # non-increasing and ends at exactly zero, so the first entry within
    # threshold gives the rank.
    dropped = total - csum
    rank = int(np.argmax(dropped <= policy.cutoff * total)) + 1
    k = min(policy.max_bond, rank)
    discarded = float(max(dropped[k - 1], 0.0) / total)
    return SvdResult(
        u=np.ascontiguousarray(u[:, :k]).reshape(left_shape + (k,)),
        s=s[:k].astype(float),
        vdag=np.ascontiguousarray(vdag[:k]).reshape((k,) + right_shape),
        discarded_weight=discarded,
    )


def qr_split(t: np.ndarray, split: int) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR of ``t`` with axes [0:split) as rows.

    Returns (q, r) with q carrying the left axes plus the new bond axis
    (orthonormal columns as a matrix) and r the bond axis plus the right
    axes, so that contracting them over the bond reconstructs ``t``.
    """
    t = np.asarray(t, dtype=complex)
    left_shape, right_shape = _split_shapes(t, split)
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite entries")
    mat = t.reshape(int(np.prod(left_shape)), int(np.prod(right_shape)))
    q, r = np.linalg.qr(mat)
    k = q.shape[1]
    return q.reshape(left_shape + (k,)), r.reshape((k,) + right_shape)
