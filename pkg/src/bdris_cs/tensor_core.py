"""
Complex linear-algebra kernel.

Every routine here uses column-major (first-index-fastest) element order:
``vec`` stacks columns, Kronecker compound indices vary the right-hand factor
fastest, and the mode-3 unfolding of an ``(d1, d2, d3)`` tensor puts slice
``t[:, :, l]`` in row ``l`` with compound column ``j = i1 + i2 * d1``.
"""

import numpy as np

from .errors import InvalidArgument, NumericFailure

# singular values below ZERO_SV_RTOL * s[0] are treated as zero
ZERO_SV_RTOL = 1e-12


def as_cmatrix(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidArgument(f"expected a matrix, got array with shape {a.shape}")
    return a


def kron(a, b):
    """Kronecker product ``a (x) b`` with the ``b`` index varying fastest."""
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def block_kron(a, b, q):
    """Block Kronecker product ``[a_1 (x) b_1, ..., a_q (x) b_q]``.

    ``a`` and ``b`` are split into ``q`` consecutive column blocks of equal
    width and the per-block Kronecker products are concatenated horizontally.
    """
    a, b = as_cmatrix(a), as_cmatrix(b)
    if q < 1 or a.shape[1] % q or b.shape[1] % q:
        raise InvalidArgument(
            f"column counts {a.shape[1]}, {b.shape[1]} not divisible into {q} blocks"
        )
    wa, wb = a.shape[1] // q, b.shape[1] // q
    return np.hstack(
        [np.kron(a[:, i * wa:(i + 1) * wa], b[:, i * wb:(i + 1) * wb]) for i in range(q)]
    )


def khatri_rao_cols(a, b):
    """Columnwise Khatri-Rao product: column k is ``a[:, k] (x) b[:, k]``."""
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.shape[1] != b.shape[1]:
        raise InvalidArgument(f"column mismatch: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def vec(m):
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, rows, cols):
    return np.asarray(v).reshape(rows, cols, order="F")


def mode3_unfold(t):
    """``(d1, d2, d3)`` tensor -> ``(d3, d1*d2)`` matrix, first index fastest."""
    t = np.asarray(t)
    if t.ndim != 3:
        raise InvalidArgument(f"expected a 3-way tensor, got shape {t.shape}")
    d1, d2, d3 = t.shape
    return t.reshape(d1 * d2, d3, order="F").T


def mode3_fold(m, d1, d2):
    """Inverse of :func:`mode3_unfold`."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[1] != d1 * d2:
        raise InvalidArgument(f"cannot fold {m.shape} into ({d1}, {d2}, *)")
    return m.T.reshape(d1, d2, m.shape[0], order="F")


def svd(m, full_matrices=False):
    """Thin (or full) SVD returning ``(U, s, V)`` with ``m = U diag(s) V^H``.

    ``s`` is sorted in descending order. Convergence failures are raised as
    :class:`NumericFailure`.
    """
    m = as_cmatrix(m)
    if not np.all(np.isfinite(m)):
        raise NumericFailure("svd input contains NaN or Inf")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"svd did not converge: {exc}") from exc
    return u, s, vh.conj().T


def numerical_rank(s):
    s = np.asarray(s)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s >= ZERO_SV_RTOL * s[0]))


def ls_solve(a, b):
    """Minimum-norm least-squares solution of ``a x = b`` (pseudoinverse)."""
    a = as_cmatrix(a)
    b = np.asarray(b, dtype=np.complex128)
    squeeze = b.ndim == 1
    b = as_cmatrix(b)
    if a.shape[0] != b.shape[0]:
        raise InvalidArgument(f"row mismatch: {a.shape[0]} vs {b.shape[0]}")
    try:
        x = np.linalg.lstsq(a, b, rcond=None)[0]
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"least squares did not converge: {exc}") from exc
    return x[:, 0] if squeeze else x


def rel_error(a, b):
    """``||a - b||_F / ||b||_F`` (absolute error when ``b`` is zero)."""
    a, b = np.asarray(a), np.asarray(b)
    ref = np.linalg.norm(b)
    err = np.linalg.norm(a - b)
    return err / ref if ref > 0 else err
