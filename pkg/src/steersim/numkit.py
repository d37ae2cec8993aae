"""Small complex linear-algebra kernel shared by all schemes.

Vectors and matrices are plain ``numpy`` arrays of ``complex128``; the
aliases ``CVec`` and ``CMat`` only document intent.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError, NumericalError

CVec = np.ndarray
CMat = np.ndarray

PINV_RTOL = 1e-12


class SvdResult(NamedTuple):
    """Thin SVD ``A = U @ diag(sigma) @ V^H``.

    ``V`` holds the right singular vectors as columns (not ``V^H``).
    """

    U: CMat
    sigma: np.ndarray
    V: CMat


def _as_matrix(A) -> CMat:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or min(A.shape) < 1:
        raise DomainError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise DomainError("matrix has non-finite entries")
    return A


def svd(A) -> SvdResult:
    """Thin SVD with singular values sorted in descending order."""
    A = _as_matrix(A)
    try:
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for {A.shape} matrix") from exc
    if not (np.isfinite(s).all() and np.isfinite(U).all() and np.isfinite(Vh).all()):
        raise NumericalError("SVD produced non-finite factors")
    return SvdResult(U, s, Vh.conj().T)


def pinv(A) -> CMat:
    """Moore-Penrose pseudo-inverse; singular values below ``1e-12 * max`` are dropped."""
    A = _as_matrix(A)
    U, s, V = svd(A)
    if s[0] == 0.0:
        return np.zeros((A.shape[1], A.shape[0]), dtype=complex)
    keep = s > PINV_RTOL * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (V * s_inv) @ U.conj().T


def inner(a, b) -> complex:
    """Inner product ``a^H b`` (conjugate-linear in ``a``)."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.size} vs {b.size}")
    return complex(np.vdot(a, b))


def norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=complex).ravel()))


def projector(d) -> CMat:
    """Orthogonal projector ``d d^H / (d^H d)`` onto the span of ``d``.

    The Hermitian form is used for complex ``d``; the plain-transpose form
    is not idempotent there.
    """
    d = np.asarray(d, dtype=complex).ravel()
    nn = float(np.real(np.vdot(d, d)))
    if not np.isfinite(nn) or nn <= 0.0:
        raise DomainError("projector of a zero (or non-finite) vector")
    return np.outer(d, d.conj()) / nn


def span_projector(columns) -> CMat:
    """Orthogonal projector onto the column span of ``columns`` (n x k)."""
    Y = np.asarray(columns, dtype=complex)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[1] == 0:
        return np.zeros((Y.shape[0], Y.shape[0]), dtype=complex)
    U, s, _ = svd(Y)
    if s[0] == 0.0:
        return np.zeros((Y.shape[0], Y.shape[0]), dtype=complex)
    Ur = U[:, s > PINV_RTOL * s[0]]
    return Ur @ Ur.conj().T


def unit(v) -> CVec:
    """``v / ||v||``; raises for the zero vector."""
    v = np.asarray(v, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DomainError("cannot normalise the zero vector")
    return v / n
