"""Complex Hermitian <-> real symmetric PSD embedding."""

import numpy as np


def embed_hermitian_psd(m, n=None):
    """Map a Hermitian matrix M to [[Re M, -Im M], [Im M, Re M]].

    The image is symmetric, and PSD exactly when M is; every eigenvalue of M
    shows up twice.  Raises on non-square input or (when given) an n that
    disagrees with the matrix.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("embedding needs a square matrix")
    if n is not None and n != m.shape[0]:
        raise ValueError("declared size disagrees with the matrix")
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def extract_hermitian(r, tol=1e-10):
    """Inverse of embed_hermitian_psd, averaging the two redundant copies.

    Raises when the real matrix is too far from the embedded structure.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] % 2:
        raise ValueError("expected an even-sized square matrix")
    n = r.shape[0] // 2
    re = 0.5 * (r[:n, :n] + r[n:, n:])
    im = 0.5 * (r[n:, :n] - r[:n, n:])
    scale = max(1.0, np.abs(r).max())
    if (np.abs(r[:n, :n] - r[n:, n:]).max() > tol * scale
            or np.abs(r[n:, :n] + r[:n, n:]).max() > tol * scale):
        raise ValueError("matrix does not carry the embedded structure")
    m = re + 1j * im
    return 0.5 * (m + m.conj().T)
