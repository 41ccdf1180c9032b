"""Numpy reference implementation of the PSD-cone hot kernels.

Entry arrays describe a sparse affine symmetric expression: entry i adds
wt[i] at positions (p[i], q[i]) and (q[i], p[i]) of the block (p <= q, with
diagonal weights pre-halved so the double placement is uniform).  For the
grouped kernels the entries are sorted by compacted column index and
`starts` marks the first entry of each group.
"""

import numpy as np

NAME = "numpy"

_TRIU = {}


def _triu(n):
    try:
        return _TRIU[n]
    except KeyError:
        iu = np.triu_indices(n)
        off = (iu[0] != iu[1])
        _TRIU[n] = (iu[0], iu[1], off)
        return _TRIU[n]


def svec_pack(u):
    """Scaled upper-triangle vectorization; preserves inner products."""
    n = u.shape[0]
    r, c, off = _triu(n)
    v = u[r, c].copy()
    v[off] *= np.sqrt(2.0)
    return v


def svec_unpack(v, n):
    r, c, off = _triu(n)
    vals = v.copy()
    vals[off] /= np.sqrt(2.0)
    u = np.zeros((n, n))
    u[r, c] = vals
    u[c, r] = vals
    return u


def psd_forward(p, q, wt, col, x, n):
    """Dense symmetric matrix of the expression at the point x (no const)."""
    vals = wt * x[col]
    flat = np.bincount(p * n + q, vals, minlength=n * n)
    flat += np.bincount(q * n + p, vals, minlength=n * n)
    return flat.reshape(n, n)


def psd_adjoint(p, q, wt, starts, u):
    """Per-column inner products <G_j, U> for a symmetric U."""
    vals = 2.0 * wt * u[p, q]
    return np.add.reduceat(vals, starts)


def psd_schur(p, q, wt, starts, pmat):
    """Schur-complement block M[j,k] = tr(G_j P G_k P) for symmetric P."""
    e = pmat[np.ix_(q, p)] * pmat[np.ix_(p, q)]
    e += pmat[np.ix_(q, q)] * pmat[np.ix_(p, p)]
    e *= 2.0 * np.outer(wt, wt)
    return np.add.reduceat(np.add.reduceat(e, starts, axis=0), starts, axis=1)
