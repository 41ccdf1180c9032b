"""Schur-complement certificate for lifted quadratic equalities.

For Y > 0, the pair of conditions

    [[Omega, X^H], [X, Y]]  PSD      and      tr(Omega - X^H Y^{-1} X) <= 0

forces Omega = X^H Y^{-1} X: the block PSD condition gives
Omega >= X^H Y^{-1} X, and the trace condition kills the slack.  This is what
lets a solver keep the lifted Gram variables tight.
"""

import numpy as np


def check_lemma1(omega, x, y, tol=1e-9):
    """True when omega equals x^H y^{-1} x within tol, certified as above."""
    omega = np.atleast_2d(np.asarray(omega, dtype=complex))
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    if y.shape[0] != y.shape[1] or omega.shape[0] != omega.shape[1]:
        raise ValueError("omega and y must be square")
    if x.shape != (y.shape[0], omega.shape[0]):
        raise ValueError("x must map the omega space into the y space")
    ev_y = np.linalg.eigvalsh(0.5 * (y + y.conj().T))
    if ev_y.min() <= 1e-12 * max(1.0, ev_y.max()):
        raise ValueError("y must be positive definite")

    block = np.block([[omega, x.conj().T], [x, y]])
    block = 0.5 * (block + block.conj().T)
    if np.linalg.eigvalsh(block).min() < -tol:
        return False
    slack = np.trace(omega - x.conj().T @ np.linalg.solve(y, x)).real
    return bool(slack <= tol)
