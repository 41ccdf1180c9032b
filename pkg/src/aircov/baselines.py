"""Comparison schemes and the scalar exhaustive-search oracle.

The three fixed-noise baselines freeze V and re-run the same penalized
descent over the remaining variables, so every scheme faces the identical
covertness and power constraints.
"""

import enum

import numpy as np

from . import model
from . import solver
from .covertness import covert_feasible, covert_roots


class Scheme(enum.Enum):
    proposed = "proposed"
    random_an = "random_an"
    mrt_an = "mrt_an"
    no_an = "no_an"


def fixed_an_matrix(scheme, channels, config):
    """Frozen noise matrix for a baseline scheme.

    random_an spends full power on an isotropic random matrix, mrt_an beams
    all of it along the warden's channel (loosest cap for the power spent),
    no_an stays silent. Frobenius power is exactly p_ap except for no_an.
    """
    cfg = config
    if scheme == Scheme.random_an:
        rng = model.trial_rng(cfg.seed, channels.trial_index, salt=1)
        g = rng.standard_normal((cfg.n_t, cfg.n_t)) \
            + 1j * rng.standard_normal((cfg.n_t, cfg.n_t))
        return np.sqrt(cfg.p_ap) * g / np.linalg.norm(g)
    if scheme == Scheme.mrt_an:
        f = channels.f.ravel()
        v = np.zeros((cfg.n_t, cfg.n_t), dtype=complex)
        v[:, 0] = np.sqrt(cfg.p_ap) * f.conj() / np.linalg.norm(f)
        return v
    if scheme == Scheme.no_an:
        return np.zeros((cfg.n_t, cfg.n_t), dtype=complex)
    raise ValueError("proposed has no fixed noise matrix")


def run_baseline(scheme, channels, config, settings=None):
    """Solve one channel draw under the given scheme."""
    if scheme == Scheme.proposed:
        return solver.run(channels, config, settings=settings)
    v = fixed_an_matrix(scheme, channels, config)
    return solver.run(channels, config, fixed_v=v, settings=settings)


def brute_force_scalar(channels, config, grid=400):
    """Exhaustive magnitude search for the single-antenna single-sensor case.

    Every term of the error and both hypothesis variances depend only on
    |w| and |v|, so a 2-d magnitude grid with the closed-form receiver is
    exact up to resolution. One refinement pass shrinks the window around
    the best cell. Returns (mse, |w|, |v|).
    """
    cfg = config
    if not (cfg.n_s == cfg.n_t == cfg.n_r == 1 and cfg.k == 1):
        raise ValueError("scalar search needs n_s = n_t = n_r = k = 1")
    h = abs(complex(channels.h_k[0][0, 0]))
    g = abs(complex(channels.g_k[0][0, 0]))
    f = abs(complex(channels.f[0, 0]))
    haa = abs(complex(channels.h_aa[0, 0]))
    bounds = covert_roots(cfg.epsilon)

    def sweep(w_lo, w_hi, v_lo, v_hi):
        w = np.linspace(w_lo, w_hi, grid)
        v = np.linspace(v_lo, v_hi, grid)
        ww, vv = np.meshgrid(w, v, indexing="ij")
        sig = (h * ww) ** 2
        mse = 1.0 - sig / (sig + (haa * vv) ** 2 + cfg.sigma2_a)
        ok = covert_feasible((g * ww) ** 2, (f * vv) ** 2, bounds, cfg.sigma2_w)
        mse = np.where(ok, mse, np.inf)
        i, j = np.unravel_index(np.argmin(mse), mse.shape)
        return mse[i, j], w[i], v[j], (w[1] - w[0] if grid > 1 else 0.0), \
            (v[1] - v[0] if grid > 1 else 0.0)

    w_max, v_max = np.sqrt(cfg.p_sensor[0]), np.sqrt(cfg.p_ap)
    best, w_star, v_star, dw, dv = sweep(0.0, w_max, 0.0, v_max)
    best2, w2, v2, _, _ = sweep(max(0.0, w_star - dw), min(w_max, w_star + dw),
                                max(0.0, v_star - dv), min(v_max, v_star + dv))
    if best2 < best:
        best, w_star, v_star = best2, w2, v2
    return float(best), float(w_star), float(v_star)
