"""Physical system model: scenario configuration, channel realizations, the
aggregation MSE objective, warden-side variances, and the closed-form MMSE
aggregation matrix."""

from dataclasses import dataclass
import numpy as np


def _crandn(rng, *shape):
    # circularly symmetric complex Gaussian, unit variance per entry
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def trial_rng(seed, trial_index, salt=0):
    """Independent, order-insensitive RNG stream for one trial."""
    return np.random.default_rng((int(seed), int(trial_index), int(salt)))


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of the scenario plus solver knobs.

    Powers are linear-scale ratios against the unit noise floor (sigma2 = 1
    normalization); use harness.db2pow for dB inputs. Defaults are the
    full-scale simulation setup.
    """

    n_s: int = 4
    n_t: int = 4
    n_r: int = 4
    k: int = 10
    p_sensor: tuple = 10.0      # scalar broadcast to length k, or sequence
    p_ap: float = 1000.0
    sigma2_a: float = 1.0
    sigma2_w: float = 1.0
    rho: float = 0.5
    epsilon: float = 0.1
    penalty: float = None       # None resolves to 0.1; escalation raises it
    max_iters: int = 200
    tol_obj: float = 1e-4
    tol_residual: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        for name in ("n_s", "n_t", "n_r", "k"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        ps = self.p_sensor
        if np.isscalar(ps):
            ps = (float(ps),) * self.k
        else:
            ps = tuple(float(v) for v in ps)
        if len(ps) != self.k:
            raise ValueError("p_sensor length must equal k")
        if min(ps) <= 0 or self.p_ap <= 0 or self.sigma2_a <= 0 or self.sigma2_w <= 0:
            raise ValueError("powers and noise variances must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        pen = self.penalty
        if pen is None:
            # Start small: the linearized slack acts as a proximal term around
            # the anchor, so a large weight freezes the iteration long before
            # the escalation schedule can certify exactness.
            pen = 0.1
        pen = float(pen)
        if pen <= 0:
            raise ValueError("penalty must be positive")
        object.__setattr__(self, "p_sensor", ps)
        object.__setattr__(self, "penalty", pen)


def desk_config(**overrides):
    """Small-scale configuration used for fast experiments and tests."""
    base = dict(n_s=2, n_t=2, n_r=2, k=3, p_sensor=10.0, p_ap=1000.0)
    base.update(overrides)
    return SystemConfig(**base)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One realization of all channels.

    h_k: k matrices n_r x n_s (sensor to AP); g_k: k rows 1 x n_s (sensor to
    warden); f: row 1 x n_t (AP to warden); h_loop: n_r x n_t feedback loop;
    h_aa = sqrt(rho) * h_loop is the residual self-interference channel.
    """

    h_k: tuple
    g_k: tuple
    f: np.ndarray
    h_loop: np.ndarray
    h_aa: np.ndarray
    trial_index: int = 0

    def __post_init__(self):
        for arr in (*self.h_k, *self.g_k, self.f, self.h_loop, self.h_aa):
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError("channel entries must be finite")
            arr.setflags(write=False)


def sample_channels(config, trial_index):
    """Draw one i.i.d. CN(0, 1) channel realization for the given trial."""
    rng = trial_rng(config.seed, trial_index)
    h_k = tuple(_crandn(rng, config.n_r, config.n_s) for _ in range(config.k))
    g_k = tuple(_crandn(rng, 1, config.n_s) for _ in range(config.k))
    f = _crandn(rng, 1, config.n_t)
    h_loop = _crandn(rng, config.n_r, config.n_t)
    h_aa = np.sqrt(config.rho) * h_loop
    return ChannelSet(h_k=h_k, g_k=g_k, f=f, h_loop=h_loop, h_aa=h_aa,
                      trial_index=int(trial_index))


@dataclass(frozen=True, eq=False)
class Design:
    """A candidate solution: sensor beamformers, AN beamformer, receiver."""

    w_k: tuple
    v: np.ndarray
    u_a: np.ndarray


def gram_terms(w_k, v, channels):
    """A = sum_k H_k W_k W_k^H H_k^H, B = H_aa V V^H H_aa^H, C = sum_k H_k W_k."""
    n_r = channels.h_aa.shape[0]
    a = np.zeros((n_r, n_r), dtype=complex)
    c = np.zeros((n_r, w_k[0].shape[1]), dtype=complex)
    for hk, wk in zip(channels.h_k, w_k):
        hw = hk @ wk
        a += hw @ hw.conj().T
        c += hw
    hv = channels.h_aa @ v
    b = hv @ hv.conj().T
    return a, b, c


def mse(design, channels, sigma2_a):
    """Aggregation MSE: sum_k ||U^H H_k W_k - I||_F^2 + ||U^H H_aa V||_F^2
    + sigma2_a ||U^H||_F^2."""
    u = design.u_a
    n_s = design.w_k[0].shape[0]
    if u.shape != (channels.h_k[0].shape[0], n_s):
        raise ValueError("u_a shape inconsistent with channels")
    uh = u.conj().T
    total = 0.0
    eye = np.eye(n_s)
    for hk, wk in zip(channels.h_k, design.w_k):
        total += np.linalg.norm(uh @ (hk @ wk) - eye) ** 2
    total += np.linalg.norm(uh @ (channels.h_aa @ design.v)) ** 2
    total += sigma2_a * np.linalg.norm(uh) ** 2
    return float(total)


def mmse_receiver(w_k, v, channels, sigma2_a):
    """Optimal aggregation matrix (A + B + sigma2_a I)^{-1} C."""
    a, b, c = gram_terms(w_k, v, channels)
    n_r = a.shape[0]
    return np.linalg.solve(a + b + sigma2_a * np.eye(n_r), c)


def willie_variances(w_k, v, channels, sigma2_w):
    """Warden receive variances (sigma0, sigma1) under the two hypotheses."""
    fv = channels.f @ v
    sigma0 = float(np.linalg.norm(fv) ** 2) + sigma2_w
    sigma1 = sigma0
    for gk, wk in zip(channels.g_k, w_k):
        sigma1 += float(np.linalg.norm(gk @ wk) ** 2)
    return sigma0, sigma1


def simulate_empirical_mse(design, channels, sigma2_a, n_samples, seed=0):
    """Monte-Carlo estimate of the aggregation MSE from materialized signals.

    Draws unit-variance data streams s_k, AN input z and receiver noise n_a,
    forms y_a = sum_k H_k W_k s_k + H_aa V z + n_a and the aggregate estimate
    U^H y_a, and averages ||sum_k s_k - U^H y_a||^2.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    n_s = design.w_k[0].shape[0]
    n_t = design.v.shape[0]
    n_r = channels.h_aa.shape[0]
    uh = design.u_a.conj().T
    total = 0.0
    done = 0
    while done < n_samples:
        m = min(20000, n_samples - done)
        target = np.zeros((m, n_s), dtype=complex)
        y = _crandn(rng, m, n_r) * np.sqrt(sigma2_a)
        for hk, wk in zip(channels.h_k, design.w_k):
            sk = _crandn(rng, m, n_s)
            target += sk
            y += sk @ (hk @ wk).T
        z = _crandn(rng, m, n_t)
        y += z @ (channels.h_aa @ design.v).T
        err = target - y @ uh.T
        total += float(np.sum(np.abs(err) ** 2))
        done += m
    return total / n_samples
