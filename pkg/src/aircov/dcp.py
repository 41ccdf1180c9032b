"""Convex subproblem construction for the penalized descent loop.

The transmit design is lifted: alongside the beamformers W_k and V we carry
the receive-side Gram blocks A, B, the aggregate C, the stacked effective
channels T and s, and the warden-power scalars d, e.  The penalized
objective keeps its two curvature-bearing pieces only through tangents at
the current anchor, so each subproblem is a linear objective over power
balls, coupling equalities, a linear covertness cap, and four PSD blocks
tying every Gram surrogate to its generator.
"""

from dataclasses import dataclass

import numpy as np

from .conic import ConicProgram, pack_complex, pack_hermitian, \
    unpack_complex, unpack_hermitian


@dataclass(frozen=True, eq=False)
class Iterate:
    """One lifted point: transmit matrices plus their Gram-side companions."""

    w_k: tuple              # k complex n_s x n_s
    v: np.ndarray           # complex n_t x n_t
    t: np.ndarray           # complex n_r x (k n_s)
    s_row: np.ndarray       # complex 1 x (k n_s)
    a: np.ndarray           # Hermitian n_r x n_r
    b: np.ndarray           # Hermitian n_r x n_r
    c: np.ndarray           # complex n_r x n_s
    d: float
    e: float


def lift(w_k, v, channels):
    """Build the lifted point whose companions are exact, so residual = 0."""
    hw = [hk @ wk for hk, wk in zip(channels.h_k, w_k)]
    t = np.hstack(hw)
    s_row = np.hstack([gk @ wk for gk, wk in zip(channels.g_k, w_k)])
    a = t @ t.conj().T
    hv = channels.h_aa @ v
    b = hv @ hv.conj().T
    c = sum(hw)
    fv = channels.f @ v
    return Iterate(w_k=tuple(w_k), v=v, t=t, s_row=s_row, a=a, b=b, c=c,
                   d=float(np.linalg.norm(s_row) ** 2),
                   e=float(np.linalg.norm(fv) ** 2))


def residual(iterate, channels):
    """Lifting slack r = tr(A - TT^H) + tr(B - H V V^H H^H) + (d - ss^H)
    + (e - fVV^Hf^H); zero exactly when the Gram companions are tight."""
    it = iterate
    r = float(np.trace(it.a).real - np.linalg.norm(it.t) ** 2)
    hv = channels.h_aa @ it.v
    r += float(np.trace(it.b).real - np.linalg.norm(hv) ** 2)
    r += it.d - float(np.linalg.norm(it.s_row) ** 2)
    r += it.e - float(np.linalg.norm(channels.f @ it.v) ** 2)
    return r


def herm_inner(p, x):
    # tr(P X) for Hermitian P, X; imaginary parts cancel
    return float(np.trace(p @ x).real)


def re_inner(p, x):
    return float(np.trace(p.conj().T @ x).real)


# ------------------------------------------------------- exact objectives


def f_upsilon_exact(a, b, c, sigma2_a):
    """tr(C^H (A + B + sigma2 I)^{-1} C), the matched-receiver gain."""
    n_r = a.shape[0]
    sol = np.linalg.solve(a + b + sigma2_a * np.eye(n_r), c)
    return float(np.trace(c.conj().T @ sol).real)


def f_gamma(iterate):
    """tr(A + B) + d + e, the linear side of the lifting penalty."""
    return float(np.trace(iterate.a).real + np.trace(iterate.b).real
                 + iterate.d + iterate.e)


def f_psi_exact(iterate, channels):
    """tr(TT^H) + tr(H V V^H H^H) + s s^H + f V V^H f^H (convex side)."""
    hv = channels.h_aa @ iterate.v
    fv = channels.f @ iterate.v
    return float(np.linalg.norm(iterate.t) ** 2 + np.linalg.norm(hv) ** 2
                 + np.linalg.norm(iterate.s_row) ** 2
                 + np.linalg.norm(fv) ** 2)


# --------------------------------------------------------- linearizations


@dataclass(frozen=True, eq=False)
class UpsilonLinearization:
    """Tangent of the matched-receiver gain at an anchor (A, B, C)."""

    const: float
    coef_a: np.ndarray
    coef_b: np.ndarray
    coef_c: np.ndarray

    def evaluate(self, a, b, c):
        return self.const + herm_inner(self.coef_a, a) \
            + herm_inner(self.coef_b, b) + re_inner(self.coef_c, c)


def linearize_f_upsilon(anchor, sigma2_a):
    """First-order expansion of f_upsilon around the anchor.

    With M = (Abar + Bbar + sigma2 I)^{-1} and N = M Cbar Cbar^H M the
    tangent is -fbar + tr(N(Abar+Bbar)) + 2Re tr((M Cbar)^H C) - tr(N(A+B)).
    Exact at the anchor; below f_upsilon elsewhere (f_upsilon is jointly
    convex in (A+B, C)).
    """
    n_r = anchor.a.shape[0]
    base = anchor.a + anchor.b + sigma2_a * np.eye(n_r)
    # early anchors can be nearly singular
    if np.linalg.cond(base) > 1e10:
        base = base + 1e-9 * np.eye(n_r)
    m_bar = np.linalg.inv(base)
    m_bar = 0.5 * (m_bar + m_bar.conj().T)
    mc = m_bar @ anchor.c
    n_bar = mc @ mc.conj().T
    n_bar = 0.5 * (n_bar + n_bar.conj().T)
    fbar = float(np.trace(anchor.c.conj().T @ mc).real)
    const = -fbar + herm_inner(n_bar, anchor.a + anchor.b)
    return UpsilonLinearization(const=const, coef_a=-n_bar, coef_b=-n_bar,
                                coef_c=2.0 * mc)


@dataclass(frozen=True, eq=False)
class PsiLinearization:
    """Tangent of the convex Gram-norm sum at an anchor (T, s, V)."""

    const: float
    coef_t: np.ndarray
    coef_s: np.ndarray
    coef_v: np.ndarray

    def evaluate(self, t, s_row, v):
        return self.const + re_inner(self.coef_t, t) \
            + re_inner(self.coef_s, s_row) + re_inner(self.coef_v, v)


def linearize_f_psi(anchor, channels):
    q = channels.h_aa.conj().T @ channels.h_aa \
        + channels.f.conj().T @ channels.f
    qv = q @ anchor.v
    fpsi = float(np.linalg.norm(anchor.t) ** 2
                 + np.linalg.norm(anchor.s_row) ** 2
                 + np.trace(anchor.v.conj().T @ qv).real)
    return PsiLinearization(const=-fpsi, coef_t=2.0 * anchor.t,
                            coef_s=2.0 * anchor.s_row, coef_v=2.0 * qv)


# ------------------------------------------------------------ slot helpers


def _cslots(var, i, j):
    m, n = var.shape
    base = var.offset + i * n + j
    return base, base + m * n


def _herm_diag(var, i):
    return var.offset + i


def _herm_off(var, i, j):
    n = var.shape[0]
    pidx = i * (2 * n - i - 1) // 2 + (j - i - 1)
    base = var.offset + n + 2 * pidx
    return base, base + 1


class _LmiEmitter:
    """Writes one complex Hermitian LMI block into its real embedding.

    Callers touch each complex position once, on the upper triangle; the
    doubled real pattern (Re on the two diagonal copies, +/-Im on the two
    off-diagonal copies) is produced here.
    """

    def __init__(self, blk, m):
        self.blk = blk
        self.m = m

    def const_complex(self, p, q, val):
        m = self.m
        val = complex(val)
        if p == q and abs(val.imag) > 1e-12:
            raise ValueError("diagonal constants must be real")
        if val.real:
            self.blk.add_const(p, q, val.real)
            self.blk.add_const(m + p, m + q, val.real)
        if p != q and val.imag:
            self.blk.add_const(q, m + p, val.imag)
            self.blk.add_const(p, m + q, -val.imag)

    def var_real(self, p, slot, w=1.0):
        # real-valued entry on the complex diagonal
        self.blk.add(p, p, slot, w)
        self.blk.add(self.m + p, self.m + p, slot, w)

    def var_complex(self, p, q, re_slot, im_slot, w):
        # contribution w * x to position (p, q), p < q, x a complex slot pair
        m = self.m
        w = complex(w)
        self.blk.add(p, q, re_slot, w.real)
        self.blk.add(m + p, m + q, re_slot, w.real)
        self.blk.add(q, m + p, re_slot, w.imag)
        self.blk.add(p, m + q, re_slot, -w.imag)
        self.blk.add(p, q, im_slot, -w.imag)
        self.blk.add(m + p, m + q, im_slot, -w.imag)
        self.blk.add(q, m + p, im_slot, w.real)
        self.blk.add(p, m + q, im_slot, -w.real)

    def var_hermitian(self, var):
        # Hermitian variable occupying the top-left var.shape[0] block
        n = var.shape[0]
        for i in range(n):
            self.var_real(i, _herm_diag(var, i))
        for i in range(n):
            for j in range(i + 1, n):
                re_slot, im_slot = _herm_off(var, i, j)
                self.var_complex(i, j, re_slot, im_slot, 1.0)

    def identity_const(self, start, count):
        for p in range(start, start + count):
            self.const_complex(p, p, 1.0)


# ----------------------------------------------------------- the builder


class SubproblemBuilder:
    """Constraint skeleton for one channel realization, reused across
    anchors: only the objective changes per descent step, which lets the
    conic backend keep its compiled cone structure."""

    def __init__(self, channels, config, bounds, fixed_v=None):
        self.channels = channels
        self.config = config
        self.bounds = bounds
        self.fixed_v = None if fixed_v is None else np.asarray(fixed_v,
                                                               dtype=complex)
        if self.fixed_v is not None:
            if self.fixed_v.shape != (config.n_t, config.n_t):
                raise ValueError("fixed noise matrix has wrong shape")
            if np.linalg.norm(self.fixed_v) ** 2 > config.p_ap + 1e-9:
                raise ValueError("fixed noise matrix exceeds the power cap")
            hv = channels.h_aa @ self.fixed_v
            self.b_const = hv @ hv.conj().T
            self.e_const = float(
                np.linalg.norm(channels.f @ self.fixed_v) ** 2)
        self._build_skeleton()

    def _build_skeleton(self):
        cfg = self.config
        ch = self.channels
        n_s, n_t, n_r, k = cfg.n_s, cfg.n_t, cfg.n_r, cfg.k
        kn = k * n_s
        with_v = self.fixed_v is None

        prog = ConicProgram()
        self.vw = [prog.add_var(f"w{i}", (n_s, n_s), "complex")
                   for i in range(k)]
        self.vv = prog.add_var("v", (n_t, n_t), "complex") if with_v else None
        self.vt = prog.add_var("t", (n_r, kn), "complex")
        self.vs = prog.add_var("s", (1, kn), "complex")
        self.va = prog.add_var("a", (n_r, n_r), "hermitian")
        self.vb = prog.add_var("b", (n_r, n_r), "hermitian") if with_v \
            else None
        self.vc = prog.add_var("c", (n_r, n_s), "complex")
        self.vd = prog.add_var("d", (1,), "real")
        self.ve = prog.add_var("e", (1,), "real") if with_v else None

        # power balls
        for i, var in enumerate(self.vw):
            soc = prog.add_soc(1 + var.size)
            soc.set_const(0, np.sqrt(cfg.p_sensor[i]))
            for r in range(var.size):
                soc.add(1 + r, var.offset + r, 1.0)
        if with_v:
            soc = prog.add_soc(1 + self.vv.size)
            soc.set_const(0, np.sqrt(cfg.p_ap))
            for r in range(self.vv.size):
                soc.add(1 + r, self.vv.offset + r, 1.0)

        # coupling equalities: c = sum_k H_k W_k, then columnwise
        # t = [H_1 W_1 ... H_K W_K] and s = [g_1 W_1 ... g_K W_K]
        for i in range(n_r):
            for j in range(n_s):
                re_t, im_t = _cslots(self.vc, i, j)
                re_entries = [(re_t, 1.0)]
                im_entries = [(im_t, 1.0)]
                for kk in range(k):
                    hk = ch.h_k[kk]
                    for l in range(n_s):
                        w = hk[i, l]
                        re_w, im_w = _cslots(self.vw[kk], l, j)
                        re_entries += [(re_w, -w.real), (im_w, w.imag)]
                        im_entries += [(re_w, -w.imag), (im_w, -w.real)]
                prog.add_eq(re_entries, 0.0)
                prog.add_eq(im_entries, 0.0)
        for kk in range(k):
            hk = ch.h_k[kk]
            for i in range(n_r):
                for j in range(n_s):
                    re_t, im_t = _cslots(self.vt, i, kk * n_s + j)
                    re_entries = [(re_t, 1.0)]
                    im_entries = [(im_t, 1.0)]
                    for l in range(n_s):
                        w = hk[i, l]
                        re_w, im_w = _cslots(self.vw[kk], l, j)
                        re_entries += [(re_w, -w.real), (im_w, w.imag)]
                        im_entries += [(re_w, -w.imag), (im_w, -w.real)]
                    prog.add_eq(re_entries, 0.0)
                    prog.add_eq(im_entries, 0.0)
        for kk in range(k):
            gk = ch.g_k[kk]
            for j in range(n_s):
                re_t, im_t = _cslots(self.vs, 0, kk * n_s + j)
                re_entries = [(re_t, 1.0)]
                im_entries = [(im_t, 1.0)]
                for l in range(n_s):
                    w = gk[0, l]
                    re_w, im_w = _cslots(self.vw[kk], l, j)
                    re_entries += [(re_w, -w.real), (im_w, w.imag)]
                    im_entries += [(re_w, -w.imag), (im_w, -w.real)]
                prog.add_eq(re_entries, 0.0)
                prog.add_eq(im_entries, 0.0)

        # covertness cap (x2-1)(e + sigma_w^2) - d >= 0 and d, e >= 0
        cap = self.bounds.cap_factor
        blk = prog.add_psd(1)
        blk.add(0, 0, self.vd.offset, -1.0)
        if with_v:
            blk.add(0, 0, self.ve.offset, cap)
            blk.add_const(0, 0, cap * cfg.sigma2_w)
        else:
            blk.add_const(0, 0, cap * (self.e_const + cfg.sigma2_w))
        prog.add_psd(1).add(0, 0, self.vd.offset, 1.0)
        if with_v:
            prog.add_psd(1).add(0, 0, self.ve.offset, 1.0)

        # Gram certificates [[A, T], [T^H, I]] >= 0 and friends
        em = _LmiEmitter(prog.add_psd(2 * (n_r + kn)), n_r + kn)
        em.var_hermitian(self.va)
        for i in range(n_r):
            for j in range(kn):
                re_s, im_s = _cslots(self.vt, i, j)
                em.var_complex(i, n_r + j, re_s, im_s, 1.0)
        em.identity_const(n_r, kn)

        if with_v:
            em = _LmiEmitter(prog.add_psd(2 * (n_r + n_t)), n_r + n_t)
            em.var_hermitian(self.vb)
            for i in range(n_r):
                for j in range(n_t):
                    for l in range(n_t):
                        w = ch.h_aa[i, l]
                        if w == 0:
                            continue
                        re_s, im_s = _cslots(self.vv, l, j)
                        em.var_complex(i, n_r + j, re_s, im_s, w)
            em.identity_const(n_r, n_t)

        em = _LmiEmitter(prog.add_psd(2 * (1 + kn)), 1 + kn)
        em.var_real(0, self.vd.offset)
        for j in range(kn):
            re_s, im_s = _cslots(self.vs, 0, j)
            em.var_complex(0, 1 + j, re_s, im_s, 1.0)
        em.identity_const(1, kn)

        if with_v:
            em = _LmiEmitter(prog.add_psd(2 * (1 + n_t)), 1 + n_t)
            em.var_real(0, self.ve.offset)
            for j in range(n_t):
                for l in range(n_t):
                    w = ch.f[0, l]
                    if w == 0:
                        continue
                    re_s, im_s = _cslots(self.vv, l, j)
                    em.var_complex(0, 1 + j, re_s, im_s, w)
            em.identity_const(1, n_t)

        if self.fixed_v is not None:
            prog.fixed = {"v": self.fixed_v, "b": self.b_const,
                          "e": self.e_const}
        prog.validate()
        self.program = prog

    # ------------------------------------------------------------ objective

    def check_anchor(self, anchor):
        cfg = self.config
        ch = self.channels
        tol = 1e-4
        if len(anchor.w_k) != cfg.k:
            raise ValueError("anchor has wrong sensor count")
        for i, wk in enumerate(anchor.w_k):
            if wk.shape != (cfg.n_s, cfg.n_s):
                raise ValueError("anchor beamformer has wrong shape")
            lim = cfg.p_sensor[i]
            if np.linalg.norm(wk) ** 2 > lim + tol * (1.0 + lim):
                raise ValueError("anchor violates a sensor power cap")
        if anchor.v.shape != (cfg.n_t, cfg.n_t):
            raise ValueError("anchor noise matrix has wrong shape")
        if np.linalg.norm(anchor.v) ** 2 > cfg.p_ap + tol * (1.0 + cfg.p_ap):
            raise ValueError("anchor violates the noise power cap")
        cap = self.bounds.cap_factor * (anchor.e + cfg.sigma2_w)
        if anchor.d > cap + tol * (1.0 + cap):
            raise ValueError("anchor violates the covertness cap")
        if anchor.d < -tol or anchor.e < -tol:
            raise ValueError("anchor has negative warden power")
        # Gram blocks must dominate their generators (Schur feasibility)
        scale = 1.0 + float(np.trace(anchor.a).real)
        gap = anchor.a - anchor.t @ anchor.t.conj().T
        if np.linalg.eigvalsh(gap).min() < -tol * scale:
            raise ValueError("anchor Gram block A below its generator")
        hv = ch.h_aa @ anchor.v
        gap = anchor.b - hv @ hv.conj().T
        if np.linalg.eigvalsh(gap).min() < -tol * (
                1.0 + float(np.trace(anchor.b).real)):
            raise ValueError("anchor Gram block B below its generator")
        if anchor.d < float(np.linalg.norm(anchor.s_row) ** 2) - tol * (
                1.0 + anchor.d):
            raise ValueError("anchor d below its generator")
        if anchor.e < float(np.linalg.norm(ch.f @ anchor.v) ** 2) - tol * (
                1.0 + anchor.e):
            raise ValueError("anchor e below its generator")

    def with_anchor(self, anchor, p):
        """Set the tangent objective for this anchor and penalty factor."""
        cfg = self.config
        self.check_anchor(anchor)
        ups = linearize_f_upsilon(anchor, cfg.sigma2_a)
        psi = linearize_f_psi(anchor, self.channels)
        p = float(p)

        entries = {}

        def bump(slot, w):
            if w:
                entries[slot] = entries.get(slot, 0.0) + w

        def herm_coef(var, coef, scale):
            for i in range(var.shape[0]):
                bump(_herm_diag(var, i), scale * coef[i, i].real)
            for i in range(var.shape[0]):
                for j in range(i + 1, var.shape[0]):
                    re_s, im_s = _herm_off(var, i, j)
                    bump(re_s, 2.0 * scale * coef[i, j].real)
                    bump(im_s, 2.0 * scale * coef[i, j].imag)

        def complex_coef(var, coef, scale):
            m, n = var.shape
            for i in range(m):
                for j in range(n):
                    re_s, im_s = _cslots(var, i, j)
                    bump(re_s, scale * coef[i, j].real)
                    bump(im_s, scale * coef[i, j].imag)

        constant = cfg.k * cfg.n_s - ups.const - p * psi.const
        herm_coef(self.va, ups.coef_a, -1.0)
        for i in range(self.va.shape[0]):
            bump(_herm_diag(self.va, i), p)
        complex_coef(self.vc, ups.coef_c, -1.0)
        complex_coef(self.vt, psi.coef_t, -p)
        complex_coef(self.vs, psi.coef_s, -p)
        bump(self.vd.offset, p)
        if self.vv is not None:
            herm_coef(self.vb, ups.coef_b, -1.0)
            for i in range(self.vb.shape[0]):
                bump(_herm_diag(self.vb, i), p)
            complex_coef(self.vv, psi.coef_v, -p)
            bump(self.ve.offset, p)
        else:
            constant -= herm_inner(ups.coef_b, self.b_const)
            constant += p * (float(np.trace(self.b_const).real)
                             + self.e_const)
            constant -= p * re_inner(psi.coef_v, self.fixed_v)

        self.program.set_objective(entries, constant)
        return self.program


def build_subproblem(channels, config, bounds, anchor, p, fixed_v=None):
    """One-shot convenience wrapper around SubproblemBuilder."""
    builder = SubproblemBuilder(channels, config, bounds, fixed_v=fixed_v)
    return builder.with_anchor(anchor, p)


# ------------------------------------------------------------- extraction


def pack_iterate(iterate, program):
    """Flatten an Iterate into the program's real slot vector."""
    x = np.zeros(program.n_vars)
    vi = program.var_index
    for i, wk in enumerate(iterate.w_k):
        var = vi[f"w{i}"]
        x[var.offset:var.offset + var.size] = pack_complex(wk)
    for name, value in (("t", iterate.t), ("s", iterate.s_row),
                        ("c", iterate.c)):
        var = vi[name]
        x[var.offset:var.offset + var.size] = pack_complex(value)
    var = vi["a"]
    x[var.offset:var.offset + var.size] = pack_hermitian(iterate.a)
    x[vi["d"].offset] = iterate.d
    if "v" in vi:
        var = vi["v"]
        x[var.offset:var.offset + var.size] = pack_complex(iterate.v)
        var = vi["b"]
        x[var.offset:var.offset + var.size] = pack_hermitian(iterate.b)
        x[vi["e"].offset] = iterate.e
    return x


def extract_iterate(solution, program):
    """Read the lifted point back out of a conic solution."""
    if solution.status not in ("optimal", "near_optimal"):
        raise RuntimeError(f"cannot extract from status {solution.status}")
    vi = program.var_index
    x = solution.x

    def cvar(name):
        var = vi[name]
        return unpack_complex(x[var.offset:var.offset + var.size], var.shape)

    def hvar(name):
        var = vi[name]
        return unpack_hermitian(x[var.offset:var.offset + var.size],
                                var.shape[0])

    k = sum(1 for name in vi if name.startswith("w"))
    w_k = tuple(cvar(f"w{i}") for i in range(k))
    if "v" in vi:
        v = cvar("v")
        b = hvar("b")
        e = float(x[vi["e"].offset])
    else:
        v = program.fixed["v"]
        b = program.fixed["b"]
        e = program.fixed["e"]
    return Iterate(w_k=w_k, v=v, t=cvar("t"), s_row=cvar("s"), a=hvar("a"),
                   b=b, c=cvar("c"), d=float(x[vi["d"].offset]), e=e)
