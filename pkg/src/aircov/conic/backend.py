"""Primal-dual interior-point backend for the conic programs built here.

Standard form used internally:

    minimize    c'x
    subject to  A x = b
                s = F x + g,   s in K = R+^l x SOC(d_1) x ... x PSD(n_1) x ...

with the dual

    maximize    b'y - g'z
    subject to  A'y + F'z = c,   z in K.

PSD blocks live in scaled (svec) coordinates so every cone is a subset of a
real vector space with the standard inner product.  The iteration is a
Nesterov-Todd scaled Mehrotra predictor-corrector; the Newton systems are
solved through the equality-augmented matrix [[M, A'], [A, 0]] with
M = F'(W'W)^{-1}F assembled from the sparse cone entries, LU-factored with
iterative refinement.  1x1 PSD blocks are folded into the nonnegative part.
"""

import dataclasses

import numpy as np
import scipy.linalg

from . import kernels


@dataclasses.dataclass
class SolveSettings:
    max_iters: int = 100
    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    step_frac: float = 0.99
    refine_steps: int = 2
    kkt_refine: int = 2
    verbose: bool = False
    warm_start: object = None  # accepted as a hint; this backend cold-starts


@dataclasses.dataclass
class ConicSolution:
    x: np.ndarray
    objective_value: float
    status: str
    solver_stats: dict


# ----------------------------------------------------------------- compile


class _Lp:
    def __init__(self, rows, cols, w, const, dim):
        self.dim = dim
        self.rows = rows
        self.cols = cols
        self.w = w
        self.const = const
        # per-row entry slices for the normal-matrix assembly
        order = np.argsort(rows, kind="stable")
        self.r_sorted = rows[order]
        self.c_sorted = cols[order]
        self.w_sorted = w[order]
        self.row_starts = np.searchsorted(self.r_sorted, np.arange(dim))
        self.row_ends = np.searchsorted(self.r_sorted, np.arange(dim), "right")


class _Soc:
    def __init__(self, block, dim):
        self.dim = dim
        if block.entries:
            rows = np.array([e[0] for e in block.entries], dtype=np.int64)
            cols = np.array([e[1] for e in block.entries], dtype=np.int64)
            w = np.array([e[2] for e in block.entries])
        else:
            rows = np.zeros(0, dtype=np.int64)
            cols = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        self.used = np.unique(cols)
        self.f_dense = np.zeros((dim, self.used.size))
        if cols.size:
            colc = np.searchsorted(self.used, cols)
            np.add.at(self.f_dense, (rows, colc), w)
        self.const = block.const.copy()


class _Psd:
    def __init__(self, block):
        self.n = block.n
        n = block.n
        if block.entries:
            p = np.array([e[0] for e in block.entries], dtype=np.int64)
            q = np.array([e[1] for e in block.entries], dtype=np.int64)
            col = np.array([e[2] for e in block.entries], dtype=np.int64)
            w = np.array([e[3] for e in block.entries])
            # merge duplicate (col, p, q) triples
            key = (col * n + p) * n + q
            order = np.argsort(key, kind="stable")
            key, p, q, col, w = key[order], p[order], q[order], col[order], w[order]
            uniq, inv = np.unique(key, return_index=True)
            w = np.add.reduceat(w, inv)
            p, q, col = p[inv], q[inv], col[inv]
        else:
            p = q = col = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        self.p, self.q, self.col = p, q, col
        wt = w.copy()
        wt[p == q] *= 0.5
        self.wt = wt
        self.used = np.unique(col)
        self.colc = np.searchsorted(self.used, col)
        if col.size:
            self.starts = np.r_[0, np.flatnonzero(np.diff(self.colc)) + 1]
        else:
            self.starts = np.zeros(0, dtype=np.int64)
        self.const = block.const.copy()
        self.svec_dim = n * (n + 1) // 2


class _Compiled:
    """Program flattened to standard form with per-block sparse structure."""

    def __init__(self, program):
        program.validate()
        self.n = program.n_vars

        lp_rows, lp_cols, lp_w, lp_const = [], [], [], []
        self.psds = []
        for blk in program.psd_constraints:
            if blk.n == 1:
                r = len(lp_const)
                lp_const.append(blk.const[0, 0])
                for p, q, col, w in blk.entries:
                    lp_rows.append(r)
                    lp_cols.append(col)
                    lp_w.append(w)
            else:
                self.psds.append(_Psd(blk))
        self.lp = _Lp(np.array(lp_rows, dtype=np.int64),
                      np.array(lp_cols, dtype=np.int64),
                      np.array(lp_w), np.array(lp_const), len(lp_const))
        self.socs = [_Soc(b, b.dim) for b in program.soc_constraints]

        # stacked cone vector layout
        self.l = self.lp.dim
        off = self.l
        self.soc_offs = []
        for s in self.socs:
            self.soc_offs.append(off)
            off += s.dim
        self.psd_offs = []
        for p in self.psds:
            self.psd_offs.append(off)
            off += p.svec_dim
        self.m = off
        self.nu = self.l + len(self.socs) + sum(p.n for p in self.psds)

        # equalities as a dense matrix (row counts here are small)
        self.p_eq = len(program.eq_constraints)
        self.a_mat = np.zeros((self.p_eq, self.n))
        self.b = np.zeros(self.p_eq)
        for i, eq in enumerate(program.eq_constraints):
            for col, w in eq.entries:
                self.a_mat[i, col] += w
            self.b[i] = eq.rhs

        self.g = np.zeros(self.m)
        self.g[:self.l] = self.lp.const
        for s, off in zip(self.socs, self.soc_offs):
            self.g[off:off + s.dim] = s.const
        for p, off in zip(self.psds, self.psd_offs):
            self.g[off:off + p.svec_dim] = kernels.svec_pack(p.const)

        self.e = np.zeros(self.m)
        self.e[:self.l] = 1.0
        for s, off in zip(self.socs, self.soc_offs):
            self.e[off] = 1.0
        for p, off in zip(self.psds, self.psd_offs):
            self.e[off:off + p.svec_dim] = kernels.svec_pack(np.eye(p.n))

    def cost_vector(self, program):
        c = np.zeros(self.n)
        for col, w in program.objective.entries.items():
            c[col] = w
        return c

    # ------------------------------------------------------- F and friends

    def f_apply(self, x):
        out = np.zeros(self.m)
        lp = self.lp
        if lp.rows.size:
            out[:self.l] = np.bincount(lp.rows, lp.w * x[lp.cols],
                                       minlength=self.l)
        for s, off in zip(self.socs, self.soc_offs):
            if s.used.size:
                out[off:off + s.dim] = s.f_dense @ x[s.used]
        for p, off in zip(self.psds, self.psd_offs):
            u = kernels.psd_forward(p.p, p.q, p.wt, p.col, x, p.n)
            out[off:off + p.svec_dim] = kernels.svec_pack(u)
        return out

    def f_adjoint(self, u):
        out = np.zeros(self.n)
        lp = self.lp
        if lp.rows.size:
            np.add.at(out, lp.cols, lp.w * u[lp.rows])
        for s, off in zip(self.socs, self.soc_offs):
            if s.used.size:
                out[s.used] += s.f_dense.T @ u[off:off + s.dim]
        for p, off in zip(self.psds, self.psd_offs):
            if p.col.size:
                mat = kernels.svec_unpack(u[off:off + p.svec_dim], p.n)
                out[p.used] += kernels.psd_adjoint(p.p, p.q, p.wt, p.starts, mat)
        return out


def _get_compiled(program):
    cached = getattr(program, "_compiled_cache", None)
    if cached is not None and not program._dirty:
        return cached
    cp = _Compiled(program)
    program._compiled_cache = cp
    program._dirty = False
    return cp


# ----------------------------------------------------------------- scaling


class _Scaling:
    """Nesterov-Todd scaling state for the product cone."""

    def __init__(self, cp, s, z):
        self.cp = cp
        l = cp.l
        self.d = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.lam = np.zeros(cp.m)
        self.lam[:l] = np.sqrt(s[:l] * z[:l])

        self.soc = []
        for blk, off in zip(cp.socs, cp.soc_offs):
            sb = s[off:off + blk.dim]
            zb = z[off:off + blk.dim]
            a = np.sqrt(_soc_det(sb))
            bnorm = np.sqrt(_soc_det(zb))
            sbar, zbar = sb / a, zb / bnorm
            gam = np.sqrt((1.0 + sbar @ zbar) / 2.0)
            wbar = (sbar + _jmul(zbar)) / (2.0 * gam)
            v = wbar.copy()
            v[0] += 1.0
            v /= np.sqrt(2.0 * (wbar[0] + 1.0))
            beta = np.sqrt(a / bnorm)
            self.soc.append((beta, v))
            lam_bar = 2.0 * v * (v @ zbar) - _jmul(zbar)
            self.lam[off:off + blk.dim] = np.sqrt(a * bnorm) * lam_bar

        self.psd = []
        for blk, off in zip(cp.psds, cp.psd_offs):
            smat = kernels.svec_unpack(s[off:off + blk.svec_dim], blk.n)
            zmat = kernels.svec_unpack(z[off:off + blk.svec_dim], blk.n)
            l1 = _chol(smat)
            l2 = _chol(zmat)
            _, sig, vt = np.linalg.svd(l2.T @ l1)
            r = l1 @ (vt.T / np.sqrt(sig))
            rinv = (np.sqrt(sig)[:, None] * vt) @ _tri_inv(l1)
            pmat = rinv.T @ rinv
            self.psd.append((r, rinv, sig, pmat))
            self.lam[off:off + blk.svec_dim] = kernels.svec_pack(np.diag(sig))

    # each op maps a stacked cone vector to a stacked cone vector

    def _blockwise(self, u, lp_fn, soc_fn, psd_fn):
        cp = self.cp
        out = np.empty(cp.m)
        out[:cp.l] = lp_fn(u[:cp.l])
        for (blk, off), st in zip(zip(cp.socs, cp.soc_offs), self.soc):
            out[off:off + blk.dim] = soc_fn(u[off:off + blk.dim], st)
        for (blk, off), st in zip(zip(cp.psds, cp.psd_offs), self.psd):
            mat = kernels.svec_unpack(u[off:off + blk.svec_dim], blk.n)
            out[off:off + blk.svec_dim] = kernels.svec_pack(psd_fn(mat, st))
        return out

    def w_apply(self, u):
        return self._blockwise(
            u, lambda v: v * self.d,
            lambda v, st: st[0] * (2.0 * st[1] * (st[1] @ v) - _jmul(v)),
            lambda mat, st: st[0].T @ mat @ st[0])

    def wt_apply(self, u):
        return self._blockwise(
            u, lambda v: v * self.d,
            lambda v, st: st[0] * (2.0 * st[1] * (st[1] @ v) - _jmul(v)),
            lambda mat, st: st[0] @ mat @ st[0].T)

    def winvt_apply(self, u):
        return self._blockwise(
            u, lambda v: v / self.d,
            lambda v, st: _soc_winv(v, st),
            lambda mat, st: st[1] @ mat @ st[1].T)

    def wtw_inv_apply(self, u):
        return self._blockwise(
            u, lambda v: v / self.d ** 2,
            lambda v, st: _soc_winv(_soc_winv(v, st), st),
            lambda mat, st: st[3] @ mat @ st[3])

    def lam_div(self, u):
        """Solve lam o t = u in the scaled space."""
        cp = self.cp
        out = np.empty(cp.m)
        lam_lp = self.lam[:cp.l]
        out[:cp.l] = u[:cp.l] / lam_lp if cp.l else u[:cp.l]
        for blk, off in zip(cp.socs, cp.soc_offs):
            lam = self.lam[off:off + blk.dim]
            v = u[off:off + blk.dim]
            det = lam[0] ** 2 - lam[1:] @ lam[1:]
            t0 = (lam[0] * v[0] - lam[1:] @ v[1:]) / det
            out[off] = t0
            out[off + 1:off + blk.dim] = (v[1:] - t0 * lam[1:]) / lam[0]
        for (blk, off), st in zip(zip(cp.psds, cp.psd_offs), self.psd):
            sig = st[2]
            mat = kernels.svec_unpack(u[off:off + blk.svec_dim], blk.n)
            mat = mat * (2.0 / np.add.outer(sig, sig))
            out[off:off + blk.svec_dim] = kernels.svec_pack(mat)
        return out

    def max_step(self, u):
        """Largest t with lam + t*u still in the cone (scaled space)."""
        cp = self.cp
        best = np.inf
        if cp.l:
            du = u[:cp.l]
            neg = du < 0
            if neg.any():
                best = min(best, np.min(-self.lam[:cp.l][neg] / du[neg]))
        for blk, off in zip(cp.socs, cp.soc_offs):
            lam = self.lam[off:off + blk.dim]
            best = min(best, _soc_step(lam, u[off:off + blk.dim]))
        for (blk, off), st in zip(zip(cp.psds, cp.psd_offs), self.psd):
            sig = st[2]
            mat = kernels.svec_unpack(u[off:off + blk.svec_dim], blk.n)
            scaled = mat / np.sqrt(np.outer(sig, sig))
            emin = scipy.linalg.eigvalsh(scaled).min()
            if emin < 0:
                best = min(best, -1.0 / emin)
        return best


def _jmul(v):
    out = -v
    out[0] = v[0]
    return out


def _soc_det(v):
    d = v[0] ** 2 - v[1:] @ v[1:]
    if d <= 0 or v[0] <= 0:
        raise _InteriorLost()
    return d


def _soc_winv(v, st):
    beta, w = st
    u = _jmul(w.copy())
    return (2.0 * u * (u @ v) - _jmul(v)) / beta


def _soc_step(lam, du):
    # exit point of lam + t*du across the cone boundary
    a = du[0] ** 2 - du[1:] @ du[1:]
    b = lam[0] * du[0] - lam[1:] @ du[1:]
    c = lam[0] ** 2 - lam[1:] @ lam[1:]
    roots = []
    if abs(a) > 1e-300:
        disc = b * b - a * c
        if disc >= 0:
            sq = np.sqrt(disc)
            roots = [(-b - sq) / a, (-b + sq) / a]
    elif b < 0:
        roots = [-c / (2.0 * b)]
    best = np.inf
    for t in roots:
        if t > 0:
            best = min(best, t)
    if du[0] < 0:
        best = min(best, -lam[0] / du[0])
    return best


class _InteriorLost(Exception):
    pass


def _chol(mat):
    mat = 0.5 * (mat + mat.T)
    scale = max(np.abs(mat).max(), 1e-300)
    jitter = 0.0
    for _ in range(3):
        try:
            return np.linalg.cholesky(mat + jitter * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            jitter = max(10.0 * jitter, 1e-14 * scale)
    raise _InteriorLost()


def _tri_inv(l):
    return scipy.linalg.solve_triangular(l, np.eye(l.shape[0]), lower=True)


# -------------------------------------------------------------- KKT system


class _Kkt:
    """[[M, A'], [A, 0]] with LU factorization and iterative refinement."""

    def __init__(self, cp, refine_steps):
        n, p = cp.n, cp.p_eq
        self.cp = cp
        self.refine_steps = refine_steps
        self.size = n + p
        self.aug = np.zeros((self.size, self.size))
        if p:
            self.aug[n:, :n] = cp.a_mat
            self.aug[:n, n:] = cp.a_mat.T

    def factor(self, m_mat):
        n = self.cp.n
        self.aug[:n, :n] = m_mat
        self.exact = self.aug.copy()
        delta = 0.0
        for _ in range(4):
            mat = self.exact
            if delta:
                mat = mat.copy()
                mat[:n, :n] += delta * np.eye(n)
                if self.size > n:
                    mat[n:, n:] -= delta * np.eye(self.size - n)
            try:
                self.lu = scipy.linalg.lu_factor(mat, check_finite=False)
            except (ValueError, scipy.linalg.LinAlgError):
                delta = max(1e-12, delta * 1e3)
                continue
            probe = self._solve_raw(np.ones(self.size))
            if np.all(np.isfinite(probe)):
                return
            delta = max(1e-12, delta * 1e3)
        raise _InteriorLost()

    def _solve_raw(self, rhs):
        return scipy.linalg.lu_solve(self.lu, rhs, check_finite=False)

    def solve(self, r1, r2):
        rhs = np.concatenate([r1, r2]) if self.cp.p_eq else r1.copy()
        sol = self._solve_raw(rhs)
        for _ in range(self.refine_steps):
            resid = rhs - self.exact @ sol
            sol = sol + self._solve_raw(resid)
        n = self.cp.n
        return sol[:n], sol[n:]


def _assemble_m(cp, scal):
    n = cp.n
    m_mat = np.zeros((n, n))
    lp = cp.lp
    if lp.dim:
        dinv2 = 1.0 / scal.d ** 2
        for r in range(lp.dim):
            a, b = lp.row_starts[r], lp.row_ends[r]
            if a == b:
                continue
            cols = lp.c_sorted[a:b]
            w = lp.w_sorted[a:b]
            m_mat[np.ix_(cols, cols)] += dinv2[r] * np.outer(w, w)
    for (blk, st) in zip(cp.socs, scal.soc):
        if not blk.used.size:
            continue
        beta, v = st
        u = _jmul(v.copy())
        winv = (2.0 * np.outer(u, u) - np.diag(_jmul(np.ones(blk.dim)))) / beta
        w2inv = winv @ winv
        m_mat[np.ix_(blk.used, blk.used)] += blk.f_dense.T @ w2inv @ blk.f_dense
    for (blk, st) in zip(cp.psds, scal.psd):
        if not blk.col.size:
            continue
        m_cc = kernels.psd_schur(blk.p, blk.q, blk.wt, blk.starts, st[3])
        m_mat[np.ix_(blk.used, blk.used)] += m_cc
    return m_mat


def _jordan(cp, u, v):
    out = np.empty(cp.m)
    l = cp.l
    out[:l] = u[:l] * v[:l]
    for blk, off in zip(cp.socs, cp.soc_offs):
        ub = u[off:off + blk.dim]
        vb = v[off:off + blk.dim]
        out[off] = ub @ vb
        out[off + 1:off + blk.dim] = ub[0] * vb[1:] + vb[0] * ub[1:]
    for blk, off in zip(cp.psds, cp.psd_offs):
        um = kernels.svec_unpack(u[off:off + blk.svec_dim], blk.n)
        vm = kernels.svec_unpack(v[off:off + blk.svec_dim], blk.n)
        prod = um @ vm
        out[off:off + blk.svec_dim] = kernels.svec_pack(0.5 * (prod + prod.T))
    return out


def _cone_margin(cp, u):
    worst = np.inf
    if cp.l:
        worst = min(worst, u[:cp.l].min())
    for blk, off in zip(cp.socs, cp.soc_offs):
        ub = u[off:off + blk.dim]
        worst = min(worst, ub[0] - np.linalg.norm(ub[1:]))
    for blk, off in zip(cp.psds, cp.psd_offs):
        mat = kernels.svec_unpack(u[off:off + blk.svec_dim], blk.n)
        worst = min(worst, scipy.linalg.eigvalsh(mat).min())
    return worst


# ------------------------------------------------------------------- solve


def _solve_no_cones(cp, c, c_const):
    # equality-constrained linear objective: optimal iff c lies in range(A')
    if cp.p_eq == 0:
        if np.any(c):
            return ConicSolution(np.zeros(cp.n), -np.inf, "unbounded",
                                 {"iterations": 0})
        return ConicSolution(np.zeros(cp.n), c_const, "optimal",
                             {"iterations": 0})
    x, *_ = np.linalg.lstsq(cp.a_mat, cp.b, rcond=None)
    if np.linalg.norm(cp.a_mat @ x - cp.b) > 1e-8 * max(1, np.linalg.norm(cp.b)):
        return ConicSolution(x, np.inf, "infeasible", {"iterations": 0})
    y, *_ = np.linalg.lstsq(cp.a_mat.T, c, rcond=None)
    if np.linalg.norm(cp.a_mat.T @ y - c) > 1e-8 * max(1, np.linalg.norm(c)):
        return ConicSolution(x, -np.inf, "unbounded", {"iterations": 0})
    return ConicSolution(x, float(c @ x) + c_const, "optimal", {"iterations": 0})


def solve(program, settings=None):
    """Run the interior-point method on a ConicProgram."""
    settings = settings or SolveSettings()
    cp = _get_compiled(program)
    c = cp.cost_vector(program)
    c_const = program.objective.constant
    if cp.m == 0:
        return _solve_no_cones(cp, c, c_const)

    norm_b = max(1.0, np.linalg.norm(cp.b))
    norm_g = max(1.0, np.linalg.norm(cp.g))
    norm_c = max(1.0, np.linalg.norm(c))

    kkt = _Kkt(cp, settings.refine_steps)
    stats = {"iterations": 0, "kernel_backend": kernels.BACKEND}
    best = {"score": np.inf}

    def classify_final():
        if best["score"] < np.inf:
            stats.update(pres=best["pres"], dres=best["dres"],
                         gap=best["gap"], relgap=best["relgap"])
        if best["score"] < np.inf and best["pres"] <= 1e-7 \
                and best["dres"] <= 1e-5 and (best["gap"] <= 1e-6
                                              or best["relgap"] <= 1e-5):
            return "near_optimal", best["x"]
        return "numerical_failure", best.get("x", np.zeros(cp.n))

    def finish(status, x, extra=None):
        stats.update(extra or {})
        val = float(c @ x) + c_const if np.all(np.isfinite(x)) else np.nan
        return ConicSolution(x, val, status, stats)

    try:
        # cold start from the least-norm primal/dual points, pushed interior
        scal0 = _identity_scaling(cp)
        kkt.factor(_assemble_m(cp, scal0))
        xhat, _ = kkt.solve(-cp.f_adjoint(cp.g), cp.b)
        shat = cp.f_apply(xhat) + cp.g
        marg = _cone_margin(cp, shat)
        s = shat if marg > 0 else shat + (1.0 - marg) * cp.e
        xtil, y0 = kkt.solve(c, np.zeros(cp.p_eq))
        zhat = cp.f_apply(xtil)
        marg = _cone_margin(cp, zhat)
        z = zhat if marg > 0 else zhat + (1.0 - marg) * cp.e
        x, y = xhat, y0
    except (_InteriorLost, np.linalg.LinAlgError):
        return finish("numerical_failure", np.zeros(cp.n))

    for it in range(settings.max_iters):
        stats["iterations"] = it
        rd = cp.a_mat.T @ y + cp.f_adjoint(z) - c if cp.p_eq \
            else cp.f_adjoint(z) - c
        rp = cp.a_mat @ x - cp.b
        rc = cp.f_apply(x) + cp.g - s
        gap = float(s @ z)
        pcost = float(c @ x)
        dcost = float(cp.b @ y - cp.g @ z)
        pres = max(np.linalg.norm(rp) / norm_b, np.linalg.norm(rc) / norm_g)
        dres = np.linalg.norm(rd) / norm_c
        relgap = gap / max(1.0, abs(pcost))
        stats.update(pres=pres, dres=dres, gap=gap, relgap=relgap,
                     pcost=pcost + c_const, dcost=dcost + c_const)

        if settings.verbose:
            print(f"  ipm {it:3d}: pres {pres:9.2e} dres {dres:9.2e} "
                  f"gap {gap:9.2e} pcost {pcost:+.6e}")

        if pres <= settings.feastol and dres <= settings.feastol and \
                (gap <= settings.abstol or relgap <= settings.reltol):
            return finish("optimal", x)

        score = max(pres, dres, relgap)
        if score < best["score"]:
            best.update(score=score, x=x.copy(), pres=pres, dres=dres,
                        gap=gap, relgap=relgap)

        # Farkas-type certificates from the (diverging) iterates
        t_cert = dcost
        if t_cert > 0:
            ray = cp.a_mat.T @ y + cp.f_adjoint(z) if cp.p_eq \
                else cp.f_adjoint(z)
            if np.linalg.norm(ray) / t_cert <= settings.feastol * norm_c \
                    and _cone_margin(cp, z) >= -settings.feastol * t_cert:
                return finish("infeasible", np.full(cp.n, np.nan),
                              {"certificate": "dual_ray"})
        u_cert = -pcost
        if u_cert > 0:
            fx = cp.f_apply(x)
            viol = max(0.0, -_cone_margin(cp, fx))
            if np.linalg.norm(rp + cp.b) / u_cert <= settings.feastol * norm_b \
                    and viol / u_cert <= settings.feastol * norm_g:
                return finish("unbounded", x, {"certificate": "primal_ray"})

        try:
            scal = _Scaling(cp, s, z)
            kkt.factor(_assemble_m(cp, scal))
        except (_InteriorLost, np.linalg.LinAlgError):
            status, xb = classify_final()
            return finish(status, xb)

        mu = gap / cp.nu
        lam = scal.lam

        def newton(r4):
            # A'dy + F'dz = -rd; A dx = -rp; F dx - ds = -rc;
            # W dz + W^{-T} ds = r4, then refine against the same equations
            base = scal.wt_apply(r4) - rc
            dx, du = kkt.solve(cp.f_adjoint(scal.wtw_inv_apply(base)) + rd,
                               -rp)
            dy = -du
            dz = scal.wtw_inv_apply(base - cp.f_apply(dx))
            ds = cp.f_apply(dx) + rc
            for _ in range(settings.kkt_refine):
                e1 = -rd - cp.a_mat.T @ dy - cp.f_adjoint(dz)
                e2 = -rp - cp.a_mat @ dx
                e3 = -rc - cp.f_apply(dx) + ds
                e4 = r4 - scal.w_apply(dz) - scal.winvt_apply(ds)
                base_e = scal.wt_apply(e4) + e3
                cx, cu = kkt.solve(
                    cp.f_adjoint(scal.wtw_inv_apply(base_e)) - e1, e2)
                cz = scal.wtw_inv_apply(base_e - cp.f_apply(cx))
                dx = dx + cx
                dy = dy - cu
                dz = dz + cz
                ds = cp.f_apply(dx) + rc
            return dx, dy, dz, ds

        # predictor
        dx, dy, dz, ds = newton(-lam)
        dst = scal.winvt_apply(ds)
        dzt = scal.w_apply(dz)
        alpha_a = min(1.0, scal.max_step(dst), scal.max_step(dzt))
        gap_a = float((s + alpha_a * ds) @ (z + alpha_a * dz))
        sigma = min(1.0, max(0.0, gap_a / gap)) ** 3

        # corrector
        target = -_jordan(cp, lam, lam) - _jordan(cp, dst, dzt) \
            + sigma * mu * cp.e
        dx, dy, dz, ds = newton(scal.lam_div(target))
        dst = scal.winvt_apply(ds)
        dzt = scal.w_apply(dz)
        alpha = min(1.0, settings.step_frac * min(scal.max_step(dst),
                                                 scal.max_step(dzt)))
        if alpha < 1e-13 or not np.isfinite(alpha):
            status, xb = classify_final()
            return finish(status, xb)

        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz

    status, xb = classify_final()
    return finish(status, xb)


def _identity_scaling(cp):
    scal = _Scaling.__new__(_Scaling)
    scal.cp = cp
    scal.d = np.ones(cp.l)
    scal.lam = cp.e.copy()
    scal.soc = []
    for blk in cp.socs:
        v = np.zeros(blk.dim)
        v[0] = 1.0
        scal.soc.append((1.0, v))
    scal.psd = []
    for blk in cp.psds:
        eye = np.eye(blk.n)
        scal.psd.append((eye, eye.copy(), np.ones(blk.n), eye.copy()))
    return scal
