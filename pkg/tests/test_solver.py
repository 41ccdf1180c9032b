import numpy as np
import pytest

from aircov import dcp, model, solver
from aircov.conic import ConicSolution, solve
from aircov.covertness import covert_feasible, covert_roots
from aircov.solver import SolveReport, an_seed, initialize, run, \
    surrogate_objective


CFG = model.desk_config(k=2)
CH = model.sample_channels(CFG, 0)
BOUNDS = covert_roots(CFG.epsilon)


@pytest.fixture(scope="module")
def report():
    return run(CH, CFG)


# ------------------------------------------------------------ starting point

def test_initialize_is_lifted_and_feasible():
    it = initialize(CH, CFG, BOUNDS)
    assert dcp.residual(it, CH) <= 1e-9
    for i, w in enumerate(it.w_k):
        assert np.linalg.norm(w) ** 2 <= CFG.p_sensor[i] + 1e-9
    assert np.linalg.norm(it.v) ** 2 <= CFG.p_ap + 1e-9
    assert covert_feasible(it.d, it.e, BOUNDS, CFG.sigma2_w)


def test_initialize_backs_off_to_the_cap():
    # sensors far above what covertness allows: the common factor must pin
    # the warden's received power exactly on the cap
    cfg = model.desk_config(k=2, p_sensor=1e6, p_ap=1e-12)
    ch = model.sample_channels(cfg, 0)
    it = initialize(ch, cfg, BOUNDS)
    cap = BOUNDS.cap_factor * (it.e + cfg.sigma2_w)
    assert it.d == pytest.approx(cap, rel=1e-9)
    w_norm2 = np.linalg.norm(it.w_k[0]) ** 2
    assert w_norm2 < cfg.p_sensor[0]


def test_an_seed_opens_the_cap():
    v = an_seed(CH, CFG, BOUNDS)
    assert np.linalg.norm(v) ** 2 <= CFG.p_ap + 1e-9
    assert np.linalg.matrix_rank(v) <= 1
    d_full = sum(CFG.p_sensor[i] / CFG.n_s
                 * np.linalg.norm(CH.g_k[i]) ** 2 for i in range(CFG.k))
    e = np.linalg.norm(CH.f @ v) ** 2
    if np.linalg.norm(v) > 0 and e < CFG.p_ap * np.linalg.norm(CH.f) ** 2:
        # unless power-limited, the seed makes full sensor power covert
        assert covert_feasible(d_full, e, BOUNDS, CFG.sigma2_w)


# ----------------------------------------------------------------- surrogate

def test_surrogate_is_exact_at_the_anchor():
    it = initialize(CH, CFG, BOUNDS)
    p = CFG.penalty
    val = surrogate_objective(it, it, p, CFG, CH)
    direct = CFG.k * CFG.n_s \
        - dcp.f_upsilon_exact(it.a, it.b, it.c, CFG.sigma2_a) \
        + p * dcp.residual(it, CH)
    assert val == pytest.approx(direct, abs=1e-9)


def test_surrogate_matches_conic_objective():
    anchor = initialize(CH, CFG, BOUNDS, v=an_seed(CH, CFG, BOUNDS))
    prog = dcp.build_subproblem(CH, CFG, BOUNDS, anchor, CFG.penalty)
    sol = solve(prog)
    it = dcp.extract_iterate(sol, prog)
    val = surrogate_objective(it, anchor, CFG.penalty, CFG, CH)
    assert val == pytest.approx(sol.objective_value,
                                abs=1e-6 * max(1.0, abs(val)))


# ---------------------------------------------------------------- run basics

def test_run_report_shape(report):
    r = report
    assert isinstance(r, SolveReport)
    n = len(r.objective_trace)
    assert len(r.residual_trace) == n
    assert len(r.mse_trace) == n
    assert len(r.penalty_trace) == n
    assert r.iterations == n - 1
    assert r.wall_time > 0
    assert r.converged and r.backend_ok


def test_run_is_deterministic(report):
    again = run(CH, CFG)
    assert again.objective_trace == report.objective_trace
    assert again.mse == report.mse
    assert again.penalty_final == report.penalty_final


def test_monotone_descent_at_fixed_penalty(report):
    obj = report.objective_trace
    pen = report.penalty_trace
    for i in range(1, len(obj)):
        if pen[i] == pen[i - 1]:
            assert obj[i] <= obj[i - 1] + 1e-8


def test_penalties_only_escalate(report):
    pen = report.penalty_trace
    assert pen[0] == CFG.penalty
    for i in range(1, len(pen)):
        assert pen[i] in (pen[i - 1], pen[i - 1] * 10.0)


def test_final_point_is_feasible(report):
    d = report.design
    for i, w in enumerate(d.w_k):
        assert np.linalg.norm(w) ** 2 <= CFG.p_sensor[i] + 1e-7
    assert np.linalg.norm(d.v) ** 2 <= CFG.p_ap + 1e-7
    assert report.kld_final <= 2 * CFG.epsilon ** 2 + 1e-6
    assert report.residual_trace[-1] <= CFG.tol_residual


def test_exactness_at_convergence(report):
    # once the lift closes, the conic objective is the physical error
    it = dcp.lift(report.design.w_k, report.design.v, CH)
    f_ups = dcp.f_upsilon_exact(it.a, it.b, it.c, CFG.sigma2_a)
    lifted = CFG.k * CFG.n_s - f_ups
    assert abs(report.mse - lifted) <= 1e-3 * CFG.k * CFG.n_s


def test_run_improves_on_the_start(report):
    assert report.mse < report.mse_trace[0] * 0.9


def test_fixed_v_run_stays_fixed():
    v = np.zeros((CFG.n_t, CFG.n_t), dtype=complex)
    rep = run(CH, CFG, fixed_v=v)
    assert np.array_equal(rep.design.v, v)
    assert rep.converged
    # silent AP: the cap collapses to thermal noise only
    s0, _ = model.willie_variances(rep.design.w_k, rep.design.v, CH,
                                   CFG.sigma2_w)
    assert s0 == pytest.approx(CFG.sigma2_w)


# ------------------------------------------------------------- failure paths

def _failing(status="numerical_failure"):
    def fake(prog, settings=None):
        n = prog.n_vars
        return ConicSolution(np.zeros(n), np.nan, status,
                             {"iterations": 0, "pres": 1.0, "dres": 1.0,
                              "gap": 1.0, "relgap": 1.0})
    return fake


def test_backend_failure_before_any_step(monkeypatch):
    monkeypatch.setattr(solver, "solve", _failing())
    rep = run(CH, CFG)
    assert not rep.converged and not rep.backend_ok
    assert rep.iterations == 0
    assert len(rep.objective_trace) == 1
    assert rep.mse == pytest.approx(rep.mse_trace[0])


def test_backend_failure_after_progress(monkeypatch):
    real = solve
    calls = {"n": 0}

    def flaky(prog, settings=None):
        calls["n"] += 1
        if calls["n"] > 1:
            return _failing()(prog, settings)
        return real(prog, settings)

    monkeypatch.setattr(solver, "solve", flaky)
    v = np.zeros((CFG.n_t, CFG.n_t), dtype=complex)
    rep = run(CH, CFG, fixed_v=v)
    assert rep.iterations == 1
    assert len(rep.objective_trace) == 2
    # one good step, then the stall ladder runs out of raises
    if not rep.converged:
        assert not rep.backend_ok
        assert rep.penalty_final == pytest.approx(CFG.penalty * 10.0 ** 4)
