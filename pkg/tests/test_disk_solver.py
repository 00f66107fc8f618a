import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holofoliate.circle_fourier import BoundaryFunction, holder_norm, theta_derivative, winding_samples
from holofoliate.disk_solver import (
    SolverConfig,
    boundary_equation_residual,
    boundary_lambda,
    certify,
    continue_batch,
    continue_in_t,
    derivative_bound_check,
    newton_step,
    solve_disk,
    trace_residual_on_grid,
)
from holofoliate.errors import (
    ContinuationStuck,
    InputError,
    LeafHitZero,
    NoConvergence,
    NonzeroWinding,
)

LAM = boundary_lambda(256)


def test_config_validation():
    with pytest.raises(InputError):
        SolverConfig(tol=0)
    with pytest.raises(InputError):
        SolverConfig(damping=1.5)
    assert SolverConfig().with_(tol=1e-6).tol == 1e-6


def test_newton_fixed_point(standard):
    g = BoundaryFunction.constant(0.5)
    nxt, res = newton_step(standard, 0.25, g)
    assert res == 0.0
    assert np.array_equal(nxt.samples, g.samples)


def test_newton_step_closed_form_on_circles(standard):
    # F = |w|^2, g = 0.4: R = 0.16 - 0.25, F_w = 0.4 so a = log 0.4, b = 0,
    # X = 1 and the exact linearisation 2 g du = -R gives du = 0.1125.
    nxt, res = newton_step(standard, 0.25, BoundaryFunction.constant(0.4))
    assert res == pytest.approx(0.09, abs=1e-15)
    assert np.max(np.abs(nxt.samples - 0.5125)) < 1e-9
    _, res2 = newton_step(standard, 0.25, nxt)
    assert res2 < res


def test_newton_is_radial_for_rotated_seed(standard):
    c = 0.4 * np.exp(0.7j)
    nxt, _ = newton_step(standard, 0.25, np.full(256, c))
    assert np.max(np.abs(np.angle(nxt / c))) < 1e-9


def test_solve_disk_examples(standard):
    c = 0.3 * np.exp(1j * np.pi / 4)
    disk = solve_disk(standard, 0.09, np.full(256, c))
    assert np.max(np.abs(disk.g - c)) < 1e-15
    disk = solve_disk(standard, 0.09, np.full(256, 0.2 + 0.1j))
    target = 0.3 * np.exp(1j * np.angle(0.2 + 0.1j))
    assert np.max(np.abs(disk.g - target)) < 1e-10
    assert disk.trace_residual < 1e-10 and disk.min_modulus > 0.29


def test_solve_disk_bumpy_from_continuation(bumpy):
    path = continue_batch(bumpy, np.full((1, 256), np.sqrt(bumpy.eps)), bumpy.eps, 1.0)
    disk = solve_disk(bumpy, 1.0, path[-1][1][0].g * (1 + 1e-3))
    assert disk.trace_residual < 1e-10 and disk.holo_residual < 1e-9


def test_quadratic_convergence(twisted):
    path = continue_batch(twisted, np.full((1, 256), 0.8 + 0.0j), 0.64, 0.8)
    g = path[-1][1][0].g * (1 + 0.05 * LAM)
    res = []
    for _ in range(8):
        g, r = newton_step(twisted, 0.8, g)
        res.append(float(r))
        if r < 1e-14:
            break
    tail = [r for r in res if 1e-13 < r < 1e-2][-3:]
    assert len(tail) == 3
    order = np.log(tail[2] / tail[1]) / np.log(tail[1] / tail[0])
    assert order >= 1.8


def test_seed_winding_is_rejected(standard):
    with pytest.raises(NonzeroWinding):
        solve_disk(standard, 0.25, 0.5 * LAM)


def test_seed_through_zero_is_rejected(standard):
    seed = np.full(256, 0.5 + 0j)
    seed[3] = 0
    with pytest.raises(LeafHitZero):
        solve_disk(standard, 0.25, seed)


def test_certify_flags_interior_zero(standard):
    # boundary of modulus ~ 0.5 but the interior extension vanishes at 0
    g = 0.5 * LAM * np.exp(0.0)
    with pytest.raises(LeafHitZero):
        certify(standard, 0.25, g)


def test_no_convergence_with_tiny_budget(twisted):
    with pytest.raises(NoConvergence):
        solve_disk(twisted, 1.0, np.full(256, 0.3 + 0j), SolverConfig(max_iter=1))


def test_continuation_of_constants_on_standard_torus(standard):
    xi = 1.3
    leaf = solve_disk(standard, standard.eps, np.full(256, np.sqrt(standard.eps) * np.exp(1j * xi)))
    path = continue_in_t(standard, leaf, 1.0)
    assert path[-1].level == 1.0
    levels = [d.level for d in path]
    assert np.all(np.diff(levels) > 0)
    for d in path:
        assert np.max(np.abs(d.g - np.sqrt(d.level) * np.exp(1j * xi))) < 1e-9
    rep = derivative_bound_check(path)
    assert rep.passed and rep.max_sup == 0.0


def test_continuation_path_certificates(bumpy):
    path = continue_batch(bumpy, np.full((1, 256), np.sqrt(bumpy.eps) * 1j), bumpy.eps, 1.0)
    assert all(d.trace_residual < 1e-10 for _, (d,) in path)
    for _, (d,) in path:
        assert int(winding_samples(d.g, max_step=None)) == 0


def test_continuation_stuck_reports_last_level(twisted):
    cfg = SolverConfig(max_iter=1, t_step=0.5, min_step=0.1)
    with pytest.raises(ContinuationStuck) as info:
        continue_batch(twisted, np.full((1, 256), np.sqrt(twisted.eps)), twisted.eps, 1.0, cfg)
    assert info.value.last_t == pytest.approx(twisted.eps)


def test_boundary_equation_residual(standard, twisted):
    const = solve_disk(standard, 0.36, np.full(256, 0.6 + 0j))
    assert boundary_equation_residual(standard, const) < 1e-12
    path = continue_batch(twisted, np.full((1, 256), np.sqrt(twisted.eps)), twisted.eps, 1.0)
    disk = path[-1][1][0]
    base = boundary_equation_residual(twisted, disk)
    assert base < 1e-6
    # linear response to a perturbation g + s lambda^2
    resp = []
    for s in (1e-3, 2e-3):
        bad = certify(twisted, 1.0, disk.g + s * LAM**2, SolverConfig(holo_tol=1.0))
        resp.append(boundary_equation_residual(twisted, bad))
    assert resp[0] > 1e3 * base
    assert resp[1] / resp[0] == pytest.approx(2.0, rel=0.05)


def test_grid_convergence_and_holder_stability(twisted):
    path = continue_batch(twisted, np.full((1, 256), np.sqrt(twisted.eps)), twisted.eps, 1.0)
    disk = path[-1][1][0]
    fine = trace_residual_on_grid(twisted, disk, 512)
    assert fine < 10 * max(disk.trace_residual, 1e-15)
    h1 = holder_norm(theta_derivative(disk.boundary), 0.5).total
    h2 = holder_norm(theta_derivative(disk.boundary.resample(512)), 0.5).total
    assert abs(h2 - h1) <= 0.2 * h1


def test_derivative_bound_gates_on_holomorphy(standard):
    good = solve_disk(standard, 0.25, np.full(256, 0.5 + 0j))
    bad = certify(standard, 0.25, 0.5 + 0.01 * np.conj(LAM), SolverConfig(holo_tol=1.0))
    rep = derivative_bound_check([good, bad])
    assert not rep.passed and "holomorphy" in rep.reason


def test_derivative_bound_detects_blow_up(standard):
    disks = [certify(standard, 0.25, 0.5 + 1e-3 * LAM) for _ in range(5)]
    disks.append(certify(standard, 0.25, 0.5 + 0.3 * LAM))
    rep = derivative_bound_check(disks)
    assert not rep.passed


def test_disk_serialization(standard):
    disk = solve_disk(standard, 0.25, np.full(64, 0.5j))
    d = disk.to_dict()
    assert d["level"] == 0.25 and d["boundary"]["N"] == 64
    assert abs(disk(0.3 + 0.1j) - 0.5j) < 1e-14


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0, 2 * np.pi), st.floats(0.0, 0.2), st.floats(0, 2 * np.pi))
def test_standard_torus_always_constant(t, phase, amp, phase2):
    fam_seed = np.sqrt(t) * np.exp(1j * phase) * (1 + amp * np.exp(1j * phase2) * LAM)
    from holofoliate.torus_model import TorusFamily

    disk = solve_disk(TorusFamily.standard(), t, fam_seed)
    assert np.ptp(np.abs(disk.g)) < 1e-9
    assert np.max(np.abs(disk.g - disk.g.mean())) < 1e-9


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 0.15), st.floats(0.1, 1.0))
def test_newton_residual_monotone(amp, t):
    from holofoliate.torus_model import TorusFamily

    fam = TorusFamily.from_profile({(0, 0): 1.0, (1, 1): amp})
    g = np.full(256, np.sqrt(t) * 0.9 + 0j)
    last = np.inf
    for _ in range(4):
        g_next, r = newton_step(fam, t, g, damping=0.5)
        assert r <= last + 1e-15
        last, g = r, g_next
