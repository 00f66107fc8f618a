import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holofoliate.disk_solver import SolverConfig, certify, solve_disk
from holofoliate.errors import InputError, ZeroSection
from holofoliate.psh_verify import (
    Barrier,
    certified_eps,
    complex_hessian,
    default_grid,
    evaluate_barrier,
    hessian_min_eigen,
    hessian_report,
    laplacian_sign_check,
    trapping_check,
)
from holofoliate.torus_model import TorusFamily


def test_barrier_parameters():
    b = Barrier("phi")
    assert b.rho(0.0) == 0.0 and b.rho(1.0) == 1.0
    x = np.linspace(0, 1, 11)
    assert np.all(np.diff(b.rho(x)) > 0) and b.rho(x, 2)[0] > 0
    p = Barrier("psi")
    assert p.rho_tilde(0.0) == 1.0
    assert p.rho_tilde(np.array(-3.0), 2) < 0
    with pytest.raises(InputError):
        Barrier("chi")
    with pytest.raises(InputError):
        Barrier("phi", kappa=1.2)


def test_phi_identity_is_modulus_squared(standard):
    w = np.array([0.3 + 0.2j, 1.1j])
    val = evaluate_barrier(Barrier("phi", kappa=0.0), standard, np.array([0.5, 1.0]), w)
    assert np.max(np.abs(val - np.abs(w) ** 2)) < 1e-15


def test_omega_equals_one_on_unit_torus(standard):
    val = evaluate_barrier(Barrier("omega_eps"), standard, 1.0, np.exp(0.4j))
    assert val == pytest.approx(1.0, abs=1e-14)


def test_psi_tends_to_minus_infinity(standard):
    b = Barrier("psi")
    vals = [evaluate_barrier(b, standard, 1.0, r) for r in (1e-1, 1e-3, 1e-6, 1e-9)]
    assert np.all(np.diff(vals) < 0) and vals[-1] < -1e3
    with pytest.raises(ZeroSection):
        evaluate_barrier(b, standard, 1.0, 0.0)


def test_collar_exactness(twisted):
    w = 0.15 * np.exp(1j * np.linspace(0, 6, 9))
    lam = 0.7 * np.exp(1j * np.linspace(1, 2, 9))
    phi = evaluate_barrier(Barrier("phi", kappa=0.0), twisted, lam, w)
    assert np.array_equal(phi, np.abs(w) ** 2)
    psi = Barrier("psi", beta=2.0, c=1.5)
    exact = psi.c * psi.rho_tilde(np.log(np.abs(w) ** 2))
    assert np.max(np.abs(evaluate_barrier(psi, twisted, lam, w) - exact)) < 1e-15


def test_laplacian_of_modulus_squared(standard):
    rep = laplacian_sign_check(Barrier("phi", kappa=0.0), standard)
    assert rep.passed and rep.worst == pytest.approx(4.0, abs=1e-6)


def test_laplacian_of_log_modulus(standard):
    # psi = log |w|^2 is harmonic: zero Laplacian, so strict negativity fails
    rep = laplacian_sign_check(Barrier("psi", beta=0.0), standard)
    assert abs(rep.worst) < 1e-3 and not rep.passed


def test_laplacian_psi_matches_closed_form(standard):
    # on circles Lap(rt(log |w|^2)) = rt''(log|w|^2) |grad log|w|^2|^2 = -beta e^{-beta x} 4/|w|^2
    b = Barrier("psi", beta=1.0)
    lam = np.ones(3)
    w = np.array([0.4, 0.7j, -1.1 + 0.2j])
    grid = (lam, w)
    rep = laplacian_sign_check(b, standard, grid)
    x = np.log(np.abs(w) ** 2)
    exact = -np.exp(-x) * 4 / np.abs(w) ** 2
    assert rep.worst == pytest.approx(exact.max(), rel=1e-5)
    assert rep.passed


def test_laplacian_margin_on_bumpy(bumpy):
    rep = laplacian_sign_check(Barrier("phi"), bumpy)
    assert rep.passed and rep.worst > 0
    assert rep.echo_error < 1e-4


def test_hessian_standard_closed_form(standard):
    # lambda-independent: diag(1/eps, Lap(phi)/4); with rho = id Lap |w|^2 / 4 = 1
    grid = (np.array([0.2, 0.5j]), np.array([0.5, 0.8 + 0.1j]))
    h = complex_hessian(lambda lam, w: evaluate_barrier(Barrier("omega_eps", eps=0.01, kappa=0.0),
                                                        standard, lam, w), *grid)
    assert np.max(np.abs(h[:, 0, 1])) < 1e-4
    assert np.max(np.abs(h[:, 0, 0] - 100.0)) < 1e-3
    assert np.max(np.abs(h[:, 1, 1] - 1.0)) < 1e-4
    assert hessian_min_eigen(Barrier("omega_eps", kappa=0.0), standard, 0.01, grid) == pytest.approx(1.0, abs=1e-4)


def test_hessian_positive_for_small_eps(twisted):
    assert hessian_min_eigen(Barrier("omega_eps"), twisted, 0.01) > 0
    assert hessian_min_eigen(Barrier("sigma_eps"), twisted, 0.01) > 0


def test_large_eps_fails_on_lambda_dependent_family():
    # the mixed lambda-w block outweighs (1/eps) once eps is large
    fam = TorusFamily.from_profile({(0, 0): 1.0, (-2, 1): 0.1})
    assert hessian_min_eigen(Barrier("omega_eps"), fam, 10.0) < 0
    assert hessian_min_eigen(Barrier("omega_eps"), fam, 0.01) > 0
    eps = certified_eps(Barrier("omega_eps"), fam, candidates=(10.0, 3.0, 1.0, 0.1))
    assert eps == 1.0


def test_default_convexifiers_are_needed(twisted):
    assert hessian_min_eigen(Barrier("sigma_eps", beta=1.0), twisted, 0.01) < 0
    assert hessian_min_eigen(Barrier("sigma_eps"), twisted, 0.01) > 0


def test_hessian_report_requires_pseudoconvex_kind(standard):
    with pytest.raises(InputError):
        hessian_report(Barrier("phi"), standard)


def test_trapping_constant_disk(standard):
    disk = solve_disk(standard, 0.49, np.full(128, 0.7 + 0j))
    rep = trapping_check(disk, Barrier("omega_eps", eps=0.01, kappa=0.0), standard)
    # omega(g) = (|lam|^2 - 1)/eps + t: max t on the boundary, radial slope 2/eps
    assert rep.passed
    assert rep.max_boundary == pytest.approx(0.49, abs=1e-12)
    assert rep.hopf_margin == pytest.approx(200.0, rel=1e-2)


def test_trapping_detects_exit(standard):
    disk = solve_disk(standard, 0.49, np.full(128, 0.7 + 0j))
    bigger = certify(standard, 0.49, 1.2 * disk.g, SolverConfig())
    rep = trapping_check(bigger, Barrier("omega_eps", eps=0.01), standard)
    assert not rep.passed


def test_trapping_on_converged_leaves(twisted, fol_twisted):
    for leaf in fol_twisted.value.leaves[::4]:
        for kind in ("omega_eps", "sigma_eps"):
            rep = trapping_check(leaf, Barrier(kind, eps=0.01), twisted)
            assert rep.passed and rep.hopf_margin > 0


def test_monotone_trapping_sweep(twisted, fol_twisted):
    leaf = fol_twisted.value.leaves[7]
    threshold = certified_eps(Barrier("omega_eps"), twisted)
    for eps in (threshold, threshold / 3, threshold / 10, threshold / 100):
        assert trapping_check(leaf, Barrier("omega_eps"), twisted, eps=eps).passed


def test_default_grid_avoids_zero(twisted):
    lam, w = default_grid(twisted)
    assert np.all(np.abs(lam) <= 1 + 1e-12) and np.all(np.abs(w) > 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.1, 1.5), st.floats(0, 2 * np.pi))
def test_phi_chain_rule_echo(kappa, r, ang):
    fam = TorusFamily.from_profile({(0, 0): 1.0, (0, 1): 0.1})
    w = np.array([r * np.exp(1j * ang)])
    rep = laplacian_sign_check(Barrier("phi", kappa=kappa), fam, (np.ones(1), w))
    assert rep.echo_error < 1e-4


def test_convexity_of_rho_restores_subharmonicity(bumpy):
    # F alone has negative Laplacian in the blend band; rho'' |grad F|^2 must compensate
    grid = (np.ones(1), np.array([0.81 * np.exp(3j)]))
    assert not laplacian_sign_check(Barrier("phi", kappa=0.0), bumpy, grid).passed
    assert not laplacian_sign_check(Barrier("phi", kappa=0.5), bumpy, grid).passed
    assert laplacian_sign_check(Barrier("phi"), bumpy, grid).passed
    assert laplacian_sign_check(Barrier("phi"), bumpy).passed
