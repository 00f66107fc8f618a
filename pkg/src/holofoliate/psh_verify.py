"""Plurisubharmonic barriers for graphical tori and their numerical checks.

    phi     = rho(F),            rho(x)  = x + kappa (x^2 - x)
    psi     = c * rt(log F),     rt(x)   = 1 + (1 - exp(-beta x)) / beta
    omega_e = (|lambda|^2 - 1)/e + phi
    sigma_e = (|lambda|^2 - 1)/e - psi

F is the family's extension to the closed disk (``family.level_ext``).
kappa = 0 gives rho = id and beta = 0 gives rt(x) = 1 + x.  Both barriers
equal 1 on the t = 1 torus.

Conventions: ``laplacian`` is the full Laplacian d_xx + d_yy in w; the
complex Hessian has entries d^2 / dz_j d(conj z_k), so its w-w entry is a
quarter of the Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circle_fourier import eval_taylor, taylor_coeffs
from .errors import InputError

KINDS = ("phi", "psi", "omega_eps", "sigma_eps")
FD_STEP = 1e-4


@dataclass(frozen=True)
class Barrier:
    kind: str
    eps: float = 0.01
    kappa: float = 0.75
    beta: float = 1.5
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown barrier kind {self.kind!r}")
        if not 0 <= self.kappa < 1:
            raise InputError("kappa must lie in [0, 1)")
        if self.beta < 0 or self.c <= 0 or self.eps <= 0:
            raise InputError("beta must be >= 0, c and eps positive")

    # shape functions ---------------------------------------------------------

    def rho(self, x, order=0):
        k = self.kappa
        if order == 0:
            return x + k * (x * x - x)
        if order == 1:
            return 1.0 + k * (2 * x - 1.0)
        return np.full_like(np.asarray(x, dtype=float), 2 * k)

    def rho_tilde(self, x, order=0):
        b = self.beta
        if b == 0:
            return [1.0 + x, np.ones_like(x), np.zeros_like(x)][order]
        e = np.exp(-b * x)
        return [1.0 + (1.0 - e) / b, e, -b * e][order]

    def level_value(self, t):
        """Barrier value on the level-t torus (lambda on the unit circle)."""
        if self.kind in ("phi", "omega_eps"):
            return self.rho(t)
        v = self.c * self.rho_tilde(np.log(t))
        return v if self.kind == "psi" else -v

    def of_level(self, lam, F):
        lam = np.asarray(lam, dtype=complex)
        if self.kind in ("phi", "omega_eps"):
            val = self.rho(F)
        else:
            val = self.c * self.rho_tilde(np.log(F))
        if self.kind == "omega_eps":
            return (np.abs(lam) ** 2 - 1.0) / self.eps + val
        if self.kind == "sigma_eps":
            return (np.abs(lam) ** 2 - 1.0) / self.eps - val
        return val


def evaluate_barrier(barrier, family, lam, w):
    lam = np.asarray(lam, dtype=complex)
    return barrier.of_level(lam, family.level_ext(lam, w))


# ---------------------------------------------------------------------------
# grids and finite differences


def default_grid(family, n_lambda_r=4, n_lambda_th=8, n_w_r=64, n_w_th=16, w_max=None):
    """Polar grid of (lambda, w) pairs with |lambda| <= 1 and w away from 0."""
    if w_max is None:
        w_max = 1.3 * np.sqrt(family.t_max) * _profile_max(family)
    lr = np.linspace(0.0, 1.0, n_lambda_r)
    lth = 2 * np.pi * np.arange(n_lambda_th) / n_lambda_th
    lam = np.unique(np.round((lr[:, None] * np.exp(1j * lth[None, :])).ravel(), 14))
    wr = np.linspace(0.1 * w_max, w_max, n_w_r)
    wth = 2 * np.pi * (np.arange(n_w_th) + 0.5) / n_w_th
    w = (wr[:, None] * np.exp(1j * wth[None, :])).ravel()
    L, W = np.meshgrid(lam, w, indexing="ij")
    return L.ravel(), W.ravel()


def _profile_max(family):
    if hasattr(family, "profile"):
        th = 2 * np.pi * np.arange(64) / 64
        return float(np.max(family.profile(np.exp(1j * th)[:, None], th[None, :])))
    return 1.0


def _laplacian_w(func, lam, w, h):
    return (func(lam, w + h) + func(lam, w - h) + func(lam, w + 1j * h)
            + func(lam, w - 1j * h) - 4 * func(lam, w)) / h**2


def _grad_sq_w(func, lam, w, h):
    fx = (func(lam, w + h) - func(lam, w - h)) / (2 * h)
    fy = (func(lam, w + 1j * h) - func(lam, w - 1j * h)) / (2 * h)
    return fx**2 + fy**2


@dataclass
class LaplacianReport:
    kind: str
    worst: float
    worst_point: tuple
    passed: bool
    echo_error: float
    richardson: float

    def to_dict(self):
        return {"kind": self.kind, "worst": self.worst,
                "worst_point": [[self.worst_point[0].real, self.worst_point[0].imag],
                                [self.worst_point[1].real, self.worst_point[1].imag]],
                "passed": self.passed, "eq1_echo_rel_error": self.echo_error,
                "richardson": self.richardson}


def laplacian_sign_check(barrier, family, grid=None, h=FD_STEP):
    """Sign of the w-Laplacian of phi (> 0) or psi (< 0) over a grid.

    Also compares the finite-difference Laplacian with the chain-rule form
    rho'' |grad F|^2 + rho' Lap F (and the analogue for psi).
    """
    if barrier.kind not in ("phi", "psi"):
        raise InputError("laplacian_sign_check applies to phi or psi")
    lam, w = default_grid(family) if grid is None else grid

    def u(l, z):
        return barrier.of_level(l, family.level_ext(l, z))

    def F(l, z):
        return family.level_ext(l, z)

    lap = _laplacian_w(u, lam, w, h)
    lap_half = _laplacian_w(u, lam, w, h / 2)
    f = F(lam, w)
    grad2 = _grad_sq_w(F, lam, w, h)
    lap_f = _laplacian_w(F, lam, w, h)
    if barrier.kind == "phi":
        chain = barrier.rho(f, 2) * grad2 + barrier.rho(f, 1) * lap_f
        worst_i = int(np.argmin(lap))
        passed = bool(lap.min() > 0)
    else:
        lap_log = lap_f / f - grad2 / f**2
        x = np.log(f)
        chain = barrier.c * (barrier.rho_tilde(x, 2) * grad2 / f**2 + barrier.rho_tilde(x, 1) * lap_log)
        worst_i = int(np.argmax(lap))
        passed = bool(lap.max() < 0)
    scale = np.maximum(np.abs(lap), 1e-12)
    echo = float(np.max(np.abs(lap - chain) / scale))
    rich = float(np.max(np.abs(lap - lap_half) / scale))
    return LaplacianReport(kind=barrier.kind, worst=float(lap[worst_i]),
                           worst_point=(complex(lam[worst_i]), complex(w[worst_i])),
                           passed=passed, echo_error=echo, richardson=rich)


def complex_hessian(func, lam, w, h=FD_STEP):
    """Levi matrices d^2 u / dz_j d(conj z_k) at each point, shape (P, 2, 2)."""
    lam = np.asarray(lam, dtype=complex)
    w = np.asarray(w, dtype=complex)
    dirs = [(1, 0), (1j, 0), (0, 1), (0, 1j)]  # x1, y1, x2, y2
    u0 = func(lam, w)

    def shifted(a, b):
        return func(lam + a[0] * h + b[0] * h, w + a[1] * h + b[1] * h)

    d2 = np.empty((4, 4) + u0.shape)
    for i in range(4):
        for j in range(i, 4):
            if i == j:
                val = (shifted(dirs[i], (0, 0)) - 2 * u0 + shifted((-dirs[i][0], -dirs[i][1]), (0, 0))) / h**2
            else:
                di, dj = dirs[i], dirs[j]
                ni, nj = (-di[0], -di[1]), (-dj[0], -dj[1])
                val = (shifted(di, dj) - shifted(di, nj) - shifted(ni, dj) + shifted(ni, nj)) / (4 * h**2)
            d2[i, j] = d2[j, i] = val
    hess = np.empty(u0.shape + (2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            xa, ya, xb, yb = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1
            hess[..., a, b] = 0.25 * ((d2[xa, xb] + d2[ya, yb]) + 1j * (d2[xa, yb] - d2[ya, xb]))
    return hess


@dataclass
class HessianReport:
    kind: str
    eps: float
    min_eigen: float
    worst_point: tuple
    richardson: float
    eigen_range: tuple = field(default=(0.0, 0.0))

    def to_dict(self):
        return {"kind": self.kind, "eps": self.eps, "min_eigen": self.min_eigen,
                "worst_point": [[self.worst_point[0].real, self.worst_point[0].imag],
                                [self.worst_point[1].real, self.worst_point[1].imag]],
                "richardson": self.richardson, "positive": self.min_eigen > 0}


def _min_eig(hess):
    a = hess[..., 0, 0].real
    d = hess[..., 1, 1].real
    b = np.abs(hess[..., 0, 1])
    return 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + b**2)


def hessian_report(barrier, family, eps=None, grid=None, h=FD_STEP):
    if barrier.kind not in ("omega_eps", "sigma_eps"):
        raise InputError("hessian_min_eigen applies to omega_eps or sigma_eps")
    if eps is not None:
        barrier = Barrier(barrier.kind, eps=eps, kappa=barrier.kappa, beta=barrier.beta, c=barrier.c)
    lam, w = default_grid(family) if grid is None else grid

    def u(l, z):
        return evaluate_barrier(barrier, family, l, z)

    e1 = _min_eig(complex_hessian(u, lam, w, h))
    e2 = _min_eig(complex_hessian(u, lam, w, h / 2))
    i = int(np.argmin(e1))
    rich = float(np.max(np.abs(e1 - e2)) / max(1.0, float(np.max(np.abs(e1)))))
    return HessianReport(kind=barrier.kind, eps=barrier.eps, min_eigen=float(e1[i]),
                         worst_point=(complex(lam[i]), complex(w[i])), richardson=rich,
                         eigen_range=(float(e1.min()), float(e1.max())))


def hessian_min_eigen(barrier, family, eps=None, grid=None):
    return hessian_report(barrier, family, eps, grid).min_eigen


def certified_eps(barrier, family, candidates=(1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001), grid=None):
    """Largest candidate eps whose Hessian is positive on the grid, or None."""
    for e in sorted(candidates, reverse=True):
        if hessian_min_eigen(barrier, family, e, grid) > 0:
            return e
    return None


# ---------------------------------------------------------------------------


@dataclass
class TrappingReport:
    kind: str
    eps: float
    level_value: float
    max_interior: float
    max_boundary: float
    margin: float
    hopf_margin: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def trapping_check(disk, barrier, family, eps=None, n_radii=32, n_angles=64, tol=1e-9,
                   hopf_delta=1e-3):
    """Is the disk inside the barrier's sublevel set, with positive outward slope?"""
    if barrier.kind not in ("omega_eps", "sigma_eps"):
        raise InputError("trapping_check applies to omega_eps or sigma_eps")
    if eps is not None:
        barrier = Barrier(barrier.kind, eps=eps, kappa=barrier.kappa, beta=barrier.beta, c=barrier.c)
    coeffs = taylor_coeffs(disk.g)
    r = np.arange(n_radii) / n_radii
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    lam_in = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    lam_bd = np.exp(1j * th)
    lam_hopf = (1.0 - hopf_delta) * lam_bd

    def on_disk(lam):
        return evaluate_barrier(barrier, family, lam, eval_taylor(coeffs, lam))

    level = float(barrier.level_value(disk.level))
    inner = on_disk(lam_in)
    bd = on_disk(lam_bd)
    hopf = float(np.min((bd - on_disk(lam_hopf)) / hopf_delta))
    top = max(float(inner.max()), float(bd.max()))
    margin = level - float(inner.max())
    passed = top <= level + tol and hopf > 0 and margin > 0
    return TrappingReport(kind=barrier.kind, eps=barrier.eps, level_value=level,
                          max_interior=float(inner.max()), max_boundary=float(bd.max()),
                          margin=margin, hopf_margin=hopf, passed=bool(passed))
