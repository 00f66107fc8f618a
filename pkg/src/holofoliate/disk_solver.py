"""Holomorphic disks with boundary on a graphical torus.

The unknown is the boundary trace g of a holomorphic function on the unit
disk.  Given F_w(lambda, g) = exp(a + i b) (a zero-winding curve), the
function X = exp(Hb - i b) is holomorphic and points along the normal of the
fibre curve.  Corrections of the form (u + i Hu) X stay holomorphic, and

    F(lambda, g + (u + i Hu) X) - t  ~  R + 2 exp(a + Hb) u,

so the Newton correction is u = -R exp(-a - Hb) / 2, a pointwise division.
Everything below works on batches of leaves (arrays of shape (B, N)).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .circle_fourier import (
    BoundaryFunction,
    eval_taylor,
    hilbert_samples,
    holomorphy_residual_samples,
    log_branch_samples,
    taylor_coeffs,
    theta_derivative_samples,
    theta_grid,
    wavenumbers,
    winding_samples,
)
from .errors import (
    ContinuationStuck,
    HolofoliateError,
    InputError,
    LeafHitZero,
    NoConvergence,
    NonzeroWinding,
)

INTERIOR_GRID = 32
ZERO_FLOOR = 1e-8
DERIVATIVE_FLOOR = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0
    t_step: float = 0.02
    min_step: float = 1e-5
    max_step: float = 0.1
    holo_tol: float = 1e-9

    def __post_init__(self):
        for name in ("tol", "max_iter", "damping", "t_step", "min_step", "max_step", "holo_tol"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if self.damping > 1:
            raise InputError("damping must not exceed 1")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class HolomorphicDisk:
    boundary: BoundaryFunction
    level: float
    trace_residual: float
    holo_residual: float
    min_modulus: float
    iterations: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def g(self):
        return self.boundary.samples

    def __call__(self, z):
        """Interior evaluation of the holomorphic extension."""
        out = eval_taylor(taylor_coeffs(self.g), z)
        return complex(out) if np.ndim(out) == 0 else out

    @property
    def center(self):
        return complex(np.mean(self.g))

    def derivative_sup(self):
        return float(np.max(np.abs(theta_derivative_samples(self.g))))

    def to_dict(self):
        d = {"level": self.level, "trace_residual": self.trace_residual,
             "holo_residual": self.holo_residual, "min_modulus": self.min_modulus,
             "iterations": self.iterations, "derivative_sup": self.derivative_sup(),
             "center": [self.center.real, self.center.imag],
             "boundary": self.boundary.to_dict()}
        d.update(self.meta)
        return d


def boundary_lambda(n):
    return np.exp(1j * theta_grid(n))


def interior_grid(n=INTERIOR_GRID):
    r = np.arange(n) / n
    th = 2 * np.pi * np.arange(n) / n
    return (r[:, None] * np.exp(1j * th[None, :])).ravel()


def trace_residual_samples(family, t, g):
    g = np.asarray(g)
    lam = boundary_lambda(g.shape[-1])
    return family.level(lam, g) - np.asarray(t)[..., None] if np.ndim(t) else family.level(lam, g) - t


def _sup(x):
    return np.max(np.abs(x), axis=-1)


def newton_direction(family, t, g, anchor=None):
    """Residual R and full Newton correction for a batch of boundaries.

    With ``anchor`` (one complex target per row) the free imaginary constant
    of the correction is used to pull g(1) toward the anchor along the fibre;
    otherwise the correction vanishes tangentially at lambda = 1.
    """
    g = np.asarray(g, dtype=complex)
    n = g.shape[-1]
    lam = boundary_lambda(n)
    tt = np.asarray(t, dtype=float)
    if tt.ndim:
        tt = tt[..., None]
    resid = family.level(lam, g) - tt
    fw = family.gradient_w(lam, g)
    a, b = log_branch_samples(fw)
    hb = hilbert_samples(b, "at_one")
    x = np.exp(hb - 1j * b)
    du = -resid * np.exp(-a - hb) / 2.0
    hdu = hilbert_samples(du, "at_one")
    step = du + 1j * hdu
    if anchor is not None:
        p = (np.asarray(anchor) - g[..., 0]) / x[..., 0]
        step = step + 1j * np.asarray(p.imag)[..., None]
    return resid, step * x


def newton_step(family, t, g, damping=1.0, anchor=None):
    """One damped Newton update; returns (g_next, sup|R| at g)."""
    if isinstance(g, BoundaryFunction):
        resid, d = newton_direction(family, t, g.samples, anchor)
        return BoundaryFunction(g.samples + damping * d), float(_sup(resid))
    resid, d = newton_direction(family, t, g, anchor)
    return g + damping * d, _sup(resid)


def _merit(family, t, g, anchors):
    m = _sup(trace_residual_samples(family, t, g))
    if anchors is not None:
        m = np.maximum(m, np.abs(g[:, 0] - anchors))
    return m


def solve_batch(family, t, g0, config=SolverConfig(), anchors=None):
    """Damped Newton on a batch; returns (g, merits, iterations).

    The merit is sup|R|, or max(sup|R|, |g(1) - anchor|) for pinned solves.
    A trial step is accepted only when the merit decreases; otherwise the
    damping of that row is halved, and reset after the next success.  Rows
    that stall raise NoConvergence whose ``rows`` attribute lists them.
    """
    g = np.array(g0, dtype=complex, ndmin=2)
    batch = g.shape[0]
    tt = np.broadcast_to(np.asarray(t, dtype=float), (batch,)).copy()
    anc = None
    if anchors is not None:
        anc = np.broadcast_to(np.asarray(anchors, dtype=complex), (batch,)).copy()
    merit = _merit(family, tt, g, anc)
    iters = np.zeros(batch, dtype=int)
    for _ in range(config.max_iter):
        active = merit >= config.tol
        if not active.any():
            break
        idx = np.flatnonzero(active)
        sub_anc = None if anc is None else anc[idx]
        _, d = newton_direction(family, tt[idx], g[idx], sub_anc)
        damp = np.full(idx.size, config.damping)
        todo = np.ones(idx.size, dtype=bool)
        accepted = np.zeros(idx.size, dtype=bool)
        while todo.any():
            j = np.flatnonzero(todo)
            cand = g[idx[j]] + damp[j, None] * d[j]
            m = _merit(family, tt[idx[j]], cand, None if anc is None else sub_anc[j])
            better = m < merit[idx[j]]
            ok = j[better]
            g[idx[ok]] = cand[better]
            merit[idx[ok]] = m[better]
            accepted[ok] = True
            todo[ok] = False
            fail = j[~better]
            damp[fail] *= 0.5
            todo[fail[damp[fail] < 1e-6]] = False
        iters[idx] += 1
        stalled = idx[~accepted]
        if stalled.size:
            err = NoConvergence(f"Newton stalled at merit {merit[stalled].max():.3g}")
            err.rows = stalled
            raise err
    active = merit >= config.tol
    if active.any():
        err = NoConvergence(f"no convergence after {config.max_iter} iterations "
                            f"(merit {merit[active].max():.3g})")
        err.rows = np.flatnonzero(active)
        raise err
    return g, merit, iters


def min_interior_modulus(g):
    """min |g| over the boundary and a polar interior grid (per row)."""
    g = np.asarray(g)
    coeffs = taylor_coeffs(g)
    z = interior_grid()
    vals = eval_taylor(coeffs[..., None, :], z) if coeffs.ndim > 1 else eval_taylor(coeffs, z)
    inner = np.min(np.abs(vals), axis=-1)
    return np.minimum(inner, np.min(np.abs(g), axis=-1))


def certify(family, t, g, config=SolverConfig(), iterations=0, meta=None):
    """Build a HolomorphicDisk after checking the residual certificates."""
    g = np.asarray(g, dtype=complex)
    res = float(_sup(trace_residual_samples(family, t, g)))
    holo = float(holomorphy_residual_samples(g))
    mm = float(min_interior_modulus(g))
    if mm < ZERO_FLOOR:
        raise LeafHitZero(f"leaf modulus {mm:.3g} collapsed toward 0")
    if holo > config.holo_tol:
        raise NoConvergence(f"holomorphy residual {holo:.3g} above {config.holo_tol:.3g}")
    return HolomorphicDisk(boundary=BoundaryFunction(g), level=float(t), trace_residual=res,
                           holo_residual=holo, min_modulus=mm, iterations=int(iterations),
                           meta=meta or {})


def _seed_samples(g0):
    return g0.samples if isinstance(g0, BoundaryFunction) else np.asarray(g0, dtype=complex)


def solve_disk(family, t, g0, config=SolverConfig(), anchor=None):
    """Newton-solve for a disk with trace on the level-t torus from seed g0.

    Newton corrections are holomorphic, so the seed is first projected onto
    its nonnegative Fourier modes.
    """
    g0 = _seed_samples(g0)
    if np.any(g0 == 0):
        raise LeafHitZero("seed vanishes on the boundary")
    g0 = np.fft.ifft(np.where(wavenumbers(g0.size) >= 0, np.fft.fft(g0), 0.0))
    if np.any(g0 == 0):
        raise LeafHitZero("seed vanishes on the boundary")
    if int(winding_samples(g0, max_step=None)) != 0:
        raise NonzeroWinding("seed boundary winds around 0; the leaf must be nonvanishing inside")
    g, _, iters = solve_batch(family, t, g0[None], config,
                              None if anchor is None else np.array([anchor]))
    return certify(family, t, g[0], config, iters[0])


def _record(family, t, g, config, iters):
    disks = []
    for row, it in zip(g, iters):
        if int(winding_samples(row, max_step=None)) != 0:
            raise NonzeroWinding("continued leaf acquired nonzero winding about 0")
        disks.append(certify(family, t, row, config, it))
    return disks


def continue_batch(family, g, t0, t1, config=SolverConfig(), on_step=None):
    """March a batch of leaves from level t0 to t1 with shared adaptive steps.

    Returns a list of (t, [HolomorphicDisk, ...]) for every accepted level,
    starting with t0.  ``on_step`` is called with each accepted entry.
    """
    g = np.array(g, dtype=complex, ndmin=2)
    if t1 <= 0 or t0 <= 0:
        raise InputError("levels must be positive")
    first = (t0, _record(family, t0, g, config, np.zeros(len(g), dtype=int)))
    path = [first]
    if on_step:
        on_step(first)
    direction = 1.0 if t1 >= t0 else -1.0
    t = t0
    h = config.t_step
    while direction * (t1 - t) > 1e-14:
        tn = t + direction * min(h, abs(t1 - t))
        if abs(t1 - tn) < 1e-12:
            tn = t1
        try:
            gn, _, iters = solve_batch(family, tn, g, config)
            disks = _record(family, tn, gn, config, iters)
        except HolofoliateError as exc:
            h *= 0.5
            if h < config.min_step:
                err = ContinuationStuck(f"continuation stuck after t = {t:.6g}: {exc}", last_t=t)
                if getattr(exc, "rows", None) is not None:
                    err.leaf_index = int(exc.rows[0])
                raise err from exc
            continue
        g, t = gn, tn
        path.append((t, disks))
        if on_step:
            on_step(path[-1])
        if iters.max() <= 4:
            h = min(h * 1.5, config.max_step)
    return path


def continue_in_t(family, leaf, t1, config=SolverConfig()):
    """Continuation of one leaf from its level to t1; returns the disk path."""
    path = continue_batch(family, leaf.g[None], leaf.level, t1, config)
    return [disks[0] for _, disks in path]


def boundary_equation_residual(family, disk):
    """sup over the boundary of |d/dtheta F(e^{i theta}, g(e^{i theta}))| by the chain rule."""
    g = disk.g
    lam = boundary_lambda(g.size)
    fw, fl = family.gradients(lam, g)
    g_theta = theta_derivative_samples(g)
    val = 2 * np.real(1j * lam * fl) + 2 * np.real(fw * g_theta)
    return float(np.max(np.abs(val)))


def trace_residual_on_grid(family, disk, n):
    """sup|F - t| after trigonometric resampling of the leaf to n points."""
    g = disk.boundary.resample(n).samples
    return float(np.max(np.abs(trace_residual_samples(family, disk.level, g))))


@dataclass
class DerivativeBoundReport:
    sups: list
    max_sup: float
    median_sup: float
    bound_factor: float
    passed: bool
    reason: str = ""

    def to_dict(self):
        return {"sups": list(self.sups), "max": self.max_sup, "median": self.median_sup,
                "bound_factor": self.bound_factor, "passed": self.passed, "reason": self.reason}


def derivative_bound_check(path, bound_factor=10.0, holo_tol=1e-9):
    """No blow-up of sup|g'| along a continuation path.

    Values below a round-off floor relative to sup|g| count as zero, so paths
    of constant leaves pass with a zero bound.
    """
    if not path:
        raise InputError("path is empty")
    floor = DERIVATIVE_FLOOR * max(1.0, max(float(np.max(np.abs(d.g))) for d in path))
    sups = [s if s > floor else 0.0 for s in (d.derivative_sup() for d in path)]
    mx = float(max(sups))
    med = float(np.median(sups))
    bad = [i for i, d in enumerate(path) if d.holo_residual > holo_tol]
    if bad:
        return DerivativeBoundReport(sups, mx, med, bound_factor, False,
                                     f"leaves {bad} fail the holomorphy gate")
    ok = mx <= bound_factor * med if med > 0 else mx == 0.0
    return DerivativeBoundReport(sups, mx, med, bound_factor, bool(ok),
                                 "" if ok else "derivative sup blows up along the path")
