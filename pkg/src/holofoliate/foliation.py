"""Holomorphic transverse foliations of a torus family.

Leaves are seeded as constants sqrt(eps) * exp(i xi_m) on the standard collar
and continued in t as one batch.  They keep the label xi of their seed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .circle_fourier import DEFAULT_GRID, eval_taylor, taylor_coeffs, winding_samples
from .disk_solver import (
    SolverConfig,
    boundary_lambda,
    certify,
    continue_batch,
    derivative_bound_check,
    interior_grid,
    solve_batch,
)
from .errors import (
    FoliationDegenerate,
    HolofoliateError,
    InputError,
    NoConvergence,
    PointNotEnclosed,
    TargetToleranceMissed,
)

ALPHA_MIN = 1e-3


def anchors(m):
    return 2 * np.pi * np.arange(m) / m


def seed_leaves(family, m, n=DEFAULT_GRID, t=None):
    t = family.eps if t is None else t
    return np.sqrt(t) * np.exp(1j * anchors(m))[:, None] * np.ones(n)


@dataclass
class Foliation:
    family: object
    level: float
    leaves: list
    xi: np.ndarray
    seed_record: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)

    @property
    def boundaries(self):
        return np.array([leaf.g for leaf in self.leaves])

    @property
    def centers(self):
        return np.array([leaf.center for leaf in self.leaves])

    def paths(self):
        """Per-leaf continuation paths (lists of disks) from the history."""
        return [[disks[i] for _, disks in self.history] for i in range(len(self.leaves))]

    def to_dict(self, include_boundaries=True):
        d = {"level": self.level, "leaves": len(self.leaves), "xi": self.xi.tolist(),
             "seed_record": self.seed_record}
        if include_boundaries:
            d["leaf_data"] = [leaf.to_dict() for leaf in self.leaves]
        return d

    def to_csv(self):
        """Rows (xi, theta, Re g, Im g) for external plotting."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["xi", "theta", "re_g", "im_g"])
        n = self.leaves[0].g.size
        theta = 2 * np.pi * np.arange(n) / n
        for xi, leaf in zip(self.xi, self.leaves):
            for th, z in zip(theta, leaf.g):
                writer.writerow([repr(float(xi)), repr(float(th)), repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()


def _leaf_values(boundaries, n_interior=16):
    """Leaf values on the boundary grid followed by a polar interior grid."""
    coeffs = taylor_coeffs(boundaries)
    inner = eval_taylor(coeffs[:, None, :], interior_grid(n_interior))
    return np.concatenate([boundaries, inner], axis=1)


def disjointness_check(foliation):
    """min over grid points and leaf pairs of |g_xi - g_eta|."""
    vals = _leaf_values(foliation.boundaries)
    m = vals.shape[0]
    best = np.inf
    for i in range(m - 1):
        d = np.abs(vals[i + 1 :] - vals[i])
        best = min(best, float(d.min()))
    return best


def _angles(family, boundaries):
    lam = boundary_lambda(boundaries.shape[-1])
    from .circle_fourier import theta_derivative_samples

    g_theta = theta_derivative_samples(boundaries)
    eta = family.fiber_tangent(np.broadcast_to(lam, boundaries.shape), boundaries)
    t_norm = np.sqrt(1.0 + np.abs(g_theta) ** 2)
    cos = np.abs(np.real(np.conj(g_theta) * eta)) / (t_norm * np.abs(eta))
    return np.arccos(np.clip(cos, 0.0, 1.0))


def transversality_angle(foliation):
    """Minimum angle in R^4 between the trace tangents and the fibre tangents."""
    return float(_angles(foliation.family, foliation.boundaries).min())


def check_foliation(foliation, alpha_min=ALPHA_MIN):
    margin = disjointness_check(foliation)
    angle = transversality_angle(foliation)
    problems = []
    if not margin > 0:
        problems.append(f"leaves intersect (disjointness margin {margin:.3g})")
    if not angle > alpha_min:
        problems.append(f"leaf tangent to a fibre (min angle {angle:.3g} <= {alpha_min:.3g})")
    if problems:
        raise FoliationDegenerate("; ".join(problems))
    return margin, angle


def build_foliation(family, t_target, m=32, config=SolverConfig(), n=DEFAULT_GRID,
                    alpha_min=ALPHA_MIN, check=True):
    if m < 8:
        raise InputError("at least 8 leaves are required")
    if t_target <= 0:
        raise InputError("target level must be positive")
    xi = anchors(m)
    if t_target <= family.eps:
        g, _, it = solve_batch(family, t_target, seed_leaves(family, m, n, t_target), config)
        history = [(t_target, [certify(family, t_target, row, config, k) for row, k in zip(g, it)])]
    else:
        history = continue_batch(family, seed_leaves(family, m, n), family.eps, t_target, config)
    levels = [t for t, _ in history]
    fol = Foliation(family=family, level=float(t_target), leaves=history[-1][1], xi=xi,
                    seed_record={"seed_level": min(family.eps, t_target), "steps": len(levels) - 1,
                                 "levels": levels},
                    history=history)
    if check:
        margin, angle = check_foliation(fol, alpha_min)
        fol.seed_record.update(disjointness_margin=margin, min_angle=angle)
    return fol


def derivative_bounds(foliation, bound_factor=10.0):
    return [derivative_bound_check(p, bound_factor) for p in foliation.paths()]


# ---------------------------------------------------------------------------
# structural checks


def fiber_cover_check(foliation):
    """Level residual of all leaf points and monotonicity of their arguments in xi."""
    b = foliation.boundaries
    lam = boundary_lambda(b.shape[1])
    resid = float(np.max(np.abs(foliation.family.level(lam, b) - foliation.level)))
    steps = np.angle(np.roll(b, -1, axis=0) / b)
    monotone = bool(np.all(steps > 0))
    return resid, monotone


def nesting_check(inner, outer):
    """Every centre of the inner foliation lies inside the outer centre curve."""
    oc = outer.centers
    for p in inner.centers:
        if int(winding_samples(oc - p, max_step=None)) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# leaf through a point


def _center_winding(centers, w0):
    try:
        return int(winding_samples(centers - w0, max_step=None))
    except HolofoliateError:
        return 1


def _pinned(family, t, g_seed, anchor, config):
    g, _, _ = solve_batch(family, t, g_seed[None], config, anchors=np.array([anchor]))
    return g[0]


def label_of(family, leaf_g, t, config=SolverConfig()):
    """Seed anchor xi of a leaf: continue it down to the collar and read arg.

    The label is path dependent: the downward continuation drifts along the
    circle of solutions at each level, so expect agreement to about 1e-2 only.
    """
    if t <= family.eps:
        return float(np.angle(np.mean(leaf_g)) % (2 * np.pi))
    path = continue_batch(family, leaf_g[None], t, family.eps, config)
    return float(np.angle(np.mean(path[-1][1][0].g)) % (2 * np.pi))


def leaf_through_point(family, w0, config=SolverConfig(), m=32, n=DEFAULT_GRID, tol=1e-8,
                       t_max=None, history=None, max_newton=30):
    """Level t*, label xi* and leaf whose centre g(0) equals w0.

    ``history`` may carry a previously computed continuation of the m seeded
    leaves (as returned by :func:`continue_batch`) to avoid recomputation.
    """
    w0 = complex(w0)
    if w0 == 0:
        raise PointNotEnclosed("w0 = 0 lies on the zero section; every leaf avoids it")
    t_max = family.t_max if t_max is None else t_max
    if abs(w0) ** 2 <= family.eps:
        t = abs(w0) ** 2
        leaf = certify(family, t, np.full(n, w0), config)
        return t, float(np.angle(w0) % (2 * np.pi)), leaf
    if history is None:
        history = continue_batch(family, seed_leaves(family, m, n), family.eps, t_max, config)
    winds = [_center_winding(np.array([d.center for d in disks]), w0) for _, disks in history]
    hit = next((k for k, wnd in enumerate(winds) if wnd == 1), None)
    if hit is None:
        raise PointNotEnclosed(f"w0 = {w0} is not enclosed by the leaf centres up to t = {history[-1][0]:.4g}")
    lo_t, lo_g = history[hit - 1][0], np.array([d.g for d in history[hit - 1][1]])
    hi_t, hi_g = history[hit][0], np.array([d.g for d in history[hit][1]])
    for _ in range(6):
        mid = 0.5 * (lo_t + hi_t)
        try:
            g_mid, _, _ = solve_batch(family, mid, lo_g, config)
        except NoConvergence:
            path = continue_batch(family, lo_g, lo_t, mid, config)
            g_mid = np.array([d.g for d in path[-1][1]])
        if _center_winding(np.mean(g_mid, axis=1), w0) == 1:
            hi_t, hi_g = mid, g_mid
        else:
            lo_t, lo_g = mid, g_mid
    centers = np.mean(hi_g, axis=1)
    k = int(np.argmin(np.abs(centers - w0)))
    t, g = hi_t, hi_g[k]
    psi = float(np.angle(g[0]))
    g = _pinned(family, t, g, family.ray_point(1.0, psi, t), config)
    center = np.mean(g)
    fd = 1e-6
    for _ in range(max_newton):
        err = center - w0
        if abs(err) < 0.05 * tol:
            break
        g_t = _pinned(family, t + fd, g, family.ray_point(1.0, psi, t + fd), config)
        g_p = _pinned(family, t, g, family.ray_point(1.0, psi + fd, t), config)
        jac = np.array([[((np.mean(g_t) - center) / fd).real, ((np.mean(g_p) - center) / fd).real],
                        [((np.mean(g_t) - center) / fd).imag, ((np.mean(g_p) - center) / fd).imag]])
        dt, dpsi = np.linalg.solve(jac, [-err.real, -err.imag])
        scale = 1.0
        while True:
            t_new, psi_new = t + scale * dt, psi + scale * dpsi
            try:
                if t_new <= 0:
                    raise NoConvergence("level left the admissible range")
                g_new = _pinned(family, t_new, g, family.ray_point(1.0, psi_new, t_new), config)
                c_new = np.mean(g_new)
                if abs(c_new - w0) < abs(err):
                    break
            except HolofoliateError:
                pass
            scale *= 0.5
            if scale < 1e-4:
                raise TargetToleranceMissed(f"leaf search stalled at |g(0) - w0| = {abs(err):.3g}")
        t, psi, g, center = t_new, psi_new, g_new, c_new
    miss = abs(np.mean(g) - w0)
    leaf = certify(family, t, g, config, meta={"point_error": float(miss)})
    if miss >= tol:
        raise TargetToleranceMissed(f"|leaf(0) - w0| = {miss:.3g} exceeds {tol:.3g}")
    xi = label_of(family, g, t, config)
    return float(t), xi, leaf


def uniqueness_probe(family, t, leaf, scale=1e-2, config=SolverConfig(), anchor=None, seed=0):
    """Re-solve from a perturbed seed pinned at leaf's g(1); return sup|g - h|."""
    rng = np.random.default_rng(seed)
    g = leaf.g
    n = g.size
    lam = boundary_lambda(n)
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    pert = (lam - 1.0) * (c[0] + c[1] * lam + c[2] * lam**2)
    pert *= scale * np.max(np.abs(g)) / np.max(np.abs(pert))
    target = g[0] if anchor is None else anchor
    h = _pinned(family, t, g + pert, target, config)
    return float(np.max(np.abs(g - h)))
