"""Extension of a finite holomorphic motion by filling flowed tori.

Pipeline: shift the motion so a_1 stays at 0, interpolate the radial
velocities of the moving points by a smooth field on C, flow the circles
|w|^2 = t along the field out to |lambda| = r0, fill the resulting tori with
holomorphic disks and read off the leaf through the new point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .circle_fourier import DEFAULT_GRID, eval_taylor, holomorphy_residual_samples, taylor_coeffs, theta_grid
from .disk_solver import SolverConfig, continue_batch
from .errors import (
    CoincidenceCheckFailed,
    InputError,
    IntegrationFailure,
    ModuliCollision,
    PointsCollide,
    StarShapeViolation,
    ZeroSection,
)
from .foliation import leaf_through_point, seed_leaves
from .torus_model import GraphicalTorusFamily, smooth_step

COLLIDE_TOL = 1e-9
MODULI_TOL = 1e-6


def _cplx(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise InputError(f"complex numbers are [re, im] pairs, got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        re, im = x.split(",")
        return complex(float(re), float(im))
    return complex(x)


@dataclass(frozen=True)
class HolomorphicMotionSpec:
    """Points a_i with trajectories f(lam, a_i) = a_i + sum_k c_{i,k} lam^k.

    ``trajectories[i]`` lists c_{i,1}, c_{i,2}, ... (the constant term is a_i).
    """

    points: tuple
    trajectories: tuple
    r0: float = 0.9
    check_grid: tuple = (16, 64)

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        trs = tuple(tuple(complex(c) for c in tr) for tr in self.trajectories)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "trajectories", trs)
        if not pts:
            raise InputError("a motion needs at least one point")
        if len(trs) != len(pts):
            raise InputError(f"{len(pts)} points but {len(trs)} trajectories")
        if not 0 < self.r0 < 1:
            raise InputError(f"r0 must lie in (0, 1), got {self.r0}")
        gap = self.min_separation()
        if gap < COLLIDE_TOL:
            raise PointsCollide(f"trajectories meet (min separation {gap:.3g} on |lambda| <= r0)")

    @property
    def n(self):
        return len(self.points)

    def coefficient_matrix(self):
        """Rows (a_i, c_{i,1}, ...) padded with zeros."""
        k = max([len(t) for t in self.trajectories] + [0]) + 1
        out = np.zeros((self.n, k), dtype=complex)
        for i, (a, tr) in enumerate(zip(self.points, self.trajectories)):
            out[i, 0] = a
            out[i, 1 : 1 + len(tr)] = tr
        return out

    def positions(self, lam):
        """f(lam, a_i), shape (n,) + shape(lam)."""
        c = self.coefficient_matrix()
        lam = np.asarray(lam, dtype=complex)
        return eval_taylor(c.reshape((self.n,) + (1,) * lam.ndim + (-1,)), lam)

    def velocities(self, lam):
        """d/dlam f(lam, a_i)."""
        c = self.coefficient_matrix()
        k = np.arange(c.shape[1])
        d = (c * k)[:, 1:]
        if d.shape[1] == 0:
            d = np.zeros((self.n, 1), dtype=complex)
        lam = np.asarray(lam, dtype=complex)
        return eval_taylor(d.reshape((self.n,) + (1,) * lam.ndim + (-1,)), lam)

    def check_lambdas(self, r_max=None):
        r_max = self.r0 if r_max is None else r_max
        nr, nt = self.check_grid
        r = np.linspace(0.0, r_max, nr)
        th = theta_grid(nt)
        return (r[:, None] * np.exp(1j * th[None, :])).ravel()

    def min_separation(self):
        """Sampled minimum gap on |lam| <= r0; 0 if two trajectories meet exactly there."""
        if self.n < 2:
            return np.inf
        c = self.coefficient_matrix()
        for i, j in zip(*np.triu_indices(self.n, 1)):
            diff = np.trim_zeros(c[i] - c[j], "b")
            if diff.size > 1 and np.any(np.abs(np.roots(diff[::-1])) <= self.r0):
                return 0.0
        p = self.positions(self.check_lambdas())
        d = np.abs(p[:, None, :] - p[None, :, :])
        iu = np.triu_indices(self.n, 1)
        return float(d[iu].min())

    def with_point(self, a, trajectory):
        return HolomorphicMotionSpec(self.points + (complex(a),),
                                     self.trajectories + (tuple(trajectory),), self.r0,
                                     self.check_grid)

    # serialization -----------------------------------------------------------

    @classmethod
    def from_dict(cls, data):
        try:
            pts = [_cplx(p) for p in data["points"]]
            trs = [[_cplx(c) for c in tr] for tr in data["trajectories"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed motion spec: {exc}") from exc
        return cls(tuple(pts), tuple(map(tuple, trs)), float(data.get("r0", 0.9)))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"points": [[p.real, p.imag] for p in self.points],
                "trajectories": [[[c.real, c.imag] for c in tr] for tr in self.trajectories],
                "r0": self.r0}


@dataclass(frozen=True)
class Denormalizer:
    """w -> w + f(lam, a_1): maps normalized values back to the original motion."""

    shift_coeffs: np.ndarray

    def __call__(self, lam, w):
        return np.asarray(w) + eval_taylor(self.shift_coeffs, np.asarray(lam, dtype=complex))

    def inverse(self, lam, w):
        return np.asarray(w) - eval_taylor(self.shift_coeffs, np.asarray(lam, dtype=complex))


def normalize_motion(spec):
    """Subtract the trajectory of a_1 from every trajectory."""
    c = spec.coefficient_matrix()
    base = c[0].copy()
    shifted = c - base
    norm = HolomorphicMotionSpec(tuple(shifted[:, 0]), tuple(tuple(row[1:]) for row in shifted),
                                 spec.r0, spec.check_grid)
    return norm, Denormalizer(base)


# ---------------------------------------------------------------------------
# velocity field


@dataclass
class SmoothMotionField:
    """Interpolating velocity field for a normalized motion along the ray arg lam = theta.

    v(r, w) = T(|w|) * (beta(r) w + sum_i c_i(r) / (1 + |w - p_i(r)|^2 / sigma(r)^2))

    over the nonzero sites p_i.  beta is the least-squares complex-linear fit
    of the data, so motions that are linear in w are reproduced without any
    kernel part.  T vanishes on |w| < delta (so the flow is the identity
    there), is 1 on [2 delta, R], and decays to 0 beyond 2 R.
    """

    spec: HolomorphicMotionSpec
    theta: float = 0.0
    linear: bool = True
    taper: bool = True
    delta: float = field(default=None)
    outer: float = field(default=None)

    def __post_init__(self):
        if abs(self.spec.points[0]) != 0 or np.any(self.spec.coefficient_matrix()[0] != 0):
            raise InputError("the velocity field expects a normalized motion (a_1 fixed at 0)")
        pos = self.spec.positions(self.spec.check_lambdas())
        moving = np.abs(pos[1:]) if self.spec.n > 1 else np.ones((1, 1))
        if self.delta is None:
            self.delta = 0.1 * float(moving.min())
        if self.outer is None:
            self.outer = 4.0 * float(moving.max())
        self.r_max = self.spec.r0
        self._sites = np.arange(1, self.spec.n)

    def site_data(self, r):
        """Positions, velocities, kernel width, linear part and kernel weights at radii r."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        e = np.exp(1j * self.theta)
        lam = r * e
        p_all = self.spec.positions(lam)
        v_all = self.spec.velocities(lam) * e
        if self.spec.n < 2:
            zero = np.zeros((0, r.size), dtype=complex)
            return zero, zero, np.ones(r.size), np.zeros(r.size, dtype=complex), zero
        d = np.abs(p_all[:, None] - p_all[None, :])
        d[np.arange(self.spec.n), np.arange(self.spec.n)] = np.inf
        gap = d.min(axis=(0, 1))
        if np.any(gap < COLLIDE_TOL):
            raise PointsCollide(f"moving points collide (separation {gap.min():.3g})")
        sigma = 0.5 * gap
        p, v = p_all[self._sites], v_all[self._sites]
        if self.linear:
            beta = np.sum(np.conj(p) * v, axis=0) / np.sum(np.abs(p) ** 2, axis=0)
        else:
            beta = np.zeros(r.size, dtype=complex)
        rhs = (v - beta * p).T[..., None]
        kern = 1.0 / (1.0 + (np.abs(p.T[:, :, None] - p.T[:, None, :]) / sigma[:, None, None]) ** 2)
        weights = np.linalg.solve(kern, rhs)[..., 0].T
        return p, v, sigma, beta, weights

    def taper_value(self, w):
        if not self.taper:
            return np.ones(np.shape(w))
        m = np.abs(w)
        inner = smooth_step((m - self.delta) / self.delta)
        if np.all(m <= self.outer):
            return inner
        return inner * (1.0 - smooth_step((m - self.outer) / self.outer))

    def evaluate(self, r, w, data=None):
        """v(r, w); ``data`` may carry a precomputed site_data(r) entry."""
        w = np.asarray(w, dtype=complex)
        if data is None:
            p, _, sigma, beta, wts = (x[..., 0] for x in self.site_data(r))
        else:
            p, sigma, beta, wts = data
        out = beta * w
        for i in range(p.shape[0]):
            dz = w - p[i]
            out = out + wts[i] / (1.0 + (dz.real**2 + dz.imag**2) / sigma**2)
        return self.taper_value(w) * out

    def __call__(self, w, r=None):
        return self.evaluate(self.r_max if r is None else r, w)

    def lipschitz_estimate(self, n_r=8, n_w=48):
        """Max finite-difference slope of v over a polar sample of the working disk."""
        rad = np.linspace(0.0, 1.5 * self.outer, n_w)
        th = theta_grid(n_w)
        w = (rad[:, None] * np.exp(1j * th[None, :])).ravel()
        h = 1e-6 * max(1.0, self.outer)
        best = 0.0
        for r in np.linspace(0.0, self.r_max, n_r):
            v0 = self.evaluate(r, w)
            for d in (h, 1j * h):
                best = max(best, float(np.max(np.abs(self.evaluate(r, w + d) - v0)) / h))
        return best


def build_velocity_field(spec, r, theta, **kw):
    """Velocity evaluator w -> v_theta(r, w) for a normalized spec."""
    if r > spec.r0 + 1e-15:
        raise InputError(f"r = {r} exceeds r0 = {spec.r0}")
    fld = SmoothMotionField(spec, theta, **kw)
    return lambda w: fld.evaluate(r, w)


@dataclass
class MotionTrajectory:
    r: np.ndarray
    w: np.ndarray
    theta: float

    def __call__(self, r):
        return np.interp(r, self.r, self.w.real) + 1j * np.interp(r, self.r, self.w.imag)

    @property
    def end(self):
        return complex(self.w[-1])


def integrate_motion(spec, w0, theta, rtol=1e-12, atol=1e-13, n_out=65, field_kw=None):
    """Adaptive integration of dw/dr = v_theta(r, w) from w(0) = w0 to r = r0."""
    fld = SmoothMotionField(spec, theta, **(field_kw or {}))
    w0 = complex(w0)
    r_out = np.linspace(0.0, spec.r0, n_out)
    if w0 == 0:
        return MotionTrajectory(r_out, np.zeros(n_out, dtype=complex), theta)

    def rhs(r, y):
        v = fld.evaluate(r, complex(y[0], y[1]))
        return [v.real, v.imag]

    sol = solve_ivp(rhs, (0.0, spec.r0), [w0.real, w0.imag], method="DOP853",
                    t_eval=r_out, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationFailure(f"flow integration failed at theta = {theta:.4g}: {sol.message}")
    return MotionTrajectory(r_out, sol.y[0] + 1j * sol.y[1], theta)


# ---------------------------------------------------------------------------
# flowed torus family


class FlowTorusFamily(GraphicalTorusFamily):
    """Tori C^t_mu = Phi_theta(circle |w|^2 = t), mu = exp(i theta) on the unit circle.

    Phi_theta is the time-r0 flow of the velocity field along the ray
    lam = r exp(i theta), so the base circle |lam| = r0 is rescaled to the unit
    circle.  F(mu, w) = |Phi_theta^{-1}(w)|^2, computed by fixed-step RK4
    backwards in r; the flow is the identity on |w| < delta, hence the collar.
    """

    def __init__(self, spec, steps=32, t_max=None, field_kw=None):
        self.spec = spec
        self.steps = int(steps)
        self.field_kw = dict(field_kw or {})
        proto = SmoothMotionField(spec, 0.0, **self.field_kw)
        self.delta = proto.delta
        self.outer = proto.outer
        self._field = proto
        self.eps = 0.9 * self.delta**2
        if t_max is None:
            mods = np.abs(np.asarray(spec.points[1:]))
            t_max = 1.44 * float(mods.max()) ** 2 if mods.size else 1.0
        self.t_max = float(t_max)
        self._cache = {}

    # stage data for every RK4 half-step, computed per distinct theta
    def _stages(self, theta_u):
        key = theta_u.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        r = np.linspace(0.0, self.spec.r0, 2 * self.steps + 1)
        ps, ss, bs, ws = [], [], [], []
        for th in theta_u:
            fld = SmoothMotionField(self.spec, float(th), delta=self.delta, outer=self.outer,
                                    **self.field_kw)
            p, _, s, b, w = fld.site_data(r)
            ps.append(p), ss.append(s), bs.append(b), ws.append(w)
        # shapes: p, w -> (stage, site, theta); s, b -> (stage, theta)
        data = (np.moveaxis(np.array(ps), 0, -1), np.array(ss).T, np.array(bs).T,
                np.moveaxis(np.array(ws), 0, -1), self._field)
        if len(self._cache) > 64:
            self._cache.clear()
        self._cache[key] = data
        return data

    def _flow(self, lam, w, backward):
        lam = np.asarray(lam, dtype=complex)
        w = np.asarray(w, dtype=complex)
        lam, w = np.broadcast_arrays(lam, w)
        theta = np.angle(lam)
        theta_u, inv = np.unique(np.round(theta.ravel(), 15), return_inverse=True)
        P, S, B, W, fld = self._stages(theta_u)
        if not (np.any(B) or np.any(W)):
            return w.copy()
        P = np.moveaxis(P, 0, 1)  # (stage, site, theta)
        W = np.moveaxis(W, 0, 1)
        z = w.ravel().copy()
        n_site = P.shape[1]
        h = self.spec.r0 / self.steps

        def vel(s):
            out = B[s][inv] * z_stage[0]
            zz = z_stage[0]
            for i in range(n_site):
                dz = zz - P[s, i][inv]
                out = out + W[s, i][inv] / (1.0 + (dz.real**2 + dz.imag**2) / S[s][inv] ** 2)
            return fld.taper_value(zz) * out

        z_stage = [z]
        order = range(self.steps, 0, -1) if backward else range(self.steps)
        sign = -1.0 if backward else 1.0
        for k in order:
            s0, sm, s1 = 2 * k, 2 * k + (-1 if backward else 1), 2 * k + (-2 if backward else 2)
            z_stage[0] = z
            k1 = vel(s0)
            z_stage[0] = z + 0.5 * sign * h * k1
            k2 = vel(sm)
            z_stage[0] = z + 0.5 * sign * h * k2
            k3 = vel(sm)
            z_stage[0] = z + sign * h * k3
            k4 = vel(s1)
            z = z + sign * h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return z.reshape(w.shape)

    def pullback(self, lam, w):
        return self._flow(lam, w, backward=True)

    def pushforward(self, lam, w):
        return self._flow(lam, w, backward=False)

    def level(self, lam, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w == 0):
            raise ZeroSection("F is only defined away from w = 0")
        return np.abs(self.pullback(lam, w)) ** 2

    def curve_point(self, lam, psi, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            from .errors import OutOfRange

            raise OutOfRange("level t must be positive")
        return self.pushforward(lam, np.sqrt(t) * np.exp(1j * np.asarray(psi, dtype=float)))

    def star_shape_check(self, n_lambda=16, n_psi=128, n_t=12):
        """Raise StarShapeViolation unless every sampled curve is a radial graph."""
        mu = np.exp(1j * theta_grid(n_lambda))
        ts = np.linspace(self.eps, self.t_max, n_t)
        psi = theta_grid(n_psi)
        for m in mu:
            for t in ts:
                c = self.curve_point(m, psi, t)
                steps = np.angle(np.roll(c, -1) / c)
                if np.any(steps <= 0):
                    raise StarShapeViolation(
                        f"flowed curve is not a radial graph at lambda = {m:.4g}, t = {t:.4g}")
        return True

    def to_dict(self):
        return {"kind": "flow", "motion": self.spec.to_dict(), "steps": self.steps,
                "eps": self.eps, "t_max": self.t_max, "delta": self.delta}


def build_motion_tori(spec, steps=32, t_max=None, check=True, field_kw=None):
    """Flowed torus family for a normalized motion, base circle |lam| = r0 rescaled to 1."""
    mods = np.abs(np.asarray(spec.points[1:]))
    if mods.size > 1:
        srt = np.sort(mods)
        if np.any(np.diff(srt) < MODULI_TOL):
            raise ModuliCollision("two points lie on the same initial circle |w| = const")
    fam = FlowTorusFamily(spec, steps=steps, t_max=t_max, field_kw=field_kw)
    if check:
        fam.star_shape_check()
    return fam


# ---------------------------------------------------------------------------


@dataclass
class MotionExtension:
    a_new: complex
    r0: float
    lam: np.ndarray
    trajectory: np.ndarray
    coeffs: np.ndarray
    level: float
    label: float
    certificates: dict

    def __call__(self, lam):
        """Extended trajectory at |lam| <= r0."""
        lam = np.asarray(lam, dtype=complex)
        if np.any(np.abs(lam) > self.r0 * (1 + 1e-12)):
            raise InputError(f"interior evaluation needs |lambda| <= r0 = {self.r0}")
        out = eval_taylor(self.coeffs, lam / self.r0)
        return complex(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"a_new": [self.a_new.real, self.a_new.imag], "r0": self.r0, "level": self.level,
                "label": self.label, "certificates": self.certificates,
                "trajectory": [[float(z.real), float(z.imag)] for z in self.trajectory]}

    def to_csv(self):
        lines = ["theta,re_lambda,im_lambda,re_f,im_f"]
        for th, l, z in zip(theta_grid(self.lam.size), self.lam, self.trajectory):
            lines.append(",".join(repr(float(x)) for x in (th, l.real, l.imag, z.real, z.imag)))
        return "\n".join(lines) + "\n"


def extend_motion(spec, a_new, n=DEFAULT_GRID, m=16, config=None, steps=32, coincidence_tol=1e-6,
                  base_tol=1e-7, family=None):
    """Trajectory lam -> f~(lam, a_new) on |lam| = r0 with coincidence certificates."""
    a_new = complex(a_new)
    if np.min(np.abs(np.asarray(spec.points) - a_new)) < COLLIDE_TOL:
        raise PointsCollide(f"a_new = {a_new} coincides with a given point")
    config = config or SolverConfig(max_step=0.25)
    norm, denorm = normalize_motion(spec)
    w0 = a_new - spec.points[0]
    targets = [complex(p) for p in norm.points[1:]]
    mods = [abs(p) for p in targets + [w0]]
    if family is None:
        family = build_motion_tori(norm, steps=steps, t_max=1.44 * max(mods) ** 2)
    history = continue_batch(family, seed_leaves(family, m, n), family.eps, family.t_max, config)
    mu = np.exp(1j * theta_grid(n))
    lam = spec.r0 * mu

    errors = {}
    for i, p in enumerate(targets, start=1):
        _, _, leaf_i = leaf_through_point(family, p, config, m=m, n=n, history=history)
        expected = norm.positions(lam)[i]
        errors[f"a{i + 1}"] = float(np.max(np.abs(leaf_i.g - expected)))
    t_new, xi, leaf = leaf_through_point(family, w0, config, m=m, n=n, history=history)
    traj = denorm(lam, leaf.g)
    shift = taylor_coeffs(denorm(lam, np.zeros(n)))
    coeffs = taylor_coeffs(leaf.g) + shift
    base = abs(eval_taylor(coeffs, 0.0) - a_new)
    origin = spec.positions(lam)
    sep = float(np.min(np.abs(origin - traj)))
    certs = {"coincidence": errors, "base_point_error": float(base),
             "holomorphy_residual": float(holomorphy_residual_samples(traj)),
             "min_separation": sep, "trace_residual": leaf.trace_residual,
             "leaves": m, "grid": n, "flow_steps": family.steps, "eps": family.eps,
             "t_max": family.t_max}
    bad = {k: v for k, v in errors.items() if not v < coincidence_tol}
    if bad:
        raise CoincidenceCheckFailed(f"leaves through the given points miss their trajectories: {bad}",
                                     errors=errors)
    if not base < base_tol:
        raise CoincidenceCheckFailed(f"base point error {base:.3g} exceeds {base_tol:.3g}",
                                     errors={"base": float(base)})
    if not sep > 0:
        raise CoincidenceCheckFailed("extended trajectory meets a given trajectory",
                                     errors={"separation": sep})
    return MotionExtension(a_new=a_new, r0=spec.r0, lam=lam, trajectory=traj, coeffs=coeffs,
                           level=float(t_new), label=float(xi), certificates=certs)


def r0_sweep(spec, a_new, radii=(0.8, 0.9, 0.95), **kw):
    """Extended trajectory at several base radii, each evaluated on |lam| = min(radii)."""
    rmin = min(radii)
    lam = rmin * np.exp(1j * theta_grid(kw.get("n", DEFAULT_GRID)))
    out = {}
    for r0 in radii:
        sp = HolomorphicMotionSpec(spec.points, spec.trajectories, r0, spec.check_grid)
        ext = extend_motion(sp, a_new, **kw)
        out[r0] = ext(lam)
    return lam, out
