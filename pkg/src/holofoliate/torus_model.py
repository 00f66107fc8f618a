"""Smooth families of graphical tori over the unit circle.

A family assigns to every boundary point lambda and level t > 0 a closed
curve C^t_lambda around 0; the curves are nested in t and coincide with the
circles |w|^2 = t for t <= eps.  The defining function F(lambda, w) returns the
level of the curve through w.

:class:`TorusFamily` stores star-shaped curves as a radial profile

    r(lambda, psi, t) = sqrt(t) * (1 + s(t) * (r1(lambda, psi) - 1)),

with s a C-infinity ramp that is 0 below eps and 1 above t = 1.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .circle_fourier import winding_samples
from .errors import DegenerateGradient, InputError, InvalidFamily, OutOfRange, ZeroSection

DEFAULT_EPS = 0.05
DEFAULT_T_MAX = 1.0
GRADIENT_FLOOR = 1e-8


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity ramp: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        a = np.exp(-1.0 / x)
        b = np.exp(-1.0 / (1.0 - x))
    return a / (a + b)


def smooth_step_derivative(x):
    x = np.asarray(x, dtype=float)
    a, b = _bump(x), _bump(1.0 - x)
    da = np.zeros_like(x)
    db = np.zeros_like(x)
    pos = (x > 0) & (x < 1)
    da[pos] = a[pos] / x[pos] ** 2
    db[pos] = -b[pos] / (1.0 - x[pos]) ** 2
    return (da * b - a * db) / (a + b) ** 2


class GraphicalTorusFamily:
    """Interface shared by all torus families.

    Subclasses implement :meth:`level` and :meth:`curve_point`; the Wirtinger
    gradients are obtained from :meth:`level` by central differences.
    """

    eps: float = DEFAULT_EPS
    t_max: float = DEFAULT_T_MAX
    lambda_independent: bool = False

    def level(self, lam, w):
        raise NotImplementedError

    def curve_point(self, lam, psi, t):
        raise NotImplementedError

    def level_ext(self, lam, w):
        """Extension of F to the closed disk in lambda.

        Default: F(lambda/|lambda|, w) blended to |w|^2 near lambda = 0 by a
        smooth cutoff in |lambda|.  F already equals |w|^2 in the collar, so
        the collar condition holds for every lambda.
        """
        lam = np.asarray(lam, dtype=complex)
        w = np.asarray(w, dtype=complex)
        if self.lambda_independent:
            return self.level(np.ones_like(lam), w)
        mod = np.abs(lam)
        chi = smooth_step((mod - 0.1) / 0.4)
        unit = np.where(mod > 0, lam / np.where(mod > 0, mod, 1.0), 1.0)
        return chi * self.level(unit, w) + (1.0 - chi) * np.abs(w) ** 2

    def gradient_step(self, w):
        return 1e-5 * np.maximum(1.0, np.abs(w))

    def gradients(self, lam, w, step=None, check=True):
        """Wirtinger derivatives (F_w, F_lambda) by central differences."""
        lam = np.asarray(lam, dtype=complex)
        w = np.asarray(w, dtype=complex)
        lam, w = np.broadcast_arrays(lam, w)
        if np.any(w == 0):
            raise ZeroSection("gradients of F are undefined at w = 0")
        h = self.gradient_step(w) if step is None else step * np.maximum(1.0, np.abs(w))
        hl = 1e-5 if step is None else step
        lam_stack = np.stack([lam, lam, lam, lam, lam + hl, lam - hl, lam + 1j * hl, lam - 1j * hl])
        w_stack = np.stack([w + h, w - h, w + 1j * h, w - 1j * h, w, w, w, w])
        f = self.level(lam_stack, w_stack)
        fw = 0.5 * ((f[0] - f[1]) / (2 * h) - 1j * (f[2] - f[3]) / (2 * h))
        fl = 0.5 * ((f[4] - f[5]) / (2 * hl) - 1j * (f[6] - f[7]) / (2 * hl))
        if check and np.any(np.abs(fw) < GRADIENT_FLOOR):
            raise DegenerateGradient(f"|F_w| = {np.min(np.abs(fw)):.3g} below {GRADIENT_FLOOR}")
        return fw, fl

    def gradient_w(self, lam, w, check=True):
        """F_w only (four level evaluations instead of eight)."""
        lam = np.asarray(lam, dtype=complex)
        w = np.asarray(w, dtype=complex)
        lam, w = np.broadcast_arrays(lam, w)
        if np.any(w == 0):
            raise ZeroSection("gradients of F are undefined at w = 0")
        h = self.gradient_step(w)
        f = self.level(np.stack([lam] * 4), np.stack([w + h, w - h, w + 1j * h, w - 1j * h]))
        fw = 0.5 * ((f[0] - f[1]) / (2 * h) - 1j * (f[2] - f[3]) / (2 * h))
        if check and np.any(np.abs(fw) < GRADIENT_FLOOR):
            raise DegenerateGradient(f"|F_w| = {np.min(np.abs(fw)):.3g} below {GRADIENT_FLOOR}")
        return fw

    def fiber_tangent(self, lam, w):
        """Tangent of C^t_lambda at w: i times the gradient (2 conj F_w)."""
        return 2j * np.conj(self.gradient_w(lam, w))

    def ray_point(self, lam, psi, t):
        """Point of C^t_lambda on the ray at angle psi (fibres are star-shaped)."""
        lam = np.asarray(lam, dtype=complex)
        psi, t = np.broadcast_arrays(np.asarray(psi, dtype=float), np.asarray(t, dtype=float))
        lam = np.broadcast_to(lam, psi.shape)
        if np.any(t <= 0):
            raise OutOfRange("level t must be positive")
        e = np.exp(1j * psi)
        lo = np.zeros(psi.shape)
        hi = np.sqrt(t)
        while True:
            over = self.level(lam, hi * e) < t
            if not over.any():
                break
            hi = np.where(over, 2 * hi, hi)
        rho = 0.5 * (lo + hi)
        for _ in range(200):
            f = self.level(lam, rho * e) - t
            lo = np.where(f < 0, rho, lo)
            hi = np.where(f >= 0, rho, hi)
            rho = 0.5 * (lo + hi)
            if np.max(hi - lo) < 1e-15 * np.max(hi):
                break
        return rho * e


# ---------------------------------------------------------------------------


def _parse_mode_key(key):
    if isinstance(key, tuple):
        return int(key[0]), int(key[1])
    nums = re.findall(r"-?\d+", str(key))
    if len(nums) != 2:
        raise InputError(f"profile key {key!r} is not a pair of integers")
    return int(nums[0]), int(nums[1])


@dataclass(frozen=True)
class TorusFamilySpec:
    """Radial profile r1 of the t = 1 torus plus collar/validation settings.

    ``profile`` maps (k_lambda, k_psi) to a complex amplitude c; the profile is
    r1(lambda, psi) = sum Re(c * exp(i (k_lambda arg(lambda) + k_psi psi))).
    """

    profile: dict
    eps: float = DEFAULT_EPS
    t_max: float = DEFAULT_T_MAX
    grid: dict = field(default_factory=lambda: {"n_lambda": 32, "n_psi": 64, "n_t": 48})

    def __post_init__(self):
        prof = {_parse_mode_key(k): complex(*v) if isinstance(v, (list, tuple)) else complex(v)
                for k, v in self.profile.items()}
        object.__setattr__(self, "profile", prof)
        if not 0 < self.eps < 1:
            raise InputError(f"eps must lie in (0, 1), got {self.eps}")
        if self.t_max <= self.eps:
            raise InputError("t_max must exceed eps")

    @classmethod
    def standard(cls, **kw):
        return cls(profile={(0, 0): 1.0}, **kw)

    @classmethod
    def from_dict(cls, data):
        try:
            profile = data["profile"]
        except KeyError:
            raise InputError("torus spec needs a 'profile' entry") from None
        grid = dict(cls.__dataclass_fields__["grid"].default_factory())
        grid.update(data.get("grid", {}))
        return cls(profile=profile, eps=float(data.get("eps", DEFAULT_EPS)),
                   t_max=float(data.get("t_max", DEFAULT_T_MAX)), grid=grid)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"profile": {f"{a},{b}": [c.real, c.imag] for (a, b), c in sorted(self.profile.items())},
                "eps": self.eps, "t_max": self.t_max, "grid": dict(self.grid)}


@dataclass
class ValidationReport:
    passed: bool
    min_profile: float
    min_radius: float
    min_dr_dt: float
    min_winding: int
    max_winding: int
    collar_error: float
    failures: list

    def to_dict(self):
        return {"passed": self.passed, "min_profile": self.min_profile,
                "min_radius": self.min_radius, "min_dr_dt": self.min_dr_dt,
                "winding": [self.min_winding, self.max_winding],
                "collar_error": self.collar_error, "failures": list(self.failures)}


class TorusFamily(GraphicalTorusFamily):
    """Star-shaped torus family built from a :class:`TorusFamilySpec`."""

    def __init__(self, spec, validate=True):
        self.spec = spec
        self.eps = spec.eps
        self.t_max = spec.t_max
        keys = sorted(spec.profile)
        self._kl = np.array([k[0] for k in keys], dtype=float)
        self._kp = np.array([k[1] for k in keys], dtype=float)
        self._c = np.array([spec.profile[k] for k in keys], dtype=complex)
        self.lambda_independent = bool(np.all(self._kl == 0))
        self.validated = None
        if validate:
            report = validate_family(self)
            self.validated = report
            if not report.passed:
                raise InvalidFamily("torus family rejected: " + "; ".join(report.failures))

    @classmethod
    def standard(cls, **kw):
        return cls(TorusFamilySpec.standard(**kw))

    @classmethod
    def from_profile(cls, profile, **kw):
        return cls(TorusFamilySpec(profile=profile, **kw))

    # profile ------------------------------------------------------------------

    def profile(self, lam, psi, derivative=False):
        """r1 on the circle (lambda normalised); with ``derivative`` also d r1/d psi."""
        lam = np.asarray(lam, dtype=complex)
        phi = np.angle(lam)
        psi = np.asarray(psi, dtype=float)
        phase = np.multiply.outer(phi, self._kl) + np.multiply.outer(psi, self._kp)
        e = self._c * np.exp(1j * phase)
        val = e.real.sum(axis=-1)
        if derivative:
            return val, (1j * self._kp * e).real.sum(axis=-1)
        return val

    def profile_ext(self, lam, psi):
        """Harmonic extension of r1 in lambda to the closed disk."""
        lam = np.asarray(lam, dtype=complex)
        psi = np.asarray(psi, dtype=float)
        kl = self._kl.astype(int)
        lam_e = lam[..., None]
        powers = np.where(kl >= 0, lam_e ** np.abs(kl), np.conj(lam_e) ** np.abs(kl))
        e = self._c * powers * np.exp(1j * np.multiply.outer(psi, self._kp))
        return e.real.sum(axis=-1)

    def blend(self, t):
        t = np.asarray(t, dtype=float)
        return smooth_step((t - self.eps) / (1.0 - self.eps))

    def blend_derivative(self, t):
        t = np.asarray(t, dtype=float)
        return smooth_step_derivative((t - self.eps) / (1.0 - self.eps)) / (1.0 - self.eps)

    def radius(self, q, t):
        """Radius at level t for profile value q."""
        t = np.asarray(t, dtype=float)
        return np.sqrt(t) * (1.0 + self.blend(t) * (q - 1.0))

    def radius_dt(self, q, t):
        t = np.asarray(t, dtype=float)
        s, ds = self.blend(t), self.blend_derivative(t)
        return (1.0 + s * (q - 1.0)) / (2 * np.sqrt(t)) + np.sqrt(t) * ds * (q - 1.0)

    # defining function --------------------------------------------------------

    def curve_point(self, lam, psi, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise OutOfRange("level t must be positive")
        q = self.profile(lam, psi)
        return self.radius(q, t) * np.exp(1j * np.asarray(psi, dtype=float))

    def ray_point(self, lam, psi, t):
        return self.curve_point(lam, psi, t)

    def _solve_level(self, q, rho):
        """Invert radius(q, t) = rho for t (vectorised safeguarded Newton)."""
        q = np.asarray(q, dtype=float)
        rho = np.asarray(rho, dtype=float)
        q, rho = np.broadcast_arrays(q, rho)
        t = rho**2
        mid = (rho**2 > self.eps) & (rho < q)
        high = rho >= q
        t = np.where(high, (rho / np.where(high, q, 1.0)) ** 2, t)
        if np.any(mid):
            qm, rm = q[mid], rho[mid]
            lo = np.full(qm.shape, self.eps)
            hi = np.ones(qm.shape)
            tm = np.clip((rm / qm) ** 2, self.eps, 1.0)
            for _ in range(100):
                f = self.radius(qm, tm) - rm
                lo = np.where(f < 0, tm, lo)
                hi = np.where(f > 0, tm, hi)
                step = f / self.radius_dt(qm, tm)
                tn = tm - step
                bad = (tn <= lo) | (tn >= hi) | ~np.isfinite(tn)
                tn = np.where(bad, 0.5 * (lo + hi), tn)
                done = np.max(np.abs(tn - tm)) <= 4e-16 * np.max(tm)
                tm = tn
                if done:
                    break
            t = t.copy()
            t[mid] = tm
        return t

    def level(self, lam, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w == 0):
            raise ZeroSection("F is only defined away from w = 0")
        q = self.profile(lam, np.angle(w))
        return self._solve_level(q, np.abs(w))

    def level_ext(self, lam, w):
        """Level function of the family whose profile is harmonically extended in lambda."""
        w = np.asarray(w, dtype=complex)
        if np.any(w == 0):
            raise ZeroSection("F is only defined away from w = 0")
        q = self.profile_ext(lam, np.angle(w))
        return self._solve_level(q, np.abs(w))

    def fiber_tangent(self, lam, w):
        """d/dpsi of curve_point at the level and angle of w."""
        w = np.asarray(w, dtype=complex)
        psi = np.angle(w)
        t = self.level(lam, w)
        q, dq = self.profile(lam, psi, derivative=True)
        r = self.radius(q, t)
        dr = np.sqrt(t) * self.blend(t) * dq
        return (dr + 1j * r) * np.exp(1j * psi)

    def to_dict(self):
        return self.spec.to_dict()


def validate_family(family, grid=None):
    """Grid check of positivity, monotonicity, winding and collar exactness."""
    spec = family.spec
    g = dict(spec.grid)
    if grid:
        g.update(grid)
    nl, npsi, nt = int(g["n_lambda"]), int(g["n_psi"]), int(g["n_t"])
    lam = np.exp(2j * np.pi * np.arange(nl) / nl)
    psi = 2 * np.pi * np.arange(npsi) / npsi
    ts = np.concatenate([np.linspace(family.eps / 4, family.eps, 4),
                         np.linspace(family.eps, family.t_max, nt)[1:]])
    q = family.profile(lam[:, None], psi[None, :])
    failures = []
    min_q = float(q.min())
    if min_q <= 0:
        failures.append(f"profile not positive (min r1 = {min_q:.4g})")
    radii = family.radius(q[None], ts[:, None, None])
    drdt = family.radius_dt(q[None], ts[:, None, None])
    min_r = float(radii.min())
    min_drdt = float(drdt.min())
    if min_r <= 0:
        failures.append(f"radius not positive (min r = {min_r:.4g})")
    if min_drdt <= 0:
        failures.append(f"family not monotone in t (min dr/dt = {min_drdt:.4g})")
    wmin = wmax = 1
    if min_r > 0:
        curves = radii * np.exp(1j * psi)
        try:
            wind = winding_samples(curves, max_step=np.pi)
            wmin, wmax = int(wind.min()), int(wind.max())
        except Exception as exc:  # curve through zero or undersampled
            failures.append(f"winding check failed: {exc}")
            wmin = wmax = 0
        if (wmin, wmax) != (1, 1):
            failures.append(f"fibres must wind once around 0, got {wmin}..{wmax}")
    collar = ts <= family.eps
    collar_err = float(np.max(np.abs(radii[collar] - np.sqrt(ts[collar])[:, None, None])))
    if collar_err > 1e-14:
        failures.append(f"collar condition violated by {collar_err:.3g}")
    return ValidationReport(passed=not failures, min_profile=min_q, min_radius=min_r,
                            min_dr_dt=min_drdt, min_winding=wmin, max_winding=wmax,
                            collar_error=collar_err, failures=failures)
