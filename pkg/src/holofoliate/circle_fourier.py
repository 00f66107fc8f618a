"""Spectral primitives on the unit circle.

Functions are sampled on the uniform grid theta_j = 2*pi*j/N with N a power
of two.  Fourier coefficients follow the convention

    u(theta) = sum_k c_k exp(i k theta),   k = -N/2, ..., N/2 - 1,

so ``c = fft(samples) / N``.  The Nyquist mode k = -N/2 is ambiguous between
+N/2 and -N/2; it is left out of the negative-frequency budget and dropped by
the Hilbert transform and by differentiation.

Most of the heavy lifting is done by array-level helpers (``*_samples``) that
act on the last axis, so batches of leaves can be processed at once; the
:class:`BoundaryFunction` methods are thin wrappers around them.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import CurveThroughZero, InputError, NonzeroWinding, NotHolomorphic, Undersampled

DEFAULT_GRID = 256
UNDERSAMPLING_STEP = np.pi / 2
FULL_PAIR_LIMIT = 512


def theta_grid(n):
    return 2.0 * np.pi * np.arange(n) / n


def _check_grid(n):
    if n < 16 or n & (n - 1):
        raise InputError(f"grid size must be a power of two >= 16, got {n}")


def wavenumbers(n):
    """Signed wavenumbers in FFT order."""
    return np.fft.fftfreq(n, 1.0 / n)


# ---------------------------------------------------------------------------
# array-level helpers (last axis is theta)


def hilbert_samples(u, normalization="at_one"):
    """Harmonic conjugate of real samples ``u`` along the last axis.

    ``normalization="center"`` makes the conjugate vanish at the disk centre
    (zero mean); ``"at_one"`` makes it vanish at theta = 0.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    k = wavenumbers(n)
    mult = -1j * np.sign(k)
    mult[n // 2] = 0.0
    hu = np.fft.ifft(np.fft.fft(u, axis=-1) * mult, axis=-1).real
    if normalization == "center":
        return hu
    if normalization == "at_one":
        return hu - hu[..., :1]
    raise InputError(f"unknown normalization {normalization!r}")


def analytic_samples(u, normalization="at_one"):
    """Boundary values of the holomorphic function with real part ``u``."""
    return u + 1j * hilbert_samples(u, normalization)


def theta_derivative_samples(u):
    n = np.shape(u)[-1]
    k = wavenumbers(n)
    k[n // 2] = 0.0
    out = np.fft.ifft(np.fft.fft(u, axis=-1) * (1j * k), axis=-1)
    if np.isrealobj(u):
        return out.real
    return out


def holomorphy_residual_samples(g):
    """Relative l2 mass of the negative modes, per row."""
    c = np.fft.fft(g, axis=-1)
    n = c.shape[-1]
    neg = c[..., n // 2 + 1 :]
    total = np.sqrt(np.sum(np.abs(c) ** 2, axis=-1))
    negn = np.sqrt(np.sum(np.abs(neg) ** 2, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, negn / np.where(total > 0, total, 1.0), 0.0)


def taylor_coeffs(g):
    """Coefficients c_0 .. c_{N/2} used for interior evaluation.

    The Nyquist coefficient is assigned to +N/2.
    """
    n = np.shape(g)[-1]
    c = np.fft.fft(g, axis=-1) / n
    return c[..., : n // 2 + 1]


def eval_taylor(coeffs, z):
    """Evaluate sum_k coeffs[..., k] z**k by Horner's rule.

    ``coeffs`` has shape (..., K); ``z`` broadcasts against the leading axes.
    """
    z = np.asarray(z, dtype=complex)
    coeffs = np.asarray(coeffs)
    acc = np.zeros(np.broadcast_shapes(coeffs.shape[:-1], z.shape), dtype=complex)
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        acc = acc * z + coeffs[..., k]
    return acc


def phase_increments(z):
    """Principal-branch phase steps between consecutive samples (cyclic)."""
    return np.angle(np.roll(z, -1, axis=-1) / z)


def winding_samples(z, max_step=UNDERSAMPLING_STEP):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise CurveThroughZero("curve passes through 0")
    d = phase_increments(z)
    if max_step is not None and np.any(np.abs(d) >= max_step):
        worst = float(np.max(np.abs(d)))
        raise Undersampled(f"phase increment {worst:.3g} rad exceeds {max_step:.3g}")
    return np.rint(np.sum(d, axis=-1) / (2 * np.pi)).astype(int)


def log_branch_samples(z, max_step=UNDERSAMPLING_STEP):
    """Continuous logarithm a + i b of a zero-winding curve (last axis)."""
    z = np.asarray(z, dtype=complex)
    w = winding_samples(z, max_step)
    if np.any(w != 0):
        raise NonzeroWinding(f"winding number {np.atleast_1d(w).tolist()} != 0")
    d = phase_increments(z)
    b = np.angle(z[..., :1]) + np.concatenate(
        [np.zeros(z.shape[:-1] + (1,)), np.cumsum(d[..., :-1], axis=-1)], axis=-1
    )
    return np.log(np.abs(z)), b


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderEstimate:
    alpha: float
    c0: float
    c1: float
    seminorm: float

    @property
    def total(self):
        return self.c0 + self.c1 + self.seminorm

    def to_dict(self):
        return {"alpha": self.alpha, "c0": self.c0, "c1": self.c1,
                "seminorm": self.seminorm, "total": self.total}


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Complex samples of a function on the unit circle."""

    samples: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False,
                                  compare=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.ndim != 1:
            raise InputError("samples must be one-dimensional")
        _check_grid(s.size)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    # construction -----------------------------------------------------------

    @classmethod
    def from_function(cls, func, n=DEFAULT_GRID):
        return cls(func(theta_grid(n)))

    @classmethod
    def constant(cls, value, n=DEFAULT_GRID):
        return cls(np.full(n, value, dtype=complex))

    @classmethod
    def from_coeffs(cls, coeffs):
        """Inverse of :attr:`coeffs` (order k = -N/2 .. N/2-1)."""
        c = np.asarray(coeffs, dtype=complex)
        return cls(np.fft.ifft(np.fft.ifftshift(c)) * c.size)

    @classmethod
    def from_taylor(cls, coeffs, n=DEFAULT_GRID):
        """Boundary values of the polynomial sum_k coeffs[k] lambda**k."""
        return cls(eval_taylor(np.asarray(coeffs, dtype=complex), np.exp(1j * theta_grid(n))))

    # views -------------------------------------------------------------------

    @property
    def grid_size(self):
        return self.samples.size

    @property
    def theta(self):
        return theta_grid(self.grid_size)

    @property
    def coeffs(self):
        """Fourier coefficients for k = -N/2 .. N/2-1 (computed once)."""
        c = self._cache.get("coeffs")
        if c is None:
            with self._lock:
                c = self._cache.get("coeffs")
                if c is None:
                    c = np.fft.fftshift(np.fft.fft(self.samples)) / self.grid_size
                    c.setflags(write=False)
                    self._cache["coeffs"] = c
        return c

    @property
    def modes(self):
        n = self.grid_size
        return np.arange(-n // 2, n // 2)

    @property
    def is_real(self):
        return bool(np.all(self.samples.imag == 0))

    @property
    def real(self):
        return BoundaryFunction(self.samples.real)

    @property
    def imag(self):
        return BoundaryFunction(self.samples.imag)

    def resample(self, n):
        """Trigonometric interpolation onto an n-point grid (zero padding)."""
        _check_grid(n)
        m = self.grid_size
        if n == m:
            return self
        c = self.coeffs
        out = np.zeros(n, dtype=complex)
        half = min(n, m) // 2
        src = np.arange(-half, half)
        out[src + n // 2] = c[src + m // 2]
        if n > m:
            # split the old Nyquist mode symmetrically
            nyq = c[0]
            out[-m // 2 + n // 2] = nyq / 2
            out[m // 2 + n // 2] = nyq / 2
        return BoundaryFunction.from_coeffs(out)

    def __call__(self, theta):
        """Trigonometric interpolant at arbitrary angles."""
        theta = np.asarray(theta, dtype=float)
        c = self.coeffs
        k = self.modes.astype(float)
        e = np.exp(1j * np.multiply.outer(theta, k))
        vals = e @ c
        # symmetric Nyquist so real data interpolates to real values
        vals += c[0] * (np.cos(self.grid_size / 2 * theta) - np.exp(-1j * self.grid_size / 2 * theta))
        return vals

    # serialization -----------------------------------------------------------

    def to_dict(self):
        return {"N": self.grid_size,
                "samples": [[float(z.real), float(z.imag)] for z in self.samples]}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        s = np.asarray(data["samples"], dtype=float)
        if s.ndim != 2 or s.shape[1] != 2:
            raise InputError("samples must be a list of [re, im] pairs")
        if "N" in data and int(data["N"]) != s.shape[0]:
            raise InputError(f"N={data['N']} does not match {s.shape[0]} samples")
        return cls(s[:, 0] + 1j * s[:, 1])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# operations on BoundaryFunction


def hilbert_transform(u, normalization="at_one"):
    """Boundary values of the harmonic conjugate of a real function."""
    if not u.is_real:
        raise InputError("Hilbert transform expects a real-valued function")
    return BoundaryFunction(hilbert_samples(u.samples.real, normalization))


def holomorphy_residual(g):
    return float(holomorphy_residual_samples(g.samples))


def holomorphic_extension(g, z, tol=1e-8):
    """Evaluate the holomorphic extension of ``g`` at |z| < 1 (scalar or array)."""
    res = holomorphy_residual(g)
    if res > tol:
        raise NotHolomorphic(f"negative-mode energy {res:.3g} exceeds {tol:.3g}")
    out = eval_taylor(taylor_coeffs(g.samples), z)
    return complex(out) if np.ndim(out) == 0 else out


def winding_number(curve, max_step=UNDERSAMPLING_STEP):
    return int(winding_samples(curve.samples, max_step))


def log_branch(curve, max_step=UNDERSAMPLING_STEP):
    a, b = log_branch_samples(curve.samples, max_step)
    return BoundaryFunction(a), BoundaryFunction(b)


def theta_derivative(u):
    return BoundaryFunction(theta_derivative_samples(u.samples))


def holder_norm(u, alpha):
    """Discrete C^{1,alpha} norm: sup|u| + sup|u'| + alpha-seminorm of u'.

    Distances between grid points are arc lengths on the circle.  Every pair is
    used up to N = 512; above that a strided subset of 512 points is used.
    """
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    s = u.samples
    du = theta_derivative_samples(s)
    n = s.size
    stride = max(1, n // FULL_PAIR_LIMIT)
    idx = np.arange(0, n, stride)
    th = theta_grid(n)[idx]
    d = np.abs(th[:, None] - th[None, :])
    d = np.minimum(d, 2 * np.pi - d)
    np.fill_diagonal(d, np.inf)
    diff = np.abs(du[idx][:, None] - du[idx][None, :])
    semi = float(np.max(diff / d**alpha))
    return HolderEstimate(alpha=alpha, c0=float(np.max(np.abs(s))),
                          c1=float(np.max(np.abs(du))), seminorm=semi)
