"""Integer-order Bessel/Hankel functions and cylindrical Helmholtz waves.

Every other module evaluates kernels and incident fields through this one.
Conventions:

    J_m, Y_m : Bessel functions of the first/second kind, real argument
    H_m      : Hankel function of the first kind, J_m + i Y_m
    cylindrical wave of order m at frequency omega:
        J_m(omega |p|) * exp(i m theta_p),   theta_p = atan2(p_y, p_x)

Orders are capped at |m| <= 64 and arguments at x <= 200, which covers the
whole operating envelope of the library (orders up to ~50, omega R up to
~15).  Outside that envelope a DomainError is raised rather than returning
a value of unknown quality.

Evaluation is delegated to scipy.special (AMOS/cephes), whose series /
asymptotic / recurrence switching is accurate to ~1e-15 relative on this
envelope.  All functions broadcast over numpy arrays and return scalars
for scalar input.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

MAX_ORDER = 64
MAX_ARG = 200.0

__all__ = [
    "MAX_ORDER",
    "MAX_ARG",
    "DomainError",
    "bessel_j",
    "bessel_y",
    "bessel_jp",
    "hankel1",
    "hankel1p",
    "cyl_wave",
    "cyl_wave_grad",
]


class DomainError(ValueError):
    """Evaluation requested outside the supported (order, argument) domain."""


def _check_order(m) -> np.ndarray:
    m = np.asarray(m)
    if not np.issubdtype(m.dtype, np.integer):
        mf = np.asarray(m, dtype=float)
        if not np.all(mf == np.round(mf)):
            raise DomainError("order must be an integer")
        m = np.round(mf).astype(int)
    if np.any(np.abs(m) > MAX_ORDER):
        raise DomainError(f"|order| must be <= {MAX_ORDER}")
    return m


def _check_arg(x, strict_positive: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if strict_positive:
        if np.any(x <= 0.0):
            raise DomainError("argument must be > 0")
    elif np.any(x < 0.0):
        raise DomainError("argument must be >= 0")
    if np.any(x > MAX_ARG):
        raise DomainError(f"argument must be <= {MAX_ARG}")
    return x


def _scalarize(val, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return val[()] if isinstance(val, np.ndarray) else val
    return val


def bessel_j(m, x):
    """J_m(x) for integer order m and x >= 0."""
    mi = _check_order(m)
    xv = _check_arg(x, strict_positive=False)
    out = _sp.jv(mi, xv)
    return _scalarize(out, m, x)


def bessel_y(m, x):
    """Y_m(x) for integer order m and x > 0."""
    mi = _check_order(m)
    xv = _check_arg(x, strict_positive=True)
    out = _sp.yv(mi, xv)
    return _scalarize(out, m, x)


def hankel1(m, x):
    """H_m(x) = J_m(x) + i Y_m(x) for integer order m and x > 0."""
    mi = _check_order(m)
    xv = _check_arg(x, strict_positive=True)
    out = _sp.hankel1(mi, xv)
    return _scalarize(out, m, x)


def bessel_jp(m, x):
    """Derivative J_m'(x) via the recurrence (J_{m-1} - J_{m+1}) / 2."""
    mi = _check_order(m)
    xv = _check_arg(x, strict_positive=False)
    out = 0.5 * (_sp.jv(mi - 1, xv) - _sp.jv(mi + 1, xv))
    return _scalarize(out, m, x)


def hankel1p(m, x):
    """Derivative H_m'(x) via the recurrence (H_{m-1} - H_{m+1}) / 2."""
    mi = _check_order(m)
    xv = _check_arg(x, strict_positive=True)
    out = 0.5 * (_sp.hankel1(mi - 1, xv) - _sp.hankel1(mi + 1, xv))
    return _scalarize(out, m, x)


def _polar(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 2:
        raise ValueError("points must have trailing dimension 2")
    r = np.hypot(p[..., 0], p[..., 1])
    theta = np.arctan2(p[..., 1], p[..., 0])
    return p, r, theta


def cyl_wave(m, omega, p):
    """Cylindrical wave J_m(omega |p|) e^{i m theta_p}.

    Regular at the origin: returns 1 for m = 0 and 0 otherwise (the
    atan2(0, 0) = 0 convention combined with J_m(0) gives the correct
    limit without special-casing).
    """
    mi = _check_order(m)
    if omega <= 0.0:
        raise DomainError("omega must be > 0")
    p, r, theta = _polar(p)
    out = _sp.jv(mi, omega * r) * np.exp(1j * np.asarray(mi) * theta)
    return _scalarize(out, m, np.zeros(p.shape[:-1]))


def cyl_wave_grad(m, omega, p):
    """Cartesian gradient of the cylindrical wave of order m.

    Away from the origin:

        grad = e^{i m theta} [ omega J_m'(omega r) r_hat
                               + (i m / r) J_m(omega r) theta_hat ]

    Near the origin the leading series term J_m(z) ~ (z/2)^|m| / |m|! is
    differentiated instead,eliminating the removable 1/r singularity
    (the gradient is finite for every m; it vanishes except for |m| = 1).

    Returns an array with trailing dimension 2 (d/dx, d/dy).
    """
    mi = int(_check_order(np.asarray(m)))
    if omega <= 0.0:
        raise DomainError("omega must be > 0")
    p, r, theta = _polar(p)
    scalar_in = p.ndim == 1
    p2 = np.atleast_2d(p)
    r = np.atleast_1d(r)
    theta = np.atleast_1d(theta)

    out = np.empty(p2.shape, dtype=complex)
    near = omega * r < 1e-6
    far = ~near

    if np.any(far):
        rf, tf = r[far], theta[far]
        jp = bessel_jp(mi, omega * rf)
        jm = _sp.jv(mi, omega * rf)
        radial = omega * jp
        angular = 1j * mi * jm / rf
        phase = np.exp(1j * mi * tf)
        ct, st = np.cos(tf), np.sin(tf)
        out[far, 0] = phase * (radial * ct - angular * st)
        out[far, 1] = phase * (radial * st + angular * ct)

    if np.any(near):
        # leading term of J_m: C_m ~ c (x + i sgn(m) y)^{|m|},
        # c = (omega/2)^{|m|} / |m|!
        pn = p2[near]
        a = abs(mi)
        c = (omega / 2.0) ** a / float(math.factorial(a)) if a <= 20 else 0.0
        if a == 0:
            # C_0 ~ 1 - (omega r / 2)^2  ->  grad = -(omega^2/2) p
            out[near] = -(omega**2 / 2.0) * pn
        else:
            sgn = 1.0 if mi > 0 else -1.0
            w = pn[:, 0] + 1j * sgn * pn[:, 1]
            base = c * a * w ** (a - 1)
            out[near, 0] = base
            out[near, 1] = base * 1j * sgn

    return out[0] if scalar_in else out.reshape(p.shape)
