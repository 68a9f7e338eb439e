"""Special functions used by the exit-time transforms.

``psi`` is the meander moment function
``Psi(z) = int_0^inf x exp(-x^2/2 + z x) dx``; integrating by parts gives
``1 + z exp(z^2/2) sqrt(2 pi) Phi(z)``, and with the Faddeeva function
``w(t) = exp(-t^2) erfc(-i t)`` this is ``1 + z sqrt(pi/2) w(-i z / sqrt 2)``,
which never forms the overflowing factor ``exp(z^2/2)`` separately.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

from .errors import DomainError, NumericalError, RangeError
from .quadrature import gaussian_cutoff, integrate

__all__ = [
    "psi",
    "psi_scaled",
    "erf",
    "erfc",
    "normal_cdf",
    "first_passage_density",
    "truncated_fp_transform",
    "fp_tail_transform",
    "survival_probability",
    "PSI_MAX_ABS",
]

_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# |Psi(z)| ~ |z| sqrt(2 pi) exp(Re(z^2)/2) overflows once Re(z^2)/2 nears 709.
PSI_MAX_ABS = 37.0

erf = _sp.erf
erfc = _sp.erfc
normal_cdf = _sp.ndtr


def psi(z):
    """Psi on the complex plane (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = 1.0 + z * _SQRT_HALF_PI * _sp.wofz(-1j * z * _INV_SQRT2)
    if not np.all(np.isfinite(out)):
        bad = z[~np.isfinite(out)] if z.ndim else z
        raise RangeError(f"psi overflow at z={np.ravel(bad)[0]!r}")
    return out if out.ndim else complex(out)


def psi_scaled(w):
    """``exp(-w^2/2) Psi(w)`` for ``|arg w| <= pi/4`` (scalar or array).

    Equals ``exp(-w^2/2) + w sqrt(pi/2) erfc(-w/sqrt 2)``; on that sector
    ``Re(w^2) >= 0``, so no term overflows however large ``|w|`` is.  This is
    the form needed once a transform is multiplied by ``exp(D z)``.
    """
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w.imag) > np.abs(w.real) * (1 + 1e-12)):
        raise DomainError("psi_scaled needs |arg w| <= pi/4")
    with np.errstate(under="ignore"):
        out = np.exp(-0.5 * w * w) + w * _SQRT_HALF_PI * _sp.erfc(-w * _INV_SQRT2)
    return out if out.ndim else complex(out)


def first_passage_density(b: float, w):
    """Density of the first passage time of standard Brownian motion to ``b > 0``."""
    if not b > 0:
        raise DomainError(f"first passage level must be > 0, got b={b}")
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise DomainError("first passage time must be > 0")
    with np.errstate(under="ignore"):
        out = b * _INV_SQRT_2PI * w**-1.5 * np.exp(-b * b / (2.0 * w))
    return out if out.ndim else float(out)


def survival_probability(b: float, d: float) -> float:
    """P(T_b > d) = P(max_{t<=d} W_t < b) = erf(b / sqrt(2 d))."""
    if not b > 0 or not d > 0:
        raise DomainError(f"need b > 0 and d > 0, got b={b}, d={d}")
    return float(erf(b / math.sqrt(2.0 * d)))


def truncated_fp_transform(b: float, d: float, z, tol: float = 1e-12):
    """``int_0^d exp(-z w) mu_b(dw)`` for ``Re z >= 0`` (scalar or array ``z``).

    Evaluated after the substitution ``w = b^2 / s^2``, under which the first
    passage law becomes twice the standard normal density on
    ``s > b / sqrt(d)``; the integrand ``2 phi(s) exp(-z b^2 / s^2)`` is smooth
    and Gaussian-damped.  The upper end is cut where ``phi`` drops below
    1e-18 of its peak.
    """
    if not b > 0 or not d > 0:
        raise DomainError(f"need b > 0 and d > 0, got b={b}, d={d}")
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z_arr.real < 0):
        raise DomainError("truncated_fp_transform requires Re z >= 0")
    lo = b / math.sqrt(d)
    hi = max(gaussian_cutoff(1.0, power=0), lo + 1.0)
    if lo >= hi:
        out = np.zeros(z_arr.shape, dtype=complex)
        return out if np.ndim(z) else complex(out[0])
    b2 = b * b

    def integrand(s):
        with np.errstate(under="ignore"):
            gauss = 2.0 * _INV_SQRT_2PI * np.exp(-0.5 * s * s)
            return gauss[None, :] * np.exp(-np.outer(z_arr, b2 / (s * s)))

    res = integrate(integrand, lo, hi, tol, max_intervals=20000)
    out = np.asarray(res.value, dtype=complex)
    if not np.all(np.isfinite(out)):
        raise NumericalError("truncated first-passage transform not finite", out)
    return out if np.ndim(z) else complex(out[0])


def fp_tail_transform(b: float, d: float, z):
    """``int_d^inf exp(-z (w - d)) mu_b(dw)`` for ``Re z >= 0`` (scalar or array ``z``).

    Complements :func:`truncated_fp_transform`:
    ``truncated + exp(-z d) * tail = exp(-b sqrt(2 z))``.  With ``s = sqrt(2z)``,
    ``p = (s d - b)/sqrt(2d)`` and ``q = (s d + b)/sqrt(2d)`` the tail is
    ``exp(-b^2/2d) (erfcx(p) - erfcx(q)) / 2``.  For ``Re p < 0`` the
    reflection ``erfcx(p) = 2 exp(p^2) - erfcx(-p)`` turns this into
    ``exp(z d - b s) - exp(-b^2/2d) (erfcx(-p) + erfcx(q)) / 2``, in which every
    term is bounded by 1, so nothing overflows and the result keeps full
    relative accuracy even when it is tiny.
    """
    if not b > 0 or not d > 0:
        raise DomainError(f"need b > 0 and d > 0, got b={b}, d={d}")
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z_arr.real < 0):
        raise DomainError("fp_tail_transform requires Re z >= 0")
    s = np.sqrt(2.0 * z_arr)
    root = math.sqrt(2.0 * d)
    p = (s * d - b) / root
    q = (s * d + b) / root
    weight = math.exp(-b * b / (2.0 * d))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        direct = 0.5 * weight * (_sp.erfcx(p) - _sp.erfcx(q))
        reflected = np.exp(z_arr * d - b * s) - 0.5 * weight * (_sp.erfcx(-p) + _sp.erfcx(q))
    out = np.where(p.real >= 0, direct, reflected)
    if not np.all(np.isfinite(out)):
        raise NumericalError("first-passage tail transform not finite", out)
    return out if np.ndim(z) else complex(out[0])
