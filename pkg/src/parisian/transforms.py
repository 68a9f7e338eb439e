"""Laplace transforms (in time) of the Paris option density ``h_b(., y)``.

Coordinates: ``W`` is a standard Brownian motion started at 0, the knock-in
region is ``W < b``, ``D`` is the required excursion length and ``d <= D`` the
part of it still outstanding when the spot already sits below the barrier.
``H`` is the knock-in time and ``X = W(H)`` the position at knock-in.  With
``s = sqrt(2 z)`` (principal branch) every formula is built from the kernel

    K(x, y; z) = exp(-|x - y| s) / s,

the transform of the heat kernel ``exp(-(x-y)^2 / 2u) / sqrt(2 pi u)``.

Forms provided:

* ``hb_transform_nonpos`` -- barrier at or below spot (``b <= 0``).
* ``hb_transform_pos`` -- spot below barrier, event-split form; this is the
  form the pricer uses.  On ``{T_b > d}`` the knock-in is at ``H = d`` with
  ``X = W(d)``; on ``{T_b <= d}`` the clock restarts at ``T_b`` and ``X`` has
  the meander law, independent of ``H``.
* ``hb_transform_pos_product`` -- ``E[exp(-zH)]`` times the integral of ``K``
  against the law of ``X``.  This treats ``H`` and ``X`` as independent,
  which they are not for ``b > 0``; kept for comparison.
* ``hb_transform_pos_grouped`` -- the same product multiplied out into the
  four-term sum with Erf/Erfc coefficients.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .quadrature import gaussian_cutoff, integrate
from .special import erf, erfc, fp_tail_transform, psi, psi_scaled, truncated_fp_transform

__all__ = [
    "ExcursionSpec",
    "TransformEvaluator",
    "Measure",
    "exit_time_transform",
    "hitting_measure_density",
    "hitting_measure",
    "knock_in_position_law",
    "reflected_density",
    "lemma_transform",
    "hb_transform_nonpos",
    "hb_transform_pos",
    "hb_transform_pos_product",
    "hb_transform_pos_grouped",
    "hb_transform",
    "h_b3_closed",
    "h_b3_integral",
    "h_b4_closed",
    "h_b4_integral",
    "DEFAULT_QUAD_TOL",
]

DEFAULT_QUAD_TOL = 1e-10
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ExcursionSpec:
    """Normalized barrier ``b``, window ``D`` and remaining requirement ``d``."""

    b: float
    window: float
    remaining: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.b):
            raise DomainError(f"b must be finite, got {self.b}")
        if not self.window > 0:
            raise DomainError(f"window must be > 0, got {self.window}")
        if self.remaining is None:
            object.__setattr__(self, "remaining", self.window)
        if not 0 < self.remaining <= self.window:
            raise DomainError(f"remaining must lie in (0, window], got {self.remaining}")
        if self.b <= 0 and self.remaining != self.window:
            raise DomainError("remaining < window requires b > 0 (excursion in progress)")

    @property
    def threshold(self) -> float:
        return self.remaining if self.b > 0 else self.window

    @classmethod
    def from_derived(cls, params) -> "ExcursionSpec":
        d = params.d if params.b > 0 else params.window
        return cls(params.b, params.window, d)


@dataclass(frozen=True)
class TransformEvaluator:
    """Laplace transform ``z -> F(z)`` on ``Re z > 0``.

    ``func`` takes a 1-D complex array and returns values on its last axis;
    calling the evaluator accepts scalars or arrays of any shape.
    ``threshold`` is the time below which the inverse vanishes.
    """

    func: Callable[[np.ndarray], np.ndarray]
    domain_note: str = "Re z > 0"
    threshold: float = 0.0
    pieces: tuple = ()

    def __call__(self, z):
        z_arr = np.asarray(z, dtype=complex)
        out = np.asarray(self.func(z_arr.reshape(-1)))
        out = out.reshape(out.shape[:-1] + z_arr.shape)
        return complex(out) if out.ndim == 0 else out

    def shifted_pieces(self) -> tuple:
        """``((start, g), ...)`` with ``F(z) = sum exp(-z start) g(z)``.

        Each ``g`` is the transform of a piece of the time function moved to
        start at 0, so inverting ``g`` at ``u - start`` never meets the jump or
        kink at ``start``.  Evaluators without an explicit split are one
        piece starting at ``threshold``.
        """
        if self.pieces:
            return self.pieces
        start = self.threshold

        def shifted(z):
            return np.exp(z * start) * np.asarray(self.func(z))

        return ((start, shifted),)


@dataclass(frozen=True)
class Measure:
    """Finite measure on the line: a density on ``support`` plus point masses."""

    density: Callable[[np.ndarray], np.ndarray] | None = None
    support: tuple[float, float] = (-math.inf, math.inf)
    atoms: Sequence[tuple[float, float]] = field(default_factory=tuple)
    splits: Sequence[float] = field(default_factory=tuple)

    def mass(self, tol: float = DEFAULT_QUAD_TOL) -> float:
        total = sum(m for _, m in self.atoms)
        if self.density is not None:
            total += integrate(self.density, *self.support, tol, self.splits).value
        return float(total)


def _sqrt2z(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= 0):
        raise DomainError("transforms are defined for Re z > 0 only")
    return np.sqrt(2.0 * z)


def _kernel(x: np.ndarray, y: float, s: np.ndarray) -> np.ndarray:
    """``K(x, y; z)`` with ``s`` along axis 0 and ``x`` along axis 1."""
    return np.exp(-np.abs(x - y)[None, :] * s[:, None]) / s[:, None]


# -- exit-time transform and the laws of the knock-in position ---------------

def exit_time_transform(spec: ExcursionSpec, z, tol: float = DEFAULT_QUAD_TOL):
    """``E[exp(-z H)]`` for ``Re z > 0``.

    ``b <= 0``: ``exp(b s) / Psi(sqrt(D) s)``.  ``b > 0``:
    ``P(T_b > d) exp(-z d) + int_0^d exp(-z w) mu_b(dw) / Psi(sqrt(D) s)``.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    s = _sqrt2z(z_arr)
    restart = 1.0 / psi(math.sqrt(spec.window) * s)
    if spec.b <= 0:
        out = np.exp(spec.b * s) * restart
    else:
        d = spec.remaining
        stay = float(erf(spec.b / math.sqrt(2.0 * d)))
        out = stay * np.exp(-z_arr * d) + truncated_fp_transform(spec.b, d, z_arr, tol) * restart
    return out if np.ndim(z) else complex(out[0])


def hitting_measure_density(spec: ExcursionSpec, x):
    """Density of ``X = W(H)`` for ``b <= 0``: ``(b - x) exp(-(x-b)^2/2D) / D`` on ``x <= b``."""
    if spec.b > 0:
        raise DomainError("hitting_measure_density is for b <= 0; use the event-split laws")
    return _meander_density(spec.b, spec.window, x)


def _meander_density(b: float, window: float, x):
    x = np.asarray(x, dtype=float)
    gap = b - x
    with np.errstate(under="ignore"):
        out = np.where(gap > 0, gap * np.exp(-gap * gap / (2.0 * window)) / window, 0.0)
    return out if out.ndim else float(out)


def reflected_density(b: float, d: float, x, full_line: bool = False):
    """``(phi_d(x) - phi_d(x - 2b))``: law of ``W(d)`` on ``{max_{t<=d} W < b}``.

    Restricted to ``x < b`` unless ``full_line``; over the whole line the
    expression is odd about ``b`` and integrates to zero.
    """
    x = np.asarray(x, dtype=float)
    scale = _INV_SQRT_2PI / math.sqrt(d)
    with np.errstate(under="ignore"):
        out = scale * (np.exp(-x * x / (2.0 * d)) - np.exp(-(x - 2.0 * b) ** 2 / (2.0 * d)))
    if not full_line:
        out = np.where(x < b, out, 0.0)
    return out if out.ndim else float(out)


def _meander_support(b: float, window: float) -> tuple[float, float]:
    return b - gaussian_cutoff(math.sqrt(window), power=1), b


def hitting_measure(spec: ExcursionSpec) -> Measure:
    """Law of ``X`` for ``b <= 0`` as a :class:`Measure`."""
    if spec.b > 0:
        raise DomainError("hitting_measure is for b <= 0")
    return Measure(
        functools.partial(_meander_density, spec.b, spec.window),
        _meander_support(spec.b, spec.window),
    )


def _restart_measure(spec: ExcursionSpec, weight: float = 1.0) -> Measure:
    return Measure(
        lambda x: weight * _meander_density(spec.b, spec.window, x),
        _meander_support(spec.b, spec.window),
    )


def _stay_measure(spec: ExcursionSpec, full_line: bool = False) -> Measure:
    d, b = spec.remaining, spec.b
    cut = gaussian_cutoff(math.sqrt(d), power=0)
    hi = 2.0 * b + cut if full_line else b
    return Measure(
        functools.partial(reflected_density, b, d, full_line=full_line),
        (-cut, hi),
        splits=(b,) if full_line else (),
    )


def _sum_measures(*measures: Measure) -> Measure:
    lo = min(m.support[0] for m in measures)
    hi = max(m.support[1] for m in measures)
    splits = tuple(sorted({p for m in measures for p in (*m.splits, *m.support)}))

    def density(x):
        return sum(m.density(x) for m in measures)

    return Measure(density, (lo, hi), splits=splits)


def knock_in_position_law(spec: ExcursionSpec) -> Measure:
    """Law of ``X = W(H)``.

    For ``b > 0`` it mixes the meander law (weight ``P(T_b <= d)``) with the
    law of ``W(d)`` on ``{T_b > d}``.
    """
    if spec.b <= 0:
        return hitting_measure(spec)
    hit = float(erfc(spec.b / math.sqrt(2.0 * spec.remaining)))
    return _sum_measures(_restart_measure(spec, hit), _stay_measure(spec))


def lemma_transform(exit_transform, measure: Measure, y: float, z, tol: float = DEFAULT_QUAD_TOL):
    """``exit_transform * int K(x, y; z) measure(dx)``.

    The x-integral is split at the kink ``x = y`` and at the measure's own
    split points.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    s = _sqrt2z(z_arr)
    total = np.zeros(z_arr.shape, dtype=complex)
    for x0, mass in measure.atoms:
        total += mass * np.exp(-abs(x0 - y) * s) / s
    if measure.density is not None:
        lo, hi = measure.support
        splits = [p for p in (*measure.splits, y) if lo < p < hi]

        def integrand(x):
            return measure.density(x)[None, :] * _kernel(x, y, s)

        total += integrate(integrand, lo, hi, _ABS_FLOOR, splits, rtol=tol).value
    out = np.asarray(exit_transform) * total
    return out if np.ndim(z) else complex(out.reshape(-1)[0])


# -- inner integrals shared by the closed-form transforms --------------------

# The inverter amplifies each contour value's error by about exp(A/2) * terms,
# while far from the barrier the contour values themselves are tiny.  The inner
# integrals therefore control error relative to the batch magnitude only; this
# floor merely stops refinement on integrands that underflow to zero.
_ABS_FLOOR = 1e-290

def _meander_moment(b: float, window: float, y: float, s: np.ndarray, tol: float) -> np.ndarray:
    """``int_0^inf x exp(-x^2/2D - |b - x - y| s) dx``; kink at ``x = b - y``."""
    hi = gaussian_cutoff(math.sqrt(window), power=1)
    kink = b - y
    splits = [kink] if 0 < kink < hi else []

    def integrand(x):
        gauss = x * np.exp(-x * x / (2.0 * window))
        return gauss[None, :] * np.exp(-np.abs(kink - x)[None, :] * s[:, None])

    return integrate(integrand, 0.0, hi, _ABS_FLOOR, splits, rtol=tol).value


def _reflected_moment(b: float, d: float, y: float, s: np.ndarray, tol: float,
                      full_line: bool) -> np.ndarray:
    """``int exp(-|x - y| s) f_{b,d}(x) dx`` over ``x < b`` (or the whole line)."""
    cut = gaussian_cutoff(math.sqrt(d), power=0)
    lo, hi = -cut, (2.0 * b + cut if full_line else b)
    splits = [p for p in (y, b) if lo < p < hi]
    scale = math.sqrt(2.0 * math.pi * d)

    def integrand(x):
        f = scale * reflected_density(b, d, x, full_line=True)
        return f[None, :] * np.exp(-np.abs(x - y)[None, :] * s[:, None])

    return integrate(integrand, lo, hi, _ABS_FLOOR, splits, rtol=tol).value


# -- transform evaluators ----------------------------------------------------

def _require_nonpos(spec: ExcursionSpec) -> None:
    if spec.b > 0:
        raise DomainError(f"this form needs b <= 0, got b={spec.b}")


def _require_pos(spec: ExcursionSpec) -> None:
    if not spec.b > 0:
        raise DomainError(f"this form needs b > 0, got b={spec.b}")


def _from_pieces(pieces, note: str, threshold: float) -> TransformEvaluator:
    def func(z):
        return sum(np.exp(-z * start) * g(z) for start, g in pieces)

    return TransformEvaluator(func, note, threshold=threshold, pieces=tuple(pieces))


def hb_transform_nonpos(spec: ExcursionSpec, y: float, tol: float = DEFAULT_QUAD_TOL) -> TransformEvaluator:
    """Closed transform for ``b <= 0``:

    ``exp(b s) / (sqrt(D) sqrt(2Dz) Psi(sqrt(2Dz))) * int_0^inf x exp(-x^2/2D - |b-x-y| s) dx``.

    Stored as one piece starting at ``D`` (with ``exp(Dz) / Psi`` evaluated
    through :func:`psi_scaled`).
    """
    _require_nonpos(spec)
    b, window = spec.b, spec.window

    def shifted(z):
        s = _sqrt2z(z)
        root = math.sqrt(window) * s
        pref = np.exp(b * s) / (math.sqrt(window) * root * psi_scaled(root))
        return pref * _meander_moment(b, window, y, s, tol)

    return _from_pieces([(window, shifted)], "Re z > 0; b <= 0", window)


def hb_transform_pos(spec: ExcursionSpec, y: float, tol: float = DEFAULT_QUAD_TOL) -> TransformEvaluator:
    """Event-split transform for ``b > 0``:

    ``exp(-z d) int_{x<b} K(x,y) f_{b,d}(x) dx / sqrt(2 pi d)
    + [int_0^d exp(-z w) mu_b(dw) / Psi(sqrt(2Dz))] * int_0^inf (x/D) exp(-x^2/2D) K(b-x,y) dx``.

    The time function jumps at ``d`` (no-hit event) and has a kink at
    ``D + d`` (restarts are cut off at ``T_b = d``).  Writing
    ``int_0^d exp(-zw) mu_b(dw) = exp(-b s) - exp(-zd) int_d^inf exp(-z(w-d)) mu_b(dw)``
    splits it into pieces starting at ``d``, ``D`` and ``D + d``.
    """
    _require_pos(spec)
    b, window, d = spec.b, spec.window, spec.remaining

    def restart_core(z, s):
        # exp(Dz) * I(z) / (D s Psi(sqrt(2Dz)))
        return _meander_moment(b, window, y, s, tol) / (window * s * psi_scaled(math.sqrt(window) * s))

    def stay(z):
        s = _sqrt2z(z)
        return _reflected_moment(b, d, y, s, tol, False) / (math.sqrt(2.0 * math.pi * d) * s)

    def restart_all(z):
        s = _sqrt2z(z)
        return np.exp(-b * s) * restart_core(z, s)

    def restart_late(z):
        s = _sqrt2z(z)
        return -fp_tail_transform(b, d, z) * restart_core(z, s)

    pieces = [(d, stay), (window, restart_all), (window + d, restart_late)]
    return _from_pieces(pieces, "Re z > 0; b > 0, event-split", d)


def hb_transform_pos_product(spec: ExcursionSpec, y: float, tol: float = DEFAULT_QUAD_TOL) -> TransformEvaluator:
    """``E[exp(-zH)] * int K(x,y) (mu_A + mu_stay)(dx)`` with
    ``mu_A = P(T_b <= d) * meander law`` and ``mu_stay`` the reflected density on ``x < b``."""
    _require_pos(spec)
    law = knock_in_position_law(spec)

    def func(z):
        return lemma_transform(exit_time_transform(spec, z, tol), law, y, z, tol)

    return TransformEvaluator(func, "Re z > 0; b > 0, product form", threshold=spec.remaining)


@dataclass(frozen=True)
class GroupedTransform(TransformEvaluator):
    """Four-term evaluator; :meth:`terms` returns the weighted summands."""

    term_funcs: tuple = ()

    def terms(self, z) -> list:
        z_arr = np.asarray(z, dtype=complex)
        out = []
        for fn in self.term_funcs:
            v = np.asarray(fn(z_arr.reshape(-1))).reshape(z_arr.shape)
            out.append(complex(v) if v.ndim == 0 else v)
        return out


def hb_transform_pos_grouped(
    spec: ExcursionSpec, y: float, tol: float = DEFAULT_QUAD_TOL, full_line: bool = False
) -> GroupedTransform:
    """Four-term form

    ``Erfc L1 + L2 / sqrt(2 pi d) + Erfc Erf L3 + Erf L4`` with, for
    ``c = b / sqrt(2d)``, ``I(z) = int_0^inf x exp(-x^2/2D - |b-x-y| s) dx``,
    ``J(z) = int exp(-|x-y| s) f_{b,d}(x) dx`` and ``G(z)`` the truncated
    first-passage transform:

    * ``L1 = G I / (D s Psi(sqrt(2Dz)))``
    * ``L2 = G J / (s Psi(sqrt(2Dz)))``
    * ``L3 = exp(-zd) I / (D s)``, the transform of ``h_b3_closed``
    * ``L4 = exp(-zd) J / (sqrt(2 pi d) s)``, the transform of ``h_b4_closed``

    ``J`` runs over ``x < b`` (support of the law of ``W(d)`` before the
    barrier is reached); ``full_line=True`` integrates over the whole line as
    the formula is sometimes written, which makes ``L4`` the exact transform of
    ``h_b4_closed`` but breaks agreement with the product form.
    """
    _require_pos(spec)
    b, window, d = spec.b, spec.window, spec.remaining
    c = b / math.sqrt(2.0 * d)
    e, ec = float(erf(c)), float(erfc(c))

    @functools.lru_cache(maxsize=4)
    def parts(key: bytes, n: int):
        z = np.frombuffer(key, dtype=complex, count=n)
        s = _sqrt2z(z)
        root_psi = psi(math.sqrt(window) * s)
        g = truncated_fp_transform(b, d, z, tol)
        moment = _meander_moment(b, window, y, s, tol)
        refl = _reflected_moment(b, d, y, s, tol, full_line)
        return z, s, root_psi, g, moment, refl

    def get(z):
        z = np.ascontiguousarray(z, dtype=complex)
        return parts(z.tobytes(), z.size)

    def t1(z):
        z, s, rp, g, moment, refl = get(z)
        return ec * g * moment / (window * s * rp)

    def t2(z):
        z, s, rp, g, moment, refl = get(z)
        return g * refl / (s * rp) / math.sqrt(2.0 * math.pi * d)

    def t3(z):
        z, s, rp, g, moment, refl = get(z)
        return ec * e * np.exp(-z * d) * moment / (window * s)

    def t4(z):
        z, s, rp, g, moment, refl = get(z)
        return e * np.exp(-z * d) * refl / (math.sqrt(2.0 * math.pi * d) * s)

    funcs = (t1, t2, t3, t4)

    def func(z):
        return sum(f(z) for f in funcs)

    note = "Re z > 0; b > 0, four-term grouping" + (" (full-line J)" if full_line else "")
    return GroupedTransform(func, note, threshold=d, term_funcs=funcs)


def hb_transform(spec: ExcursionSpec, y: float, tol: float = DEFAULT_QUAD_TOL) -> TransformEvaluator:
    """The transform used for pricing: closed form for ``b <= 0``, event-split otherwise."""
    if spec.b <= 0:
        return hb_transform_nonpos(spec, y, tol)
    return hb_transform_pos(spec, y, tol)


# -- closed-form densities of the delayed terms -------------------------------

def h_b3_integral(u: float, y: float, spec: ExcursionSpec, tol: float = 1e-13) -> float:
    """``1_{u>d} / (D sqrt(2 pi (u-d))) int_0^inf x exp(-x^2/2D - (b-x-y)^2 / 2(u-d)) dx``."""
    d, window, b = spec.remaining, spec.window, spec.b
    if u <= d:
        return 0.0
    v = u - d
    hi = gaussian_cutoff(math.sqrt(window), power=1)

    def integrand(x):
        return x * np.exp(-x * x / (2.0 * window) - (b - x - y) ** 2 / (2.0 * v))

    val = integrate(integrand, 0.0, hi, tol, [b - y] if 0 < b - y < hi else []).value
    return float(val / (window * math.sqrt(2.0 * math.pi * v)))


def _h_b3_formula(u, y, b, d, window):
    u = np.asarray(u, dtype=float)
    v = np.where(u > d, u - d, 1.0)
    gap = y - b
    total = v + window
    first = np.sqrt(v) * _INV_SQRT_2PI * np.exp(-gap * gap / (2.0 * v))
    second = 0.5 * gap * math.sqrt(window) / np.sqrt(total) * np.exp(-gap * gap / (2.0 * total)) * erfc(
        gap * math.sqrt(window) / np.sqrt(2.0 * v * total)
    )
    return np.where(u > d, (first - second) / total, 0.0)


@functools.lru_cache(maxsize=1)
def _h_b3_closed_trusted() -> bool:
    # Cross-check of the closed form against its Gaussian-integral representation.
    ref = ExcursionSpec(0.3, 0.1, 0.04)
    worst = 0.0
    for u in (0.1, 0.5, 1.5):
        for y in (-0.4, 0.1, 0.6):
            closed = float(_h_b3_formula(u, y, ref.b, ref.remaining, ref.window))
            worst = max(worst, abs(closed - h_b3_integral(u, y, ref)))
    if worst > 1e-6:
        warnings.warn(
            f"h_b3 closed form disagrees with its integral representation by {worst:.3g}; "
            "falling back to quadrature",
            RuntimeWarning,
        )
        return False
    return True


def h_b3_closed(u, y, spec: ExcursionSpec):
    """Closed form of ``h_{b,3}(u, y)`` (zero for ``u <= d``).

    ``[sqrt(v) phi-term - (y-b) sqrt(D) / (2 sqrt(v+D)) exp(-(y-b)^2 / 2(v+D))
    erfc((y-b) sqrt(D) / sqrt(2 v (v+D)))] / (v + D)`` with ``v = u - d``.
    """
    if not _h_b3_closed_trusted():
        out = np.vectorize(lambda uu, yy: h_b3_integral(uu, yy, spec))(u, y)
    else:
        out = _h_b3_formula(u, y, spec.b, spec.remaining, spec.window)
    return float(out) if np.ndim(out) == 0 else out


def h_b4_closed(u, y, spec: ExcursionSpec):
    """``1_{u>d} (exp(-y^2/2u) - exp(-(y-2b)^2/2u)) / sqrt(2 pi u)``."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    safe = np.where(u > 0, u, 1.0)
    f = np.exp(-y * y / (2.0 * safe)) - np.exp(-(y - 2.0 * spec.b) ** 2 / (2.0 * safe))
    out = np.where(u > spec.remaining, f / np.sqrt(2.0 * math.pi * safe), 0.0)
    return float(out) if out.ndim == 0 else out


def h_b4_integral(u: float, y: float, spec: ExcursionSpec, tol: float = 1e-13) -> float:
    """Heat-kernel convolution of the full-line reflected density over ``u - d``."""
    d, b = spec.remaining, spec.b
    if u <= d:
        return 0.0
    v = u - d
    cut = gaussian_cutoff(math.sqrt(d), power=0)

    def integrand(x):
        heat = np.exp(-(x - y) ** 2 / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
        return heat * reflected_density(b, d, x, full_line=True)

    return float(integrate(integrand, -cut, 2.0 * b + cut, tol, [b]).value)
