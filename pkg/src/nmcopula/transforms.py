"""Transforms ``f`` and the measure-preserving maps they generate.

A valid transform is non-decreasing and 1-Lipschitz on [0, 1] with
``f(1) = 1`` and ``f(v) >= v``.  From it

    g(x) = inf{v : f(v) >= x}        if x >= f(0)
    g(x) = sup{v : f(v) - v >= x}    otherwise

preserves the uniform distribution, and ``(U, g(V))`` has copula
``C(u, f(v)) - C(u, f(v) - v)`` whenever ``(U, V)`` has copula ``C``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from nmcopula.exceptions import (
    EmptyPreimageError,
    InvalidTransformError,
    UnorderedParametersError,
)

__all__ = [
    "TransformKind",
    "TransformSpec",
    "ValidationReport",
    "Violation",
    "validate_transform",
    "pseudo_inverse_plus",
    "pseudo_inverse_minus",
    "MeasureMap",
    "build_measure_map",
    "compose",
    "scarsini_map",
    "scarsini_stages",
    "bernoulli_map",
    "bernoulli_measure_map",
    "f3_c_min",
]

GRID_SIZE = 1001
_GRID_TOL = 1e-12
# Relative slack on the f3 power constraint; published estimates are rounded
# to 7 significant digits and can sit just outside the boundary.
F3_RTOL = 1e-6
_BISECT_TOL = 1e-12
_BISECT_ITER = 60


class TransformKind(str, Enum):
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"
    PIECEWISE = "piecewise"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "linear": cls.F1,
            "linear_f1": cls.F1,
            "quadratic": cls.F2,
            "quadratic_f2": cls.F2,
            "power": cls.F3,
            "power_f3": cls.F3,
            "piecewiselinear": cls.PIECEWISE,
            "piecewise_linear": cls.PIECEWISE,
            "knots": cls.PIECEWISE,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidTransformError(f"unknown transform kind {value!r}") from None

    @property
    def n_params(self):
        return {TransformKind.F1: 1, TransformKind.F2: 2, TransformKind.F3: 2}.get(self, 0)


def _knots_array(knots):
    k = np.asarray(knots, dtype=float)
    if k.ndim != 2 or k.shape[1] != 2 or k.shape[0] < 2:
        raise InvalidTransformError("piecewise transform needs at least two (x, y) knots")
    if not np.all(np.isfinite(k)):
        raise InvalidTransformError("knots must be finite")
    xs = k[:, 0]
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise InvalidTransformError("knot abscissae must start at 0 and end at 1")
    if np.any(np.diff(xs) <= 0):
        raise InvalidTransformError("knot abscissae must be strictly increasing")
    return k


@dataclass(frozen=True)
class TransformSpec:
    """A parametric transform ``f`` on [0, 1].

    Parameters
    ----------
    kind : TransformKind
        ``f1``: ``(v + c) / (1 + c)``.
        ``f2``: ``a v**2 + (1 - a - c) v + c``.
        ``f3``: ``((v + c) / (1 + c))**a``.
        ``piecewise``: linear interpolation of ``(x, y)`` knots.
        ``custom``: an arbitrary vectorised callable.
    params : tuple
        ``(c,)`` for f1, ``(a, c)`` for f2 and f3, knot pairs for piecewise.
    func : callable, optional
        Only for ``custom``.

    Notes
    -----
    Construction only checks the shape of ``params``.  Use
    :func:`validate_transform` to check that ``f`` generates a copula.
    """

    kind: TransformKind
    params: tuple = ()
    func: Callable | None = field(default=None, compare=False, repr=False)
    name: str = ""

    def __post_init__(self):
        kind = TransformKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is TransformKind.PIECEWISE:
            k = _knots_array(self.params)
            object.__setattr__(self, "params", tuple(map(tuple, k.tolist())))
        elif kind is TransformKind.CUSTOM:
            if not callable(self.func):
                raise InvalidTransformError("custom transform needs a callable")
            object.__setattr__(self, "params", tuple(self.params))
        else:
            params = tuple(float(p) for p in np.atleast_1d(np.asarray(self.params, dtype=float)))
            if len(params) != kind.n_params:
                raise InvalidTransformError(
                    f"{kind.value} takes {kind.n_params} parameter(s), got {len(params)}"
                )
            if not all(np.isfinite(params)):
                raise InvalidTransformError("transform parameters must be finite")
            object.__setattr__(self, "params", params)

    # constructors ---------------------------------------------------------

    @classmethod
    def f1(cls, c):
        return cls(TransformKind.F1, (c,))

    @classmethod
    def f2(cls, a, c):
        return cls(TransformKind.F2, (a, c))

    @classmethod
    def f3(cls, a, c):
        return cls(TransformKind.F3, (a, c))

    @classmethod
    def piecewise(cls, knots):
        return cls(TransformKind.PIECEWISE, knots)

    @classmethod
    def custom(cls, func, name="custom"):
        return cls(TransformKind.CUSTOM, (), func=func, name=name)

    @classmethod
    def identity(cls):
        return cls.f1(0.0)

    @classmethod
    def constant_one(cls):
        """``f = 1``, whose map is the reflection ``1 - x``."""
        return cls.piecewise([(0.0, 1.0), (1.0, 1.0)])

    # evaluation -------------------------------------------------------------

    @property
    def knots(self):
        return np.asarray(self.params, dtype=float) if self.kind is TransformKind.PIECEWISE else None

    @property
    def kinks(self):
        """Interior points where ``f`` may fail to be differentiable."""
        if self.kind is TransformKind.PIECEWISE:
            return self.knots[1:-1, 0]
        return np.empty(0)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        k = self.kind
        if k is TransformKind.F1:
            (c,) = self.params
            out = 1.0 - (1.0 - v) / (1.0 + c)
        elif k is TransformKind.F2:
            a, c = self.params
            w = 1.0 - v
            out = 1.0 - (1.0 + a - c) * w + a * w * w
        elif k is TransformKind.F3:
            a, c = self.params
            out = np.exp(a * np.log1p(-(1.0 - v) / (1.0 + c)))
        elif k is TransformKind.PIECEWISE:
            kn = self.knots
            out = np.interp(v, kn[:, 0], kn[:, 1])
        else:
            out = np.asarray(self.func(v), dtype=float)
        return out[()] if np.ndim(out) == 0 else out

    def excess(self, v):
        """``f(v) - v`` computed without cancellation where possible."""
        v = np.asarray(v, dtype=float)
        k = self.kind
        if k is TransformKind.F1:
            (c,) = self.params
            out = (1.0 - v) * c / (1.0 + c)
        elif k is TransformKind.F2:
            a, c = self.params
            w = 1.0 - v
            out = a * w * w + (c - a) * w
        else:
            out = self(v) - v
        return out[()] if np.ndim(out) == 0 else out

    def derivative(self, v):
        """Right derivative of ``f`` (left derivative at ``v = 1``)."""
        v = np.asarray(v, dtype=float)
        k = self.kind
        if k is TransformKind.F1:
            (c,) = self.params
            out = np.full(v.shape, 1.0 / (1.0 + c))
        elif k is TransformKind.F2:
            a, c = self.params
            out = (1.0 + a - c) - 2.0 * a * (1.0 - v)
        elif k is TransformKind.F3:
            a, c = self.params
            if a == 0.0:
                out = np.zeros(v.shape)
            else:
                r = 1.0 - (1.0 - v) / (1.0 + c)
                with np.errstate(divide="ignore"):
                    out = a / (1.0 + c) * np.power(r, a - 1.0)
        elif k is TransformKind.PIECEWISE:
            kn = self.knots
            slopes = np.diff(kn[:, 1]) / np.diff(kn[:, 0])
            idx = np.clip(np.searchsorted(kn[:, 0], v, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        else:
            h = 1e-7
            lo = np.clip(v, 0.0, 1.0 - h)
            out = (np.asarray(self.func(lo + h)) - np.asarray(self.func(lo))) / h
        return out[()] if np.ndim(out) == 0 else out

    @property
    def f0(self):
        """Value ``f(0)``, the zero of the measure-preserving map."""
        return float(self(0.0))

    # serialisation ---------------------------------------------------------

    def to_dict(self):
        if self.kind is TransformKind.CUSTOM:
            raise InvalidTransformError(
                "custom transforms cannot be serialised; use a piecewise knot list"
            )
        if self.kind is TransformKind.PIECEWISE:
            params = [list(k) for k in self.params]
        else:
            params = list(self.params)
        return {"kind": self.kind.value, "params": params}

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], tuple(map(lambda p: tuple(p) if np.ndim(p) else p, data["params"])))

    def __str__(self):
        if self.kind is TransformKind.CUSTOM:
            return self.name or "custom"
        if self.kind is TransformKind.PIECEWISE:
            return f"piecewise({len(self.params)} knots)"
        return f"{self.kind.value}({', '.join(f'{p:.6g}' for p in self.params)})"


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    condition: str
    location: float | None
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple = ()

    def __bool__(self):
        return self.valid

    @property
    def first(self):
        return self.violations[0] if self.violations else None

    def __str__(self):
        if self.valid:
            return "valid"
        v = self.first
        where = "" if v.location is None else f" at v={v.location:.6g}"
        return f"{v.condition}{where}: {v.detail}"


def f3_c_min(a):
    """Smallest ``c`` for which ``f3(.; a, c)`` is 1-Lipschitz.

    For ``a >= 1`` the slope peaks at ``v = 1`` and the bound is ``a - 1``.
    For ``0 < a < 1`` the slope peaks at ``v = 0`` and the bound solves
    ``(c / (1 + c))**(a - 1) = (1 + c) / a``.
    """
    a = float(a)
    if a <= 0.0:
        return 0.0
    if a >= 1.0:
        return a - 1.0

    def slack(log_c):
        c = np.exp(log_c)
        return (a - 1.0) * np.log(c / (1.0 + c)) - np.log((1.0 + c) / a)

    # slack decreases in c; bracket on the log scale
    lo, hi = -60.0, 5.0
    if slack(lo) < 0:
        return 0.0
    return float(np.exp(brentq(slack, lo, hi, xtol=1e-14, rtol=1e-14)))


def _family_violations(t):
    k = t.kind
    out = []
    tol = _GRID_TOL
    if k is TransformKind.F1:
        (c,) = t.params
        if c < 0:
            out.append(Violation("family constraint", None, f"c = {c:.6g} must be >= 0"))
    elif k is TransformKind.F2:
        a, c = t.params
        if c < -tol:
            out.append(Violation("family constraint", None, f"c = {c:.6g} must be >= 0"))
        if not -tol <= a + c <= 1.0 + tol:
            out.append(Violation("family constraint", None, f"a + c = {a + c:.6g} must lie in [0, 1]"))
        if not -tol <= 1.0 + a - c <= 1.0 + tol:
            out.append(
                Violation("family constraint", None, f"1 + a - c = {1 + a - c:.6g} must lie in [0, 1]")
            )
    elif k is TransformKind.F3:
        a, c = t.params
        if a < 0:
            out.append(Violation("family constraint", None, f"a = {a:.6g} must be >= 0"))
        if c < 0:
            out.append(Violation("family constraint", None, f"c = {c:.6g} must be >= 0"))
        if a > 1.0 + c:
            out.append(Violation("family constraint", None, f"a = {a:.6g} must be <= 1 + c"))
        if a > 0 and c >= 0 and not out:
            if c == 0.0:
                ok = a >= 1.0
            else:
                lhs = (a - 1.0) * np.log(c / (1.0 + c))
                rhs = np.log((1.0 + c) / a)
                ok = lhs <= rhs + np.log1p(F3_RTOL)
            if not ok:
                out.append(
                    Violation("family constraint", None, "(c/(1+c))**(a-1) must be <= (1+c)/a")
                )
    return out


def validate_transform(t, grid_size=GRID_SIZE):
    """Check that ``t`` generates a copula.

    Checks ``f(1) = 1``, ``f(v) >= v``, and difference quotients within
    ``[0, 1]`` on a uniform grid (tolerance 1e-12), then the closed-form
    parameter constraints of the parametric families.

    Returns
    -------
    ValidationReport
        Truthy when valid; ``report.first`` names the first violated
        condition and where it occurs.
    """
    violations = []
    try:
        fam = _family_violations(t)
        grid = np.linspace(0.0, 1.0, grid_size)
        with np.errstate(all="ignore"):
            fv = np.asarray(t(grid), dtype=float)
    except Exception as exc:  # a custom callable may fail arbitrarily
        return ValidationReport(False, (Violation("evaluation", None, str(exc)),))

    if not np.all(np.isfinite(fv)):
        i = int(np.argmax(~np.isfinite(fv)))
        violations.append(Violation("finite values", grid[i], f"f = {fv[i]!r}"))
    else:
        if abs(fv[-1] - 1.0) > _GRID_TOL:
            violations.append(Violation("f(1) = 1", 1.0, f"f(1) = {fv[-1]:.12g}"))
        if np.any((fv < -_GRID_TOL) | (fv > 1.0 + _GRID_TOL)):
            i = int(np.argmax((fv < -_GRID_TOL) | (fv > 1.0 + _GRID_TOL)))
            violations.append(Violation("f maps into [0, 1]", grid[i], f"f = {fv[i]:.12g}"))
        below = fv < grid - _GRID_TOL
        if np.any(below):
            i = int(np.argmax(below))
            violations.append(Violation("f(v) >= v", grid[i], f"f = {fv[i]:.12g}"))
        q = np.diff(fv) / np.diff(grid)
        bad = q < -_GRID_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            violations.append(Violation("f non-decreasing", grid[i], f"slope {q[i]:.6g}"))
        # the f3 family has its own relative tolerance on the slope bound
        slope_tol = _GRID_TOL
        if t.kind is TransformKind.F3:
            slope_tol = max(_GRID_TOL, F3_RTOL)
        bad = q > 1.0 + slope_tol
        if np.any(bad):
            i = int(np.argmax(bad))
            violations.append(Violation("difference quotient <= 1", grid[i], f"slope {q[i]:.12g}"))
    violations.extend(fam)
    return ValidationReport(not violations, tuple(violations))


# --------------------------------------------------------------------------
# pseudo-inverses


def _bisect(pred, shape, take_hi):
    """Vectorised bisection for the boundary of a monotone predicate on [0, 1].

    ``pred(v)`` is True on the right part of the interval.
    """
    lo = np.zeros(shape)
    hi = np.ones(shape)
    for _ in range(_BISECT_ITER):
        mid = 0.5 * (lo + hi)
        right = pred(mid)
        hi = np.where(right, mid, hi)
        lo = np.where(right, lo, mid)
        if np.all(hi - lo < _BISECT_TOL):
            break
    return hi if take_hi else lo


def _safe_div(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den != 0, num / np.where(den != 0, den, 1.0), 0.0)
    return out


def pseudo_inverse_plus(t, x):
    """``inf{v in [0, 1] : f(v) >= x}``.

    Values of ``x`` at or below ``f(0)`` return 0.

    Raises
    ------
    EmptyPreimageError
        If ``x > 1``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x > 1.0 + 1e-15):
        raise EmptyPreimageError("x > 1 has no preimage under f")
    x = np.minimum(x, 1.0)
    k = t.kind
    if k is TransformKind.F1:
        (c,) = t.params
        out = (1.0 + c) * x - c
    elif k is TransformKind.F2:
        a, c = t.params
        b = 1.0 - a - c
        d = x - c
        disc = np.sqrt(np.maximum(b * b + 4.0 * a * d, 0.0))
        out = np.where(d > 0, _safe_div(2.0 * d, b + disc), 0.0)
    elif k is TransformKind.F3:
        a, c = t.params
        if a == 0.0:
            out = np.zeros(x.shape)
        else:
            with np.errstate(divide="ignore"):
                out = (1.0 + c) * np.power(np.maximum(x, 0.0), 1.0 / a) - c
    elif k is TransformKind.PIECEWISE:
        kn = t.knots
        xs, ys = kn[:, 0], kn[:, 1]
        j = np.searchsorted(ys, x, side="left")
        j = np.clip(j, 1, len(ys) - 1)
        out = xs[j - 1] + _safe_div((x - ys[j - 1]) * (xs[j] - xs[j - 1]), ys[j] - ys[j - 1])
        out = np.where(x <= ys[0], 0.0, out)
    else:
        out = _bisect(lambda v: np.asarray(t(v)) >= x, x.shape, take_hi=True)
        out = np.where(np.asarray(t(0.0)) >= x, 0.0, out)
    out = np.clip(out, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def pseudo_inverse_minus(t, x):
    """``sup{v in [0, 1] : f(v) - v >= x}``.

    ``f(v) - v`` is non-increasing, so the set is an interval ``[0, v*]``.
    Values of ``x`` at or below 0 return 1.

    Raises
    ------
    EmptyPreimageError
        If ``x > f(0)``.
    """
    x = np.asarray(x, dtype=float)
    f0 = t.f0
    if np.any(x > f0 + 1e-12):
        raise EmptyPreimageError(f"x above f(0) = {f0:.6g} has no preimage under f(v) - v")
    k = t.kind
    if k is TransformKind.F1:
        (c,) = t.params
        out = 1.0 - _safe_div((1.0 + c) * x, c) if c > 0 else np.ones(x.shape)
    elif k is TransformKind.F2:
        a, c = t.params
        q = c - a
        disc = np.sqrt(np.maximum(q * q + 4.0 * a * x, 0.0))
        out = 1.0 - _safe_div(2.0 * x, q + disc)
    elif k is TransformKind.PIECEWISE:
        kn = t.knots
        xs = kn[:, 0]
        hs = kn[:, 1] - xs
        j = np.searchsorted(-hs, -x, side="right") - 1
        j = np.clip(j, 0, len(hs) - 2)
        out = xs[j] + _safe_div((hs[j] - x) * (xs[j + 1] - xs[j]), hs[j] - hs[j + 1])
        out = np.where(x <= hs[-1], 1.0, out)
    else:
        out = _bisect(lambda v: np.asarray(t.excess(v)) < x, x.shape, take_hi=False)
    out = np.where(x <= 0.0, 1.0, out)
    out = np.clip(out, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def _g_of(t, x):
    x = np.asarray(x, dtype=float)
    f0 = t.f0
    plus = x >= f0
    out = np.empty(x.shape)
    if np.any(plus):
        out[plus] = pseudo_inverse_plus(t, x[plus])
    if np.any(~plus):
        out[~plus] = pseudo_inverse_minus(t, x[~plus])
    return out


# --------------------------------------------------------------------------
# measure-preserving maps


@dataclass(frozen=True)
class MeasureMap:
    """Composition ``g = g_1 o g_2 o ... o g_m`` of measure-preserving maps.

    ``stages`` are listed in the written order of the composition, so the
    last stage acts on the argument first.  A stage is either a
    :class:`TransformSpec`, turned into its map through the two
    pseudo-inverses, or a plain vectorised callable.
    """

    stages: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
            raise ValueError("measure maps act on [0, 1]")
        out = x
        for stage in reversed(self.stages):
            out = _g_of(stage, out) if isinstance(stage, TransformSpec) else np.asarray(stage(out), float)
        out = np.clip(out, 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    evaluate = __call__

    @property
    def transform(self):
        """The generating transform of a single-stage map, else ``None``."""
        if len(self.stages) == 1 and isinstance(self.stages[0], TransformSpec):
            return self.stages[0]
        return None

    def curve(self, n_points=1001):
        x = np.linspace(0.0, 1.0, n_points)
        return x, self(x)


def build_measure_map(t):
    """Measure-preserving map generated by the transform ``t``.

    Raises
    ------
    InvalidTransformError
        If ``t`` fails :func:`validate_transform`.
    """
    report = validate_transform(t)
    if not report:
        raise InvalidTransformError(f"invalid transform {t}: {report}")
    return MeasureMap((t,), name=str(t))


def compose(maps):
    """Pointwise composition, ``compose([g1, g2])(x) = g1(g2(x))``."""
    maps = list(maps)
    if not maps:
        raise ValueError("compose needs at least one map")
    stages = []
    for m in maps:
        if isinstance(m, MeasureMap):
            stages.extend(m.stages)
        elif isinstance(m, TransformSpec):
            stages.append(build_measure_map(m).stages[0])
        elif callable(m):
            stages.append(m)
        else:
            raise TypeError(f"cannot compose {type(m).__name__}")
    return MeasureMap(tuple(stages), name=" o ".join(getattr(m, "name", "") or "g" for m in maps))


def _check_ordered(params):
    b, g, d, e, z = params
    if not all(0.0 <= p <= 1.0 for p in params):
        raise UnorderedParametersError("breakpoints must lie in [0, 1]")
    if not b <= g <= d <= e <= z:
        raise UnorderedParametersError(
            "breakpoints must satisfy beta <= gamma <= delta <= epsilon <= zeta"
        )


def scarsini_map(beta, gamma, delta, epsilon, zeta):
    """Six-piece linear measure-preserving map.

    Each piece is only evaluated on its own (possibly empty) interval, so
    coinciding breakpoints are allowed and produce a discontinuous map.
    """
    params = tuple(float(p) for p in (beta, gamma, delta, epsilon, zeta))
    _check_ordered(params)
    b, g, d, e, z = params
    base = 1.0 - z + b
    span = z - b

    def _scarsini(v):
        v = np.asarray(v, dtype=float)
        conds = [
            v <= b,
            (v > b) & (v <= g),
            (v > g) & (v <= d),
            (v > d) & (v <= e),
            (v > e) & (v <= z),
            v > z,
        ]
        vals = [
            _safe_div(base * v, b),
            base + _safe_div(span * (v - b), g - b),
            base + _safe_div(span * (d - v), d - g),
            base + _safe_div(span * (v - d), e - d),
            base + _safe_div(span * (z - v), z - e),
            _safe_div(base * (1.0 - v), 1.0 - z),
        ]
        return np.select(conds, vals)

    return MeasureMap((_scarsini,), name=f"scarsini{params}")


def scarsini_stages(beta, gamma, delta, epsilon, zeta):
    """Three piecewise transforms whose maps compose to :func:`scarsini_map`.

    Returns ``(f1, f2, f3)``; ``compose`` of their maps in that order agrees
    with the direct formula everywhere except at ``x = delta``.  Degenerate
    breakpoints that would collapse a knot interval are not supported.
    """
    params = tuple(float(p) for p in (beta, gamma, delta, epsilon, zeta))
    _check_ordered(params)
    b, g, d, e, z = params
    if not (0.0 < e - g < z - b < 1.0):
        raise UnorderedParametersError(
            "stage construction needs 0 < epsilon - gamma < zeta - beta < 1"
        )
    f1 = TransformSpec.constant_one()
    f2 = TransformSpec.piecewise([(0.0, e - g), (z - b, z - b), (1.0, 1.0)])
    f3 = TransformSpec.piecewise([(0.0, d), (e - g, e), (z - b, z), (1.0, 1.0)])
    return f1, f2, f3


def bernoulli_map(x):
    """``2x`` on [0, 1/2] and ``2x - 1`` on (1/2, 1]."""
    x = np.asarray(x, dtype=float)
    out = np.where(x <= 0.5, 2.0 * x, 2.0 * x - 1.0)
    return out[()] if out.ndim == 0 else out


def bernoulli_measure_map():
    return MeasureMap((bernoulli_map,), name="bernoulli")
