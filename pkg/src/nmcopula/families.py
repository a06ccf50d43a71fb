"""Monotone bivariate copula families.

Frank, Clayton, Gumbel, Gaussian, Student t, independence and the 90 degree
rotated Tawn type 1 copula.  Every function is vectorised over ``u`` and
``v`` and treats the parameter set as a scalar.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special as sc

from nmcopula._bivariate import bvn_cdf, bvt_cdf, t_cdf, t_logpdf, t_ppf, t_ppf_batch
from nmcopula.exceptions import BoundaryEvaluationError, InvalidParametersError

__all__ = [
    "Family",
    "CopulaParams",
    "PickandsParams",
    "check_params",
    "cdf",
    "pdf",
    "logpdf",
    "conditional_cdf",
    "inverse_conditional_cdf",
    "sample",
    "rectangle_mass",
    "tawn_cdf",
    "tawn_pdf",
    "tawn_conditional_cdf",
    "tawn_rot90_cdf",
    "tawn_rot90_pdf",
]

# Above this the t copula is numerically indistinguishable from the Gaussian.
NU_MAX = 100.0
NU_MIN = 2.0

# Internal densities clip their arguments to this distance from the boundary.
_EDGE = 1e-15
_BISECT_TOL = 1e-10


class Family(str, Enum):
    FRANK = "frank"
    CLAYTON = "clayton"
    GUMBEL = "gumbel"
    GAUSSIAN = "gaussian"
    STUDENT_T = "t"
    TAWN_ROT90 = "tawn1_rot90"
    INDEPENDENCE = "independence"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "student": cls.STUDENT_T,
            "studentt": cls.STUDENT_T,
            "student_t": cls.STUDENT_T,
            "normal": cls.GAUSSIAN,
            "tawn": cls.TAWN_ROT90,
            "tawn_rot90": cls.TAWN_ROT90,
            "tawntype1rot90": cls.TAWN_ROT90,
            "indep": cls.INDEPENDENCE,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidParametersError(f"unknown copula family {value!r}") from None


def check_params(family, theta=0.0, nu=None, psi1=None):
    """Total validity predicate.

    Returns ``(ok, reason)``; ``reason`` is empty when the parameters are valid.
    """
    try:
        family = Family.parse(family)
    except InvalidParametersError as exc:
        return False, str(exc)
    theta = float(theta)
    if not np.isfinite(theta):
        return False, "theta must be finite"
    if family is Family.FRANK and theta == 0.0:
        return False, "Frank copula requires theta != 0"
    if family is Family.CLAYTON and not theta > 0.0:
        return False, "Clayton copula requires theta > 0"
    if family is Family.GUMBEL and not theta >= 1.0:
        return False, "Gumbel copula requires theta >= 1"
    if family in (Family.GAUSSIAN, Family.STUDENT_T) and not -1.0 < theta < 1.0:
        return False, "correlation must lie in (-1, 1)"
    if family is Family.STUDENT_T:
        if nu is None or not np.isfinite(nu) or nu < NU_MIN:
            return False, f"degrees of freedom must be >= {NU_MIN}"
    if family is Family.TAWN_ROT90:
        if not theta >= 1.0:
            return False, "Tawn copula requires theta >= 1"
        if psi1 is None or not 0.0 <= psi1 <= 1.0:
            return False, "Tawn copula requires 0 <= psi1 <= 1"
    return True, ""


@dataclass(frozen=True)
class CopulaParams:
    """Parameter set of one monotone copula family.

    ``theta`` is the correlation for the elliptical families.  ``nu`` is only
    used by the t copula and ``psi1`` only by the rotated Tawn copula.
    """

    family: Family
    theta: float = 0.0
    nu: float | None = None
    psi1: float | None = None

    def __post_init__(self):
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "theta", float(self.theta))
        if self.nu is not None:
            object.__setattr__(self, "nu", float(self.nu))
        if self.psi1 is not None:
            object.__setattr__(self, "psi1", float(self.psi1))
        ok, reason = check_params(family, self.theta, self.nu, self.psi1)
        if not ok:
            raise InvalidParametersError(reason)

    @classmethod
    def independence(cls):
        return cls(Family.INDEPENDENCE)

    @property
    def n_params(self):
        return {
            Family.INDEPENDENCE: 0,
            Family.STUDENT_T: 2,
            Family.TAWN_ROT90: 2,
        }.get(self.family, 1)

    def as_dict(self):
        params = {"theta": self.theta}
        if self.family is Family.STUDENT_T:
            params["nu"] = self.nu
        if self.family is Family.TAWN_ROT90:
            params["psi1"] = self.psi1
        if self.family is Family.INDEPENDENCE:
            params = {}
        return {"family": self.family.value, "params": params}

    @classmethod
    def from_dict(cls, data):
        params = data.get("params", {})
        return cls(
            data["family"],
            theta=params.get("theta", 0.0),
            nu=params.get("nu"),
            psi1=params.get("psi1"),
        )


@dataclass(frozen=True)
class PickandsParams:
    """Parameters of the three-parameter Tawn dependence function."""

    theta: float
    psi1: float
    psi2: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.theta) and self.theta >= 1.0):
            raise InvalidParametersError("Tawn copula requires theta >= 1")
        for name in ("psi1", "psi2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParametersError(f"Tawn copula requires 0 <= {name} <= 1")

    def pickands(self, t):
        """Dependence function ``A(t)`` with ``t = log(u) / log(uv)``."""
        t = np.asarray(t, dtype=float)
        th, p1, p2 = self.theta, self.psi1, self.psi2
        return (p2 - p1) * t + (1.0 - p2) + ((p2 * (1.0 - t)) ** th + (p1 * t) ** th) ** (1.0 / th)

    def check_pickands(self, n_grid=1001, tol=1e-12):
        """Grid check of ``A(0) = A(1) = 1`` and ``max(t, 1 - t) <= A(t) <= 1``."""
        t = np.linspace(0.0, 1.0, n_grid)
        a = self.pickands(t)
        return bool(
            abs(a[0] - 1.0) <= tol
            and abs(a[-1] - 1.0) <= tol
            and np.all(a <= 1.0 + tol)
            and np.all(a >= np.maximum(t, 1.0 - t) - tol)
        )


# --------------------------------------------------------------------------
# helpers


def _as_arrays(u, v):
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return u, v


def _check_unit(u, v):
    if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)) or np.any(np.isnan(u) | np.isnan(v)):
        raise ValueError("arguments must lie in [0, 1]")


def _clip_open(x):
    return np.clip(x, _EDGE, 1.0 - _EDGE)


def _effective(p):
    """t copula with very large nu is evaluated as a Gaussian."""
    if p.family is Family.STUDENT_T and p.nu > NU_MAX:
        return CopulaParams(Family.GAUSSIAN, p.theta)
    return p


# --------------------------------------------------------------------------
# Frank


def _frank_cdf(th, u, v):
    num = np.expm1(-th * u) * np.expm1(-th * v)
    return -np.log1p(num / np.expm1(-th)) / th


def _frank_logpdf(th, u, v):
    em = np.expm1(-th)
    denom = em + np.expm1(-th * u) * np.expm1(-th * v)
    return np.log(th * -em) - th * (u + v) - 2.0 * np.log(np.abs(denom))


def _frank_hfunc(th, u, v):
    eu = np.expm1(-th * u)
    ev = np.expm1(-th * v)
    return np.exp(-th * u) * ev / (np.expm1(-th) + eu * ev)


def _frank_hinv(th, u, w):
    b = w * np.expm1(-th) / (w + (1.0 - w) * np.exp(-th * u))
    return -np.log1p(b) / th


# --------------------------------------------------------------------------
# Clayton (computed in logs, u**-theta overflows for small u)


def _clayton_logs(th, u, v):
    a = -th * np.log(u)
    b = -th * np.log(v)
    m = np.maximum(a, b)
    # log(u^-th + v^-th - 1)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _clayton_cdf(th, u, v):
    return np.exp(-_clayton_logs(th, u, v) / th)


def _clayton_logpdf(th, u, v):
    ls = _clayton_logs(th, u, v)
    return np.log1p(th) - (th + 1.0) * (np.log(u) + np.log(v)) - (2.0 + 1.0 / th) * ls


def _clayton_hfunc(th, u, v):
    ls = _clayton_logs(th, u, v)
    return np.exp(-(th + 1.0) * np.log(u) - (1.0 + 1.0 / th) * ls)


def _clayton_hinv(th, u, w):
    # v^-th = 1 + u^-th (w^(-th/(1+th)) - 1)
    inner = np.expm1(-th / (1.0 + th) * np.log(w))
    with np.errstate(divide="ignore"):
        log_term = -th * np.log(u) + np.log(inner)
    return np.exp(-np.logaddexp(0.0, log_term) / th)


# --------------------------------------------------------------------------
# Gumbel


def _gumbel_parts(th, u, v):
    x = -np.log(u)
    y = -np.log(v)
    s = x**th + y**th
    return x, y, s, s ** (1.0 / th)


def _gumbel_cdf(th, u, v):
    return np.exp(-_gumbel_parts(th, u, v)[3])


def _gumbel_logpdf(th, u, v):
    x, y, s, a = _gumbel_parts(th, u, v)
    return (
        -a
        + x
        + y
        + (th - 1.0) * (np.log(x) + np.log(y))
        + (1.0 / th - 2.0) * np.log(s)
        + np.log(a + th - 1.0)
    )


def _gumbel_hfunc(th, u, v):
    x, y, s, a = _gumbel_parts(th, u, v)
    # C * (x/a)^(th-1) / u
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(a > 0, x / a, 1.0)
    return np.exp(-a + x) * ratio ** (th - 1.0)


# --------------------------------------------------------------------------
# Gaussian


def _gauss_cdf(rho, u, v):
    return bvn_cdf(sc.ndtri(u), sc.ndtri(v), rho)


def _gauss_logpdf(rho, u, v):
    x = sc.ndtri(u)
    y = sc.ndtri(v)
    r2 = 1.0 - rho * rho
    return -0.5 * np.log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)


def _gauss_hfunc(rho, u, v):
    x = sc.ndtri(u)
    y = sc.ndtri(v)
    return sc.ndtr((y - rho * x) / np.sqrt(1.0 - rho * rho))


def _gauss_hinv(rho, u, w):
    x = sc.ndtri(u)
    return sc.ndtr(rho * x + np.sqrt(1.0 - rho * rho) * sc.ndtri(w))


# --------------------------------------------------------------------------
# Student t


def _t_cdf(rho, nu, u, v):
    return bvt_cdf(t_ppf(u, nu), t_ppf(v, nu), rho, nu)


def _t_logpdf_xy(rho, nu, x, y):
    r2 = 1.0 - rho * rho
    q = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2)
    log_joint = (
        sc.gammaln((nu + 2.0) / 2.0)
        - sc.gammaln(nu / 2.0)
        - np.log(nu * np.pi)
        - 0.5 * np.log(r2)
        - (nu + 2.0) / 2.0 * np.log1p(q)
    )
    return log_joint - t_logpdf(x, nu) - t_logpdf(y, nu)


def _t_logpdf(rho, nu, u, v):
    return _t_logpdf_xy(rho, nu, t_ppf_batch(u, nu), t_ppf_batch(v, nu))


def _t_hfunc(rho, nu, u, v):
    x = t_ppf(u, nu)
    y = t_ppf(v, nu)
    scale = np.sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0))
    return t_cdf((y - rho * x) / scale, nu + 1.0)


def _t_hinv(rho, nu, u, w):
    x = t_ppf(u, nu)
    scale = np.sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0))
    return t_cdf(rho * x + scale * t_ppf(w, nu + 1.0), nu)


# --------------------------------------------------------------------------
# Tawn
#
# With x = -log u, y = -log v the copula is exp(-l(x, y)) where
# l(x, y) = (1 - psi1) x + (1 - psi2) y + ((psi1 x)^th + (psi2 y)^th)^(1/th).


def _tawn_parts(pp, u, v):
    th, p1, p2 = pp.theta, pp.psi1, pp.psi2
    x = -np.log(u)
    y = -np.log(v)
    b = ((p1 * x) ** th + (p2 * y) ** th) ** (1.0 / th)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(b > 0, p1 * x / b, 0.0)
        r2 = np.where(b > 0, p2 * y / b, 0.0)
    ell = (1.0 - p1) * x + (1.0 - p2) * y + b
    lx = (1.0 - p1) + p1 * r1 ** (th - 1.0)
    ly = (1.0 - p2) + p2 * r2 ** (th - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lxy = np.where(b > 0, (1.0 - th) * p1 * p2 * (r1 * r2) ** (th - 1.0) / b, 0.0)
    return x, y, ell, lx, ly, lxy


def _tawn_cdf_raw(pp, u, v):
    return np.exp(-_tawn_parts(pp, u, v)[2])


def _tawn_logpdf_raw(pp, u, v):
    x, y, ell, lx, ly, lxy = _tawn_parts(pp, u, v)
    return -ell + x + y + np.log(lx * ly - lxy)


def _tawn_hfunc_raw(pp, u, v):
    x, y, ell, lx, ly, lxy = _tawn_parts(pp, u, v)
    return np.exp(-ell + x) * lx


def _with_boundaries(raw, u, v, *args):
    """Evaluate a copula cdf with the boundary conditions imposed exactly."""
    u, v = _as_arrays(u, v)
    _check_unit(u, v)
    out = np.where(u <= 0, 0.0, np.where(v <= 0, 0.0, np.where(u >= 1, v, u)))
    inside = (u > 0) & (u < 1) & (v > 0) & (v < 1)
    if np.any(inside):
        vals = raw(*args, u[inside], v[inside])
        ui, vi = u[inside], v[inside]
        out = out.astype(float)
        out[inside] = np.clip(vals, np.maximum(ui + vi - 1.0, 0.0), np.minimum(ui, vi))
    return out[()] if out.ndim == 0 else out


def tawn_cdf(pp, u, v):
    """Tawn copula ``(uv)^A(log u / log uv)``."""
    return _with_boundaries(_tawn_cdf_raw, u, v, pp)


def tawn_pdf(pp, u, v):
    u, v = _as_arrays(u, v)
    _check_open(u, v)
    out = np.exp(_tawn_logpdf_raw(pp, u, v))
    return out[()] if out.ndim == 0 else out


def tawn_conditional_cdf(pp, u, v):
    """Partial derivative of the Tawn copula with respect to ``u``."""
    return _hfunc_with_boundaries(_tawn_hfunc_raw, u, v, pp)


def _rot_pp(pp):
    if pp.psi2 != 1.0:
        raise InvalidParametersError("rotated Tawn type 1 requires psi2 = 1")
    return pp


def tawn_rot90_cdf(pp, u, v):
    """90 degree rotation ``v - C(1 - u, v)`` of the Tawn type 1 copula."""
    pp = _rot_pp(pp)
    u, v = _as_arrays(u, v)
    out = v - tawn_cdf(pp, 1.0 - u, v)
    out = np.clip(out, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v))
    # exact margins
    out = np.where(u >= 1, v, np.where(v >= 1, u, out))
    out = np.where((u <= 0) | (v <= 0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def tawn_rot90_pdf(pp, u, v):
    pp = _rot_pp(pp)
    u, v = _as_arrays(u, v)
    _check_open(u, v)
    out = np.exp(_tawn_logpdf_raw(pp, 1.0 - u, v))
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# dispatch


def _pp(p):
    return PickandsParams(p.theta, p.psi1, 1.0)


def _raw_cdf(p, u, v):
    f, th = p.family, p.theta
    if f is Family.INDEPENDENCE:
        return u * v
    if f is Family.FRANK:
        return _frank_cdf(th, u, v)
    if f is Family.CLAYTON:
        return _clayton_cdf(th, u, v)
    if f is Family.GUMBEL:
        return _gumbel_cdf(th, u, v)
    if f is Family.GAUSSIAN:
        return _gauss_cdf(th, u, v)
    if f is Family.STUDENT_T:
        return _t_cdf(th, p.nu, u, v)
    if f is Family.TAWN_ROT90:
        return v - _tawn_cdf_raw(_pp(p), 1.0 - u, v)
    raise InvalidParametersError(f"unsupported family {f}")


def _raw_logpdf(p, u, v):
    f, th = p.family, p.theta
    if f is Family.INDEPENDENCE:
        return np.zeros(np.broadcast(u, v).shape)
    if f is Family.FRANK:
        return _frank_logpdf(th, u, v)
    if f is Family.CLAYTON:
        return _clayton_logpdf(th, u, v)
    if f is Family.GUMBEL:
        return _gumbel_logpdf(th, u, v)
    if f is Family.GAUSSIAN:
        return _gauss_logpdf(th, u, v)
    if f is Family.STUDENT_T:
        return _t_logpdf(th, p.nu, u, v)
    if f is Family.TAWN_ROT90:
        return _tawn_logpdf_raw(_pp(p), 1.0 - u, v)
    raise InvalidParametersError(f"unsupported family {f}")


def _raw_hfunc(p, u, v):
    f, th = p.family, p.theta
    if f is Family.INDEPENDENCE:
        return v * np.ones_like(u)
    if f is Family.FRANK:
        return _frank_hfunc(th, u, v)
    if f is Family.CLAYTON:
        return _clayton_hfunc(th, u, v)
    if f is Family.GUMBEL:
        return _gumbel_hfunc(th, u, v)
    if f is Family.GAUSSIAN:
        return _gauss_hfunc(th, u, v)
    if f is Family.STUDENT_T:
        return _t_hfunc(th, p.nu, u, v)
    if f is Family.TAWN_ROT90:
        return _tawn_hfunc_raw(_pp(p), 1.0 - u, v)
    raise InvalidParametersError(f"unsupported family {f}")


def _check_open(u, v):
    if np.any(np.isnan(u) | np.isnan(v)):
        raise ValueError("arguments must not be NaN")
    if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
        raise BoundaryEvaluationError(
            "density is only defined strictly inside the unit square"
        )


def _hfunc_with_boundaries(raw, u, v, *args):
    u, v = _as_arrays(u, v)
    _check_unit(u, v)
    out = np.where(v <= 0, 0.0, np.where(v >= 1, 1.0, np.nan))
    inside = (v > 0) & (v < 1)
    if np.any(inside):
        uc = np.clip(u, _EDGE, 1.0 - _EDGE)
        out = out.astype(float)
        out[inside] = np.clip(raw(*args, uc[inside], v[inside]), 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def cdf(p, u, v):
    """Copula distribution function ``C(u, v)``.

    Boundary conditions ``C(u, 0) = C(0, v) = 0``, ``C(u, 1) = u`` and
    ``C(1, v) = v`` hold exactly; interior values are clipped to the
    Frechet-Hoeffding bounds.
    """
    p = _effective(p)
    return _with_boundaries(_raw_cdf, u, v, p)


def logpdf(p, u, v):
    """Log copula density; raises :class:`BoundaryEvaluationError` on the boundary."""
    p = _effective(p)
    u, v = _as_arrays(u, v)
    _check_open(u, v)
    out = _raw_logpdf(p, u, v)
    return out[()] if out.ndim == 0 else out


def pdf(p, u, v):
    """Copula density ``c(u, v)`` for ``u, v`` strictly inside (0, 1)."""
    return np.exp(logpdf(p, u, v))


def logpdf_clipped(p, u, v):
    """Log density with the arguments clipped away from the boundary.

    Used inside likelihoods where arguments such as ``f(v)`` may round onto
    the boundary.
    """
    p = _effective(p)
    return _raw_logpdf(p, _clip_open(np.asarray(u, float)), _clip_open(np.asarray(v, float)))


def conditional_cdf(p, u, v):
    """``dC/du (u, v)``, the distribution function of V given U = u."""
    p = _effective(p)
    return _hfunc_with_boundaries(_raw_hfunc, u, v, p)


def _bisect_hinv(p, u, w, tol=_BISECT_TOL):
    lo = np.zeros_like(w)
    hi = np.ones_like(w)
    n_iter = int(np.ceil(np.log2(1.0 / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = _raw_hfunc(p, u, mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def inverse_conditional_cdf(p, u, w):
    """Solve ``conditional_cdf(p, u, v) = w`` for ``v``.

    Closed forms for Frank, Clayton and the elliptical families; bracketed
    bisection with tolerance 1e-10 otherwise.
    """
    p = _effective(p)
    u, w = _as_arrays(u, w)
    _check_unit(u, w)
    u = _clip_open(u)
    w = _clip_open(w)
    f, th = p.family, p.theta
    if f is Family.INDEPENDENCE:
        v = w.copy()
    elif f is Family.FRANK:
        v = _frank_hinv(th, u, w)
    elif f is Family.CLAYTON:
        v = _clayton_hinv(th, u, w)
    elif f is Family.GAUSSIAN:
        v = _gauss_hinv(th, u, w)
    elif f is Family.STUDENT_T:
        v = _t_hinv(th, p.nu, u, w)
    elif f is Family.GUMBEL and th == 1.0:
        v = w.copy()
    else:
        v = _bisect_hinv(p, u, w)
    v = np.clip(v, 0.0, 1.0)
    return v[()] if v.ndim == 0 else v


def sample(p, n, seed=None):
    """Draw ``n`` pairs from the copula by conditional inversion.

    Returns an array of shape ``(n, 2)``.  The generator is created from
    ``seed`` on every call, so equal seeds give identical draws.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    w = rng.random(n)
    # rng.random is on [0, 1); keep u off the boundary for the conditional
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    v = inverse_conditional_cdf(p, u, w)
    return np.column_stack([u, v])


def rectangle_mass(p, u1, u2, v1, v2):
    """C-volume of ``[u1, u2] x [v1, v2]``."""
    return cdf(p, u2, v2) - cdf(p, u2, v1) - cdf(p, u1, v2) + cdf(p, u1, v1)
