"""Maximum likelihood fitting and model selection.

Parameters are estimated by Nelder-Mead in an unconstrained space.  Bounded
parameters are mapped through ``exp``/``tanh``/``expit``.  The linear
constraints of the quadratic transform are handled by projecting onto the
feasible box with an exact L1 penalty, and the nonlinear bound of the power
transform by projecting ``c`` up to its lower bound with the same penalty.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special as sc
from scipy.optimize import minimize
from scipy.stats import rankdata

from nmcopula import families as fam
from nmcopula.copula import NonMonoCopula, q_logpdf
from nmcopula.exceptions import (
    AllFitsFailedError,
    CopulaError,
    DataError,
    DegenerateSampleError,
    InvalidCombinationError,
    NonPositiveDensityError,
)
from nmcopula.families import CopulaParams, Family
from nmcopula.transforms import TransformKind, TransformSpec, f3_c_min, validate_transform

__all__ = [
    "PseudoSample",
    "pseudo_observations",
    "log_likelihood",
    "FitOptions",
    "FitResult",
    "fit",
    "information_criteria",
    "select",
    "Selection",
    "canonicalize",
    "default_grid",
    "NONMONO_FAMILIES",
    "BASELINE_FAMILIES",
]

NONMONO_FAMILIES = (Family.CLAYTON, Family.GUMBEL, Family.FRANK, Family.GAUSSIAN, Family.STUDENT_T)
BASELINE_FAMILIES = (
    Family.FRANK,
    Family.CLAYTON,
    Family.GUMBEL,
    Family.GAUSSIAN,
    Family.STUDENT_T,
    Family.TAWN_ROT90,
)
TRANSFORM_KINDS = (TransformKind.F1, TransformKind.F2, TransformKind.F3)

# Families whose copula is symmetric under u -> u, v -> 1 - v with theta -> -theta.
_MIRROR_FAMILIES = (Family.FRANK, Family.GAUSSIAN, Family.STUDENT_T)

_PENALTY = 1e6
_BAD = 1e12
_NU_CAP = fam.NU_MAX


# --------------------------------------------------------------------------
# data


def pseudo_observations(x):
    """Scaled ranks ``#{j : x_j <= x_k} / (n + 1)``.

    Ties share the largest rank, as the ``<=`` count implies.

    Examples
    --------
    >>> pseudo_observations([3.0, 1.0, 2.0])
    array([0.75, 0.25, 0.5 ])
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise DataError("pseudo-observations need at least two values")
    if not np.all(np.isfinite(x)):
        raise DataError("pseudo-observations need finite values")
    return rankdata(x, method="max") / (x.size + 1.0)


@dataclass(frozen=True)
class PseudoSample:
    """Bivariate sample on the open unit square."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).ravel()
        v = np.asarray(self.v, dtype=float).ravel()
        if u.shape != v.shape:
            raise DataError("u and v must have the same length")
        if u.size == 0:
            raise DataError("empty sample")
        if np.any(~np.isfinite(u) | ~np.isfinite(v)) or np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
            raise DataError("pseudo-observations must lie strictly inside (0, 1)")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self):
        return self.u.size

    @classmethod
    def from_data(cls, x, y):
        """Rank-transform two raw data columns."""
        return cls(pseudo_observations(x), pseudo_observations(y))

    def clamped(self):
        """Copy with both columns clamped to ``[1/(2n), 1 - 1/(2n)]``.

        A single observation is returned as is, since the interval would
        collapse onto 1/2.
        """
        if self.n == 1:
            return self.u.copy(), self.v.copy()
        lo = 1.0 / (2.0 * self.n)
        return np.clip(self.u, lo, 1.0 - lo), np.clip(self.v, lo, 1.0 - lo)

    def as_array(self):
        return np.column_stack([self.u, self.v])


def _logpdf_values(model, u, v):
    if isinstance(model, NonMonoCopula):
        return np.asarray(q_logpdf(model, u, v), dtype=float)
    if isinstance(model, CopulaParams):
        return np.asarray(fam.logpdf_clipped(model, u, v), dtype=float)
    raise TypeError(f"cannot evaluate a likelihood for {type(model).__name__}")


def log_likelihood(model, s):
    """Sum of log densities over the sample.

    Parameters
    ----------
    model : NonMonoCopula or CopulaParams
    s : PseudoSample

    Raises
    ------
    NonPositiveDensityError
        If the density is zero (or not finite) at some observation; the
        error carries the index of the first such observation.
    """
    u, v = s.clamped()
    lp = _logpdf_values(model, u, v)
    bad = ~np.isfinite(lp)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NonPositiveDensityError(i, float(np.exp(lp[i])) if not np.isnan(lp[i]) else lp[i])
    return float(lp.sum())


def information_criteria(loglik, k, n):
    """Return ``(AIC, BIC)`` with ``AIC = 2k - 2l`` and ``BIC = log(n) k - 2l``."""
    return 2.0 * k - 2.0 * loglik, math.log(n) * k - 2.0 * loglik


# --------------------------------------------------------------------------
# parameterisations


def _base_dim(family):
    return {Family.INDEPENDENCE: 0, Family.STUDENT_T: 2, Family.TAWN_ROT90: 2}.get(family, 1)


def _decode_base(family, s):
    if family is Family.INDEPENDENCE:
        return CopulaParams.independence()
    if family is Family.FRANK:
        th = s[0] if s[0] != 0.0 else 1e-10
        return CopulaParams(family, th)
    if family is Family.CLAYTON:
        return CopulaParams(family, np.exp(np.clip(s[0], -30.0, 5.0)))
    if family is Family.GUMBEL:
        return CopulaParams(family, 1.0 + np.exp(np.clip(s[0], -30.0, 4.0)))
    if family is Family.GAUSSIAN:
        return CopulaParams(family, np.clip(np.tanh(s[0]), -0.9999, 0.9999))
    if family is Family.STUDENT_T:
        nu = min(fam.NU_MIN + np.exp(np.clip(s[1], -20.0, 5.0)), _NU_CAP)
        return CopulaParams(family, np.clip(np.tanh(s[0]), -0.9999, 0.9999), nu=nu)
    if family is Family.TAWN_ROT90:
        return CopulaParams(family, 1.0 + np.exp(np.clip(s[0], -30.0, 4.0)), psi1=sc.expit(s[1]))
    raise InvalidCombinationError(f"unsupported family {family}")


def _encode_base(p):
    f = p.family
    if f is Family.INDEPENDENCE:
        return []
    if f is Family.FRANK:
        return [p.theta]
    if f is Family.CLAYTON:
        return [np.log(p.theta)]
    if f is Family.GUMBEL:
        return [np.log(max(p.theta - 1.0, 1e-12))]
    if f is Family.GAUSSIAN:
        return [np.arctanh(np.clip(p.theta, -0.9999, 0.9999))]
    if f is Family.STUDENT_T:
        return [np.arctanh(np.clip(p.theta, -0.9999, 0.9999)), np.log(max(min(p.nu, _NU_CAP) - fam.NU_MIN, 1e-8))]
    if f is Family.TAWN_ROT90:
        return [np.log(max(p.theta - 1.0, 1e-12)), sc.logit(np.clip(p.psi1, 1e-9, 1 - 1e-9))]
    raise InvalidCombinationError(f"unsupported family {f}")


def _decode_transform(kind, s):
    """Return ``(TransformSpec, penalty)``."""
    if kind is TransformKind.F1:
        return TransformSpec.f1(np.exp(np.clip(s[0], -30.0, 30.0))), 0.0
    if kind is TransformKind.F2:
        p, q = s
        pc, qc = np.clip(p, 0.0, 1.0), np.clip(q, 0.0, 1.0)
        pen = _PENALTY * (abs(p - pc) + abs(q - qc))
        return TransformSpec.f2((pc - qc) / 2.0, (pc + qc) / 2.0), pen
    if kind is TransformKind.F3:
        a = np.exp(np.clip(s[0], -20.0, 5.0))
        log_c = np.clip(s[1], -30.0, 10.0)
        c_min = f3_c_min(a)
        pen = 0.0
        c = np.exp(log_c)
        if c < c_min:
            pen = _PENALTY * (np.log(c_min) - log_c)
            c = c_min
        return TransformSpec.f3(a, c), pen
    raise InvalidCombinationError(f"unsupported transform kind {kind}")


def _encode_transform(t):
    if t.kind is TransformKind.F1:
        return [np.log(max(t.params[0], 1e-12))]
    if t.kind is TransformKind.F2:
        a, c = t.params
        return [a + c, c - a]
    if t.kind is TransformKind.F3:
        a, c = t.params
        return [np.log(max(a, 1e-9)), np.log(max(c, 1e-12))]
    raise InvalidCombinationError(f"cannot fit transform kind {t.kind}")


def _transform_starts(kind):
    if kind is TransformKind.F1:
        return [TransformSpec.f1(c) for c in (1.5, 0.3, 0.8, 3.0, 8.0)]
    if kind is TransformKind.F2:
        # centre and four inner corners of the (a + c, c - a) box
        pq = [(0.5, 0.5), (0.2, 0.2), (0.8, 0.8), (0.3, 0.7), (0.7, 0.3)]
        return [TransformSpec.f2((p - q) / 2.0, (p + q) / 2.0) for p, q in pq]
    if kind is TransformKind.F3:
        starts = []
        for a, c in ((1.0, 1.0), (0.4, 0.3), (0.7, 0.5), (1.5, 1.5), (0.25, 0.2)):
            starts.append(TransformSpec.f3(a, max(c, 1.25 * f3_c_min(a))))
        return starts
    raise InvalidCombinationError(f"cannot fit transform kind {kind}")


_THETA_GRID = {
    Family.FRANK: [-12.0, -6.0, -2.0, 2.0, 6.0, 12.0, 20.0],
    Family.CLAYTON: [0.2, 0.6, 1.5, 3.0, 6.0],
    Family.GUMBEL: [1.1, 1.5, 2.2, 3.2, 5.0],
    Family.GAUSSIAN: [-0.9, -0.6, -0.3, 0.3, 0.6, 0.9],
    Family.STUDENT_T: [-0.9, -0.6, -0.3, 0.3, 0.6, 0.9],
    Family.TAWN_ROT90: [1.3, 2.0, 3.0, 5.0],
}


def _base_grid(family):
    if family is Family.INDEPENDENCE:
        return [CopulaParams.independence()]
    grid = []
    for th in _THETA_GRID[family]:
        if family is Family.STUDENT_T:
            grid.append(CopulaParams(family, th, nu=6.0))
        elif family is Family.TAWN_ROT90:
            grid.extend(CopulaParams(family, th, psi1=p) for p in (0.2, 0.5, 0.9))
        else:
            grid.append(CopulaParams(family, th))
    return grid


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings.

    Parameters
    ----------
    n_starts : int
        Number of deterministic starting points (at most 5 are defined).
    start_maxfev : int
        Function evaluations per dimension for each exploratory run.
    maxiter : int
        Iteration cap for the final run.
    xatol, fatol : float
        Simplex size and objective spread at which the final run stops.
    canonicalize : bool
        Report mirror-symmetric fits in their ``theta >= 0`` form.
    nested : bool
        For f2 and f3 fits, also start from the f1 optimum.
    """

    n_starts: int = 5
    start_maxfev: int = 60
    maxiter: int = 2000
    xatol: float = 1e-8
    fatol: float = 1e-9
    canonicalize: bool = True
    nested: bool = True


@dataclass(frozen=True)
class OptimizerTrace:
    start_logliks: tuple = ()
    nfev: int = 0
    nit: int = 0
    message: str = ""
    seconds: float = 0.0


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit.

    ``model`` is a :class:`NonMonoCopula` for transformed models and a
    :class:`CopulaParams` for monotone baselines.  Failed cells of a
    selection carry ``error`` and NaN scores.
    """

    family: Family
    transform: TransformKind | None
    model: object
    estimates: dict
    loglik: float
    k: int
    n: int
    aic: float
    bic: float
    converged: bool
    trace: OptimizerTrace = field(default_factory=OptimizerTrace)
    error: str | None = None
    winner: bool = False

    @property
    def label(self):
        return self.family.value if self.transform is None else f"{self.family.value}+{self.transform.value}"

    @property
    def ok(self):
        return self.error is None

    def criterion(self, name):
        return {"aic": self.aic, "bic": self.bic}[str(name).lower()]


def _estimates(base, transform):
    est = {}
    if transform is not None:
        if transform.kind is TransformKind.F1:
            est["c"] = transform.params[0]
        else:
            est["a"], est["c"] = transform.params
    if base.family is not Family.INDEPENDENCE:
        est["theta"] = base.theta
    if base.family is Family.STUDENT_T:
        est["nu"] = base.nu
    if base.family is Family.TAWN_ROT90:
        est["psi1"] = base.psi1
    return est


def _make_result(base, transform, loglik, n, converged, trace):
    model = base if transform is None else NonMonoCopula(base, transform)
    k = base.n_params + (0 if transform is None else transform.kind.n_params)
    aic, bic = information_criteria(loglik, k, n)
    return FitResult(
        family=base.family,
        transform=None if transform is None else transform.kind,
        model=model,
        estimates=_estimates(base, transform),
        loglik=float(loglik),
        k=k,
        n=n,
        aic=aic,
        bic=bic,
        converged=bool(converged),
        trace=trace,
    )


def canonicalize(base, transform):
    """Pick the ``theta >= 0`` member of a mirror pair.

    For Frank, Gaussian and t bases ``(C_theta, f)`` and
    ``(C_-theta, 1 - f(v) + v)`` define the same copula.  The mirror of an
    f1 transform is f1 with ``1 / c`` and the mirror of an f2 transform is
    f2 with ``(-a, 1 - c)``.  Other combinations are returned unchanged.
    """
    if base.family not in _MIRROR_FAMILIES or base.theta >= 0 or transform is None:
        return base, transform
    if transform.kind is TransformKind.F1:
        c = transform.params[0]
        if c <= 0:
            return base, transform
        mirrored = TransformSpec.f1(1.0 / c)
    elif transform.kind is TransformKind.F2:
        a, c = transform.params
        mirrored = TransformSpec.f2(-a, 1.0 - c)
    else:
        return base, transform
    return replace(base, theta=-base.theta), mirrored


# --------------------------------------------------------------------------
# fitting


class _Objective:
    def __init__(self, family, kind, u, v):
        self.family = family
        self.kind = kind
        self.u = u
        self.v = v
        self.nb = _base_dim(family)
        self.nfev = 0

    def decode(self, s):
        s = np.asarray(s, dtype=float)
        base = _decode_base(self.family, s[: self.nb])
        if self.kind is None:
            return base, None, 0.0
        t, pen = _decode_transform(self.kind, s[self.nb:])
        return base, t, pen

    def encode(self, base, transform):
        out = _encode_base(base)
        if transform is not None:
            out = out + _encode_transform(transform)
        return np.asarray(out, dtype=float)

    def loglik(self, base, transform):
        with np.errstate(all="ignore"):
            if transform is None:
                lp = fam.logpdf_clipped(base, self.u, self.v)
            else:
                lp = q_logpdf(_Unchecked(base, transform), self.u, self.v)
        total = float(np.sum(lp))
        return total if np.isfinite(total) else -np.inf

    def __call__(self, s):
        self.nfev += 1
        try:
            base, t, pen = self.decode(s)
        except CopulaError:
            return _BAD
        ll = self.loglik(base, t)
        if not np.isfinite(ll):
            return _BAD + pen
        return -ll + pen


class _Unchecked:
    """Duck-typed stand-in for NonMonoCopula that skips grid validation."""

    __slots__ = ("base", "transform")

    def __init__(self, base, transform):
        self.base = base
        self.transform = transform


def _check_sample(s, k):
    if np.ptp(s.u) == 0 or np.ptp(s.v) == 0:
        raise DegenerateSampleError("a column of the sample is constant")
    if s.n < 10 * max(k, 1):
        raise DegenerateSampleError(f"{s.n} observations are too few for {k} parameters (need {10 * k})")


def _initial_simplex(x0, kind, nb, scale=1.0):
    """Simplex with steps sized to each coordinate's scale."""
    steps = np.full(x0.size, 0.25 * scale)
    if kind is TransformKind.F2:
        steps[nb:] = 0.08 * scale
    sim = [x0]
    for i in range(x0.size):
        y = x0.copy()
        y[i] += steps[i]
        sim.append(y)
    return np.asarray(sim)


def fit(family, transform_kind, s, options=None, init=None):
    """Maximum likelihood fit of one (family, transform) combination.

    Parameters
    ----------
    family : Family or str
    transform_kind : TransformKind, str or None
        ``None`` fits the bare monotone family.
    s : PseudoSample
    options : FitOptions, optional
    init : FitResult, optional
        An f1 fit of the same family used as an extra starting point for
        f2 and f3.  Computed internally when ``options.nested`` is set and
        no ``init`` is given.

    Returns
    -------
    FitResult
        Estimates satisfy every parameter constraint exactly.  ``converged``
        is False when the iteration cap was reached.

    Raises
    ------
    InvalidCombinationError
        Unknown family or transform, or a transform on the independence
        copula or the rotated Tawn baseline.
    DegenerateSampleError
        Constant column or too few observations.
    """
    t_start = time.perf_counter()
    options = options or FitOptions()
    try:
        family = Family.parse(family)
    except CopulaError as exc:
        raise InvalidCombinationError(str(exc)) from None
    kind = None
    if transform_kind is not None and str(getattr(transform_kind, "value", transform_kind)).lower() not in ("", "none"):
        try:
            kind = TransformKind.parse(transform_kind)
        except CopulaError as exc:
            raise InvalidCombinationError(str(exc)) from None
        if kind not in TRANSFORM_KINDS:
            raise InvalidCombinationError(f"transform kind {kind.value} has no fitted parameterisation")
        if family in (Family.INDEPENDENCE, Family.TAWN_ROT90):
            raise InvalidCombinationError(f"{family.value} is only available as a monotone baseline")
    k = _base_dim(family) + (0 if kind is None else kind.n_params)
    _check_sample(s, k)
    if k == 0:
        ll = log_likelihood(CopulaParams.independence(), s)
        return _make_result(CopulaParams.independence(), None, ll, s.n, True, OptimizerTrace())

    u, v = s.clamped()
    obj = _Objective(family, kind, u, v)

    # starting points: each transform start paired with the best theta on a grid
    starts = []
    if kind is None:
        scored = sorted(((obj.loglik(b, None), i, b) for i, b in enumerate(_base_grid(family))), reverse=True)
        starts = [(b, None) for _, _, b in scored[: options.n_starts]]
    else:
        for t in _transform_starts(kind)[: options.n_starts]:
            best = max(_base_grid(family), key=lambda b: obj.loglik(b, t))
            starts.append((best, t))
        if options.nested and kind in (TransformKind.F2, TransformKind.F3):
            if init is None:
                init = fit(family, TransformKind.F1, s, replace(options, nested=False))
            if init.ok and init.transform is TransformKind.F1:
                c1 = init.model.transform.params[0]
                if kind is TransformKind.F2:
                    nested_t = TransformSpec.f2(0.0, c1 / (1.0 + c1))
                else:
                    nested_t = TransformSpec.f3(1.0, c1)
                base1 = init.model.base
                starts.append((base1, nested_t))
                # the mirror image of the f1 optimum is also an f1 optimum
                if kind is TransformKind.F2 and family in _MIRROR_FAMILIES:
                    mb, mt = replace(base1, theta=-base1.theta), TransformSpec.f2(0.0, 1.0 / (1.0 + c1))
                    starts.append((mb, mt))

    # short exploratory runs from every start, then polish the best
    dim = k
    explored = []
    for base0, t0 in starts:
        x0 = obj.encode(base0, t0)
        res = minimize(
            obj,
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": options.start_maxfev * dim,
                "initial_simplex": _initial_simplex(x0, kind, obj.nb),
                "xatol": 1e-6,
                "fatol": 1e-6,
            },
        )
        explored.append((res.fun, len(explored), res.x))
    explored.sort(key=lambda r: (r[0], r[1]))
    x_best = explored[0][2]
    res = minimize(
        obj,
        x_best,
        method="Nelder-Mead",
        options={
            "maxiter": options.maxiter,
            "maxfev": options.maxiter * 2 * (dim + 1),
            "xatol": options.xatol,
            "fatol": options.fatol,
            "initial_simplex": _initial_simplex(x_best, kind, obj.nb, scale=0.2),
            "adaptive": dim > 2,
        },
    )
    x = res.x if res.fun <= explored[0][0] else x_best
    base, t, pen = obj.decode(x)
    if options.canonicalize:
        base, t = canonicalize(base, t)
    ll = obj.loglik(base, t)
    if not np.isfinite(ll):
        raise NonPositiveDensityError(-1, 0.0)
    if t is not None and not validate_transform(t):
        raise InvalidCombinationError(f"optimizer returned an infeasible transform {t}")
    trace = OptimizerTrace(
        start_logliks=tuple(float(-r[0]) for r in sorted(explored, key=lambda r: r[1])),
        nfev=obj.nfev,
        nit=int(res.nit),
        message=str(res.message),
        seconds=time.perf_counter() - t_start,
    )
    converged = bool(res.success) and res.nit < options.maxiter
    return _make_result(base, t, ll, s.n, converged, trace)


# --------------------------------------------------------------------------
# selection


def default_grid():
    """15 transformed models followed by the 6 monotone baselines."""
    grid = [(f, k) for f in NONMONO_FAMILIES for k in TRANSFORM_KINDS]
    grid.extend((f, None) for f in BASELINE_FAMILIES)
    return grid


def _parse_cell(cell):
    family, kind = cell
    family = Family.parse(family)
    if kind is not None and str(getattr(kind, "value", kind)).lower() not in ("", "none"):
        kind = TransformKind.parse(kind)
    else:
        kind = None
    return family, kind


@dataclass(frozen=True)
class Selection:
    """Ranked fits; ``results[0]`` is the winner."""

    results: tuple
    criterion: str

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)

    def __getitem__(self, i):
        return self.results[i]

    @property
    def winner(self):
        return self.results[0]

    @property
    def failures(self):
        return tuple(r for r in self.results if not r.ok)

    def get(self, family, transform=None):
        family, transform = _parse_cell((family, transform))
        for r in self.results:
            if r.family is family and r.transform is transform:
                return r
        raise KeyError((family, transform))


def _failed(family, kind, n, exc):
    k = _base_dim(family) + (0 if kind is None else kind.n_params)
    return FitResult(
        family=family,
        transform=kind,
        model=None,
        estimates={},
        loglik=float("nan"),
        k=k,
        n=n,
        aic=float("nan"),
        bic=float("nan"),
        converged=False,
        error=f"{type(exc).__name__}: {exc}",
    )


def _fit_cell(args):
    family, kind, s, options, init = args
    try:
        return fit(family, kind, s, options, init=init)
    except (CopulaError, ArithmeticError, ValueError) as exc:
        return _failed(family, kind, s.n, exc)


def select(s, grid=None, criterion="aic", options=None, n_jobs=1):
    """Fit every cell of ``grid`` and rank by AIC or BIC.

    Parameters
    ----------
    s : PseudoSample
    grid : list of (family, transform kind or None), optional
        Defaults to :func:`default_grid`.
    criterion : {"aic", "bic"}
    options : FitOptions, optional
    n_jobs : int
        Worker processes.  Results are merged by grid position, so the
        outcome does not depend on ``n_jobs``.

    Returns
    -------
    Selection
        Successful fits sorted ascending by the criterion, failed cells last.

    Raises
    ------
    AllFitsFailedError
        If no cell could be fitted.
    """
    criterion = str(criterion).lower()
    if criterion not in ("aic", "bic"):
        raise ValueError("criterion must be 'aic' or 'bic'")
    cells = [_parse_cell(c) for c in (grid if grid is not None else default_grid())]
    if not cells:
        raise ValueError("empty model grid")
    options = options or FitOptions()

    # f1 fits first so they can seed the nested f2 and f3 fits
    order = sorted(range(len(cells)), key=lambda i: cells[i][1] is not TransformKind.F1)
    results = [None] * len(cells)
    f1_fits = {}

    def args_for(i):
        family, kind = cells[i]
        init = f1_fits.get(family) if kind in (TransformKind.F2, TransformKind.F3) else None
        return family, kind, s, options, init

    first = [i for i in order if cells[i][1] is TransformKind.F1]
    rest = [i for i in order if cells[i][1] is not TransformKind.F1]
    for batch in (first, rest):
        if n_jobs > 1 and len(batch) > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                out = list(pool.map(_fit_cell, [args_for(i) for i in batch]))
        else:
            out = [_fit_cell(args_for(i)) for i in batch]
        for i, r in zip(batch, out):
            results[i] = r
            if r.ok and r.transform is TransformKind.F1:
                f1_fits[r.family] = r

    ok = [(r.criterion(criterion), i, r) for i, r in enumerate(results) if r.ok]
    if not ok:
        raise AllFitsFailedError("; ".join(f"{r.label}: {r.error}" for r in results))
    ok.sort(key=lambda t: (t[0], t[1]))
    ranked = [replace(ok[0][2], winner=True)] + [r for _, _, r in ok[1:]]
    ranked += [r for r in results if not r.ok]
    return Selection(tuple(ranked), criterion)
