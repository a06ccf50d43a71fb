"""Copulas for non-monotone dependence.

``Q(u, v) = C(u, f(v)) - C(u, f(v) - v)`` for a base copula ``C`` and a
valid transform ``f``.  ``Q`` is the copula of ``(U, g(V))`` where ``(U, V)``
has copula ``C`` and ``g`` is the measure-preserving map generated by ``f``.
"""

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from nmcopula import families as fam
from nmcopula.exceptions import InvalidModelError, InvalidParametersError
from nmcopula.families import CopulaParams
from nmcopula.transforms import MeasureMap, TransformSpec, validate_transform

__all__ = [
    "NonMonoCopula",
    "q_cdf",
    "q_pdf",
    "q_logpdf",
    "q_rectangle_mass",
    "q_rectangle_mass_decomposed",
    "q_sample",
]


@dataclass(frozen=True)
class NonMonoCopula:
    """Base copula paired with a transform.

    Parameters
    ----------
    base : CopulaParams
    transform : TransformSpec

    Raises
    ------
    InvalidModelError
        If the transform does not satisfy the conditions that make ``Q`` a
        copula.
    """

    base: CopulaParams
    transform: TransformSpec

    def __post_init__(self):
        if not isinstance(self.base, CopulaParams):
            raise InvalidModelError("base must be a CopulaParams instance")
        if not isinstance(self.transform, TransformSpec):
            raise InvalidModelError("transform must be a TransformSpec instance")
        report = validate_transform(self.transform)
        if not report:
            raise InvalidModelError(f"invalid transform {self.transform}: {report}")

    @cached_property
    def measure_map(self):
        return MeasureMap((self.transform,), name=str(self.transform))

    @property
    def n_params(self):
        return self.base.n_params + self.transform.kind.n_params

    def cdf(self, u, v):
        return q_cdf(self, u, v)

    def pdf(self, u, v):
        return q_pdf(self, u, v)

    def logpdf(self, u, v):
        return q_logpdf(self, u, v)

    def rectangle_mass(self, u1, u2, v1, v2):
        return q_rectangle_mass(self, u1, u2, v1, v2)

    def sample(self, n, seed=None):
        return q_sample(self, n, seed)

    def to_dict(self):
        return {"base": self.base.as_dict(), "transform": self.transform.to_dict()}

    @classmethod
    def from_dict(cls, data):
        try:
            base = CopulaParams.from_dict(data["base"])
            transform = TransformSpec.from_dict(data["transform"])
        except KeyError as exc:
            raise InvalidModelError(f"missing key {exc} in model description") from None
        return cls(base, transform)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _unit(u, v):
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if np.any(np.isnan(u) | np.isnan(v)) or np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
        raise ValueError("arguments must lie in [0, 1]")
    return u, v


def q_cdf(q, u, v):
    """``C(u, f(v)) - C(u, f(v) - v)`` with exact boundary values."""
    u, v = _unit(u, v)
    t = q.transform
    fv = np.clip(t(v), 0.0, 1.0)
    ev = np.clip(t.excess(v), 0.0, 1.0)
    out = fam.cdf(q.base, u, fv) - fam.cdf(q.base, u, ev)
    out = np.clip(out, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v))
    out = np.where(v >= 1, u, np.where(u >= 1, v, out))
    out = np.where((u <= 0) | (v <= 0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def q_logpdf(q, u, v):
    """Log density ``log(c(u, f) f' + c(u, f - v) (1 - f'))``.

    ``f'`` is the right derivative, so kinks of piecewise transforms are
    handled without error.  The base density is only evaluated where its
    weight is positive, which keeps boundary arguments out of it.
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    fam._check_open(u, v)
    t = q.transform
    fv = t(v)
    ev = t.excess(v)
    w = np.clip(t.derivative(v), 0.0, 1.0)
    out = np.full(u.shape, -np.inf)
    on_f = w > 0
    on_e = w < 1
    with np.errstate(divide="ignore"):
        if np.any(on_f):
            lf = np.full(u.shape, -np.inf)
            lf[on_f] = np.log(w[on_f]) + fam.logpdf_clipped(q.base, u[on_f], fv[on_f])
            out = lf
        if np.any(on_e):
            le = np.full(u.shape, -np.inf)
            le[on_e] = np.log1p(-w[on_e]) + fam.logpdf_clipped(q.base, u[on_e], ev[on_e])
            out = np.logaddexp(out, le)
    return out[()] if out.ndim == 0 else out


def q_pdf(q, u, v):
    """Density of ``Q`` for ``u, v`` strictly inside (0, 1)."""
    return np.exp(q_logpdf(q, u, v))


def _check_rect(u1, u2, v1, v2):
    u1, u2, v1, v2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (u1, u2, v1, v2)))
    if np.any(u1 > u2) or np.any(v1 > v2):
        raise InvalidParametersError("rectangle corners must satisfy u1 <= u2 and v1 <= v2")
    return u1, u2, v1, v2


def q_rectangle_mass(q, u1, u2, v1, v2):
    """``V_Q([u1, u2] x [v1, v2])`` from the four corner values of ``q_cdf``."""
    u1, u2, v1, v2 = _check_rect(u1, u2, v1, v2)
    return q_cdf(q, u2, v2) - q_cdf(q, u2, v1) - q_cdf(q, u1, v2) + q_cdf(q, u1, v1)


def q_rectangle_mass_decomposed(q, u1, u2, v1, v2):
    """``V_Q`` as a sum of two base-copula masses.

    ``V_C([u1, u2] x [f(v2) - v2, f(v1) - v1]) + V_C([u1, u2] x [f(v1), f(v2)])``;
    both terms are non-negative for a valid transform.
    """
    u1, u2, v1, v2 = _check_rect(u1, u2, v1, v2)
    t = q.transform
    e1 = np.clip(t.excess(v1), 0.0, 1.0)
    e2 = np.clip(t.excess(v2), 0.0, 1.0)
    f1 = np.clip(t(v1), 0.0, 1.0)
    f2 = np.clip(t(v2), 0.0, 1.0)
    lower = fam.rectangle_mass(q.base, u1, u2, e2, e1)
    upper = fam.rectangle_mass(q.base, u1, u2, f1, f2)
    return lower + upper


def q_sample(q, n, seed=None):
    """Draw ``(U, g(V))`` with ``(U, V)`` from the base copula.

    Returns an array of shape ``(n, 2)``; equal seeds give identical output.
    """
    uv = fam.sample(q.base, n, seed)
    return np.column_stack([uv[:, 0], q.measure_map(uv[:, 1])])
