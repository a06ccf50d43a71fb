"""scikit-learn style wrappers around the fitting functions."""

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from nmcopula import families as fam
from nmcopula._validation import check_bivariate, check_n_samples, seed_from_random_state
from nmcopula.copula import q_cdf, q_logpdf, q_sample
from nmcopula.estimation import FitOptions, PseudoSample, fit, select

__all__ = ["PseudoObservations", "NonMonotoneCopula", "MonotoneCopula", "CopulaSelector"]


class PseudoObservations(TransformerMixin, BaseEstimator):
    """Rank transform each column to ``#{x_j <= x} / (n + 1)``.

    ``fit`` stores the sorted training columns; ``transform`` evaluates the
    scaled empirical distribution function of the training data, so
    ``fit_transform`` returns the usual pseudo-observations.
    """

    def fit(self, X, y=None):
        X = check_bivariate(X)
        self.sorted_ = np.sort(X, axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "sorted_")
        X = check_bivariate(X)
        n = self.sorted_.shape[0]
        cols = [np.searchsorted(self.sorted_[:, j], X[:, j], side="right") for j in range(2)]
        return np.column_stack(cols) / (n + 1.0)


class _CopulaEstimator(DensityMixin, BaseEstimator):
    def _sample(self, X):
        X = check_bivariate(X)
        if self.rank_transform:
            return PseudoSample.from_data(X[:, 0], X[:, 1])
        check_bivariate(X, open_unit=True)
        return PseudoSample(X[:, 0], X[:, 1])

    def _options(self):
        return FitOptions(n_starts=self.n_starts, maxiter=self.max_iter, canonicalize=self.canonicalize)

    def _store(self, result):
        self.result_ = result
        self.model_ = result.model
        self.estimates_ = dict(result.estimates)
        self.loglik_ = result.loglik
        self.aic_ = result.aic
        self.bic_ = result.bic
        self.converged_ = result.converged
        self.n_features_in_ = 2
        return self

    def score(self, X, y=None):
        """Total log-likelihood of ``X`` (points in (0, 1)^2)."""
        return float(np.sum(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "model_")
        n = check_n_samples(n_samples)
        seed = seed_from_random_state(random_state)
        if isinstance(self.model_, fam.CopulaParams):
            return fam.sample(self.model_, n, seed)
        return q_sample(self.model_, n, seed)


class NonMonotoneCopula(_CopulaEstimator):
    """Copula ``C(u, f(v)) - C(u, f(v) - v)`` fitted by maximum likelihood.

    Parameters
    ----------
    family : str, default="frank"
        Base copula: ``frank``, ``clayton``, ``gumbel``, ``gaussian`` or ``t``.
    transform : str, default="f2"
        ``f1``, ``f2`` or ``f3``.
    rank_transform : bool, default=True
        Convert the columns of ``X`` to pseudo-observations before fitting.
        Set to False when ``X`` already lies in (0, 1).
    n_starts : int, default=5
    max_iter : int, default=2000
    canonicalize : bool, default=True

    Attributes
    ----------
    model_ : NonMonoCopula
    estimates_ : dict
    loglik_, aic_, bic_ : float
    converged_ : bool
    result_ : FitResult

    Examples
    --------
    >>> est = NonMonotoneCopula(family="frank", transform="f2").fit(X)  # doctest: +SKIP
    >>> est.estimates_  # doctest: +SKIP
    {'a': -0.16, 'c': 0.54, 'theta': 9.1}
    """

    def __init__(self, family="frank", transform="f2", rank_transform=True, n_starts=5, max_iter=2000,
                 canonicalize=True):
        self.family = family
        self.transform = transform
        self.rank_transform = rank_transform
        self.n_starts = n_starts
        self.max_iter = max_iter
        self.canonicalize = canonicalize

    def fit(self, X, y=None):
        s = self._sample(X)
        return self._store(fit(self.family, self.transform, s, self._options()))

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        X = check_bivariate(X, open_unit=True)
        return np.asarray(q_logpdf(self.model_, X[:, 0], X[:, 1]))

    def cdf(self, X):
        check_is_fitted(self, "model_")
        X = check_bivariate(X, unit=True)
        return np.asarray(q_cdf(self.model_, X[:, 0], X[:, 1]))

    def measure_map(self, x):
        """Evaluate the fitted measure-preserving map."""
        check_is_fitted(self, "model_")
        return self.model_.measure_map(x)


class MonotoneCopula(_CopulaEstimator):
    """One of the monotone baseline families fitted by maximum likelihood.

    Parameters
    ----------
    family : str, default="tawn1_rot90"
    rank_transform, n_starts, max_iter : see :class:`NonMonotoneCopula`
    """

    def __init__(self, family="tawn1_rot90", rank_transform=True, n_starts=5, max_iter=2000):
        self.family = family
        self.rank_transform = rank_transform
        self.n_starts = n_starts
        self.max_iter = max_iter

    def _options(self):
        return FitOptions(n_starts=self.n_starts, maxiter=self.max_iter)

    def fit(self, X, y=None):
        s = self._sample(X)
        return self._store(fit(self.family, None, s, self._options()))

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        X = check_bivariate(X, open_unit=True)
        return np.asarray(fam.logpdf(self.model_, X[:, 0], X[:, 1]))

    def cdf(self, X):
        check_is_fitted(self, "model_")
        X = check_bivariate(X, unit=True)
        return np.asarray(fam.cdf(self.model_, X[:, 0], X[:, 1]))


class CopulaSelector(BaseEstimator):
    """Fit a grid of copula models and keep the best by AIC or BIC.

    Parameters
    ----------
    grid : list of (family, transform or None), optional
        Defaults to the 15 transformed models plus 6 monotone baselines.
    criterion : {"aic", "bic"}, default="aic"
    rank_transform : bool, default=True
    n_jobs : int, default=1

    Attributes
    ----------
    selection_ : Selection
        All fits ranked by the criterion.
    best_ : FitResult
    """

    def __init__(self, grid=None, criterion="aic", rank_transform=True, n_jobs=1):
        self.grid = grid
        self.criterion = criterion
        self.rank_transform = rank_transform
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_bivariate(X)
        if self.rank_transform:
            s = PseudoSample.from_data(X[:, 0], X[:, 1])
        else:
            check_bivariate(X, open_unit=True)
            s = PseudoSample(X[:, 0], X[:, 1])
        self.selection_ = select(s, self.grid, self.criterion, n_jobs=self.n_jobs)
        self.best_ = self.selection_.winner
        self.n_features_in_ = 2
        return self
