"""Shared numerical machinery: PCA, regression, correlations, tests.

All routines are pure and deterministic.  Correlations return ``nan`` as the
explicit undefined marker when an input has zero variance; callers decide how
to treat such trials.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .core import DataValidationError, NumericalError


@dataclass(frozen=True)
class PcaModel:
    """Column mean, top right singular vectors, and projection variances."""

    mean: np.ndarray                # (d,)
    basis: np.ndarray               # (d, k_prime), column-orthonormal
    explained_variance: np.ndarray  # (k_prime,), nonincreasing
    k_prime: int


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    intercept: float

    def predict(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return z @ self.weights + self.intercept


def pca_fit(x: np.ndarray, k_prime: int) -> PcaModel:
    """PCA of the centered rows of ``x``, keeping at most ``k_prime`` components.

    The effective component count is clamped to the numerical rank of the
    centered matrix (at most n-1) with a warning.  When d >> n the n x n Gram
    matrix is decomposed instead of the d x d covariance, which is the only
    tractable exact route at d ~ 7e4.  Sign convention: each basis column's
    largest-magnitude entry is nonnegative.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DataValidationError(f"expected a 2-D matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise DataValidationError(f"PCA needs n >= 2 samples, got {n}")
    if d < 1 or k_prime < 1:
        raise DataValidationError("need d >= 1 and k_prime >= 1")

    mean = x.mean(axis=0)
    xc = x - mean
    eps = np.finfo(np.float64).eps
    if d > n:
        gram = xc @ xc.T
        evals, u = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        u = u[:, order]
        s = np.sqrt(np.clip(evals, 0.0, None))
        # Gram eigenvalues of exact-zero directions carry O(eps * lambda_max)
        # noise, so rank detection must threshold on the eigenvalue scale.
        tol_e = max(n, d) * eps * (evals[0] if evals.size else 0.0)
        rank = int(np.sum(evals > max(tol_e, 0.0)))
        v = None
    else:
        u, s, vt = np.linalg.svd(xc, full_matrices=False)
        v = vt.T
        tol = max(n, d) * eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > tol))
    k_eff = min(k_prime, rank)
    if k_eff < k_prime:
        warnings.warn(
            f"k_prime={k_prime} clamped to rank {k_eff} of the centered matrix",
            stacklevel=2,
        )
    if v is None:
        basis = xc.T @ u[:, :k_eff] / s[:k_eff]
    else:
        basis = v[:, :k_eff].copy()

    # sign convention: largest-magnitude entry of each column is nonnegative
    for j in range(k_eff):
        i = int(np.argmax(np.abs(basis[:, j])))
        if basis[i, j] < 0:
            basis[:, j] = -basis[:, j]

    explained = s[:k_eff] ** 2 / (n - 1)
    return PcaModel(mean=mean, basis=basis, explained_variance=explained,
                    k_prime=k_eff)


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project rows of ``x`` onto the basis: (x - mean) @ basis."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.mean.shape[0]:
        raise DataValidationError(
            f"dimension mismatch: {x.shape[1]} vs model {model.mean.shape[0]}"
        )
    z = (x - model.mean) @ model.basis
    return z[0] if single else z


def linreg_fit(z: np.ndarray, y: np.ndarray) -> LinearModel:
    """Minimum-norm least squares for weights and intercept (pseudo-inverse)."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if z.ndim != 2 or y.ndim != 1 or z.shape[0] != y.shape[0]:
        raise DataValidationError(
            f"bad regression shapes: z {z.shape}, y {y.shape}"
        )
    if z.shape[0] < 1:
        raise DataValidationError("need at least one sample")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))):
        raise DataValidationError("non-finite regression inputs")
    aug = np.hstack([z, np.ones((z.shape[0], 1))])
    theta, *_ = np.linalg.lstsq(aug, y, rcond=None)
    return LinearModel(weights=theta[:-1], intercept=float(theta[-1]))


def _rank_average(v: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values receive the average of their ranks."""
    v = np.asarray(v, dtype=np.float64)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size, dtype=np.float64)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _check_pair(x, y, min_len):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DataValidationError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < min_len:
        raise DataValidationError(f"need at least {min_len} samples")
    return x, y


def plcc(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; nan when either input has zero variance."""
    x, y = _check_pair(x, y, 2)
    xd = x - x.mean()
    yd = y - y.mean()
    nx = np.linalg.norm(xd)
    ny = np.linalg.norm(yd)
    if nx == 0.0 or ny == 0.0:
        return float("nan")
    return float(np.clip(np.dot(xd, yd) / (nx * ny), -1.0, 1.0))


def srocc(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman rank correlation with average ranks for ties; nan if degenerate."""
    x, y = _check_pair(x, y, 2)
    return plcc(_rank_average(x), _rank_average(y))


def rmse(x: np.ndarray, y: np.ndarray) -> float:
    x, y = _check_pair(x, y, 1)
    return float(np.sqrt(np.mean((x - y) ** 2)))


@dataclass(frozen=True)
class LogisticFit:
    """Fitted monotone map from objective scores to predicted MOS.

    q(s) = (b1 - b2) / (1 + exp(-(s - b3) / |b4|)) + b2, or an affine
    fallback when the logistic fit fails or does worse than affine.
    """

    beta: np.ndarray | None
    affine: tuple[float, float] | None
    fallback: bool

    def __call__(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if self.beta is not None:
            return _logistic4(self.beta, s)
        slope, intercept = self.affine
        return slope * s + intercept


def _logistic4(beta: np.ndarray, s: np.ndarray) -> np.ndarray:
    b1, b2, b3, b4 = beta
    scale = abs(b4) if abs(b4) > 1e-12 else 1e-12
    t = np.clip((s - b3) / scale, -500.0, 500.0)
    return (b1 - b2) / (1.0 + np.exp(-t)) + b2


def fit_logistic(scores: np.ndarray, mos: np.ndarray) -> LogisticFit:
    """Fit the 4-parameter monotone logistic by damped nonlinear least squares.

    Initialization: b1 = max(mos), b2 = min(mos), b3 = median(scores),
    b4 = std(scores)/4.  Falls back to the least-squares affine fit (with the
    ``fallback`` flag set) when the optimizer fails or the logistic residual
    exceeds the affine residual.
    """
    scores, mos = _check_pair(scores, mos, 5)
    if not (np.all(np.isfinite(scores)) and np.all(np.isfinite(mos))):
        raise DataValidationError("non-finite fit inputs")

    affine_model = linreg_fit(scores[:, None], mos)
    affine = (float(affine_model.weights[0]), affine_model.intercept)
    sse_affine = float(np.sum((affine_model.predict(scores[:, None]) - mos) ** 2))

    spread = float(np.std(scores))
    if spread == 0.0:
        return LogisticFit(beta=None, affine=affine, fallback=True)

    x0 = np.array([mos.max(), mos.min(), float(np.median(scores)), spread / 4.0])
    try:
        res = optimize.least_squares(
            lambda b: _logistic4(b, scores) - mos, x0, method="lm", max_nfev=10000
        )
        converged = res.status > 0
    except (ValueError, RuntimeError):
        converged = False
    if not converged:
        return LogisticFit(beta=None, affine=affine, fallback=True)
    sse_logistic = float(np.sum(res.fun ** 2))
    if sse_logistic > sse_affine:
        return LogisticFit(beta=None, affine=affine, fallback=True)
    return LogisticFit(beta=res.x, affine=affine, fallback=False)


def _double_center(dist: np.ndarray) -> np.ndarray:
    row = dist.mean(axis=1, keepdims=True)
    col = dist.mean(axis=0, keepdims=True)
    return dist - row - col + dist.mean()


def distance_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Sample distance correlation between row samples of x and y, in [0, 1].

    Pairwise Euclidean distance matrices are double-centered; dCov^2 is the
    mean of their elementwise product and dCor = dCov / sqrt(dVar_x dVar_y),
    with 0 when either dVar is 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0]:
        raise DataValidationError("x and y need the same number of samples")
    n = x.shape[0]
    if n < 4:
        raise DataValidationError(f"need n >= 4 samples, got {n}")

    a = _double_center(_pairwise_distances(x))
    b = _double_center(_pairwise_distances(y))
    dvar_x = (a * a).mean()
    dvar_y = (b * b).mean()
    if dvar_x <= 0.0 or dvar_y <= 0.0:
        return 0.0
    dcov2 = max((a * b).mean(), 0.0)
    return float(np.sqrt(np.clip(dcov2 / np.sqrt(dvar_x * dvar_y), 0.0, 1.0)))


def _pairwise_distances(m: np.ndarray) -> np.ndarray:
    from scipy.spatial.distance import cdist

    return cdist(m, m)


def welch_t_test(a: np.ndarray, b: np.ndarray, tail: str = "two") -> float:
    """Welch's unequal-variance t-test p-value.

    ``tail="two"`` tests mean(a) != mean(b); ``tail="greater"`` tests
    mean(a) > mean(b).  The p-value comes from the regularized incomplete
    beta function with Welch-Satterthwaite degrees of freedom.
    """
    if tail not in ("two", "greater"):
        raise DataValidationError(f"unknown tail {tail!r}")
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise DataValidationError("each group needs >= 2 samples")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0.0:
        raise NumericalError("degenerate variance: both groups constant")
    t = (a.mean() - b.mean()) / np.sqrt(se2)
    dof = se2 ** 2 / (sa ** 2 / (na - 1) + sb ** 2 / (nb - 1))
    p_two = float(special.betainc(dof / 2.0, 0.5, dof / (dof + t * t)))
    if tail == "two":
        return p_two
    return p_two / 2.0 if t > 0 else 1.0 - p_two / 2.0
