"""Gaussian-process surrogate and expected improvement for discrete spaces."""

from __future__ import annotations

import itertools

import numpy as np
from scipy import linalg, optimize
from scipy.stats import norm

NOISE_FLOOR = 1e-6
LENGTHSCALE_GRID = (0.5, 1.0, 2.0, 4.0, 8.0)
NOISE_GRID = (1e-6, 1e-4, 1e-2, 1e-1)
LOG_BOUNDS = ((np.log(0.1), np.log(50.0)), (np.log(NOISE_FLOOR), np.log(1.0)))


def rbf(a: np.ndarray, b: np.ndarray, lengthscale: float) -> np.ndarray:
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2 * a @ b.T
    return np.exp(-0.5 * np.maximum(sq, 0.0) / lengthscale ** 2)


class GaussianProcess:
    """Zero-mean GP on standardized targets with an RBF kernel.

    Unit signal variance; lengthscale and noise variance maximize the log
    marginal likelihood, searched on a grid and refined from the best grid
    points with L-BFGS-B.
    """

    def __init__(self, refine_starts: int = 3):
        self.refine_starts = refine_starts
        self.lengthscale = 1.0
        self.noise = NOISE_FLOOR

    def _nll(self, log_params, X, y) -> float:
        ls, noise = np.exp(log_params)
        K = rbf(X, X, ls) + (noise + 1e-10) * np.eye(len(X))
        try:
            c = linalg.cho_factor(K, lower=True, check_finite=False)
        except linalg.LinAlgError:
            return 1e10
        alpha = linalg.cho_solve(c, y, check_finite=False)
        return float(0.5 * y @ alpha + np.log(np.diag(c[0])).sum() + 0.5 * len(y) * np.log(2 * np.pi))

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GaussianProcess":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.y_mean = y.mean()
        std = y.std()
        self.y_std = std if std > 0 else 1.0
        ys = (y - self.y_mean) / self.y_std
        grid = [(self._nll(np.log([ls, nz]), X, ys), ls, nz)
                for ls, nz in itertools.product(LENGTHSCALE_GRID, NOISE_GRID)]
        grid.sort()
        best = grid[0]
        for _, ls, nz in grid[: self.refine_starts]:
            res = optimize.minimize(self._nll, np.log([ls, nz]), args=(X, ys), method="L-BFGS-B",
                                    bounds=LOG_BOUNDS)
            if res.fun < best[0]:
                best = (float(res.fun), *np.exp(res.x))
        _, self.lengthscale, self.noise = best
        self.noise = max(self.noise, NOISE_FLOOR)
        self.X = X
        K = rbf(X, X, self.lengthscale) + self.noise * np.eye(len(X))
        self._chol = linalg.cho_factor(K, lower=True, check_finite=False)
        self._alpha = linalg.cho_solve(self._chol, ys, check_finite=False)
        self.y_best = ys.max()
        return self

    def predict(self, Xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Latent mean and standard deviation on the standardized scale."""
        Ks = rbf(np.asarray(Xs, dtype=float), self.X, self.lengthscale)
        mean = Ks @ self._alpha
        v = linalg.solve_triangular(self._chol[0], Ks.T, lower=True, check_finite=False)
        var = np.maximum(1.0 - (v * v).sum(0), 0.0)
        return mean, np.sqrt(var)

    def expected_improvement(self, Xs: np.ndarray) -> np.ndarray:
        mean, sd = self.predict(Xs)
        return expected_improvement(mean, sd, self.y_best)


def expected_improvement(mean: np.ndarray, sd: np.ndarray, best: float) -> np.ndarray:
    gain = mean - best
    out = np.maximum(gain, 0.0)
    pos = sd > 1e-12
    z = gain[pos] / sd[pos]
    out[pos] = gain[pos] * norm.cdf(z) + sd[pos] * norm.pdf(z)
    return np.maximum(out, 0.0)
