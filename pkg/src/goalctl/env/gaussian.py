"""Gaussian helpers shared by the environments and the analysis oracles."""

import numpy as np
from scipy import linalg


def psd_sqrt(cov):
    """A factor ``S`` with ``S @ S.T == cov`` that tolerates singular covariances."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def is_pd(cov):
    try:
        np.linalg.cholesky(np.atleast_2d(cov))
        return True
    except np.linalg.LinAlgError:
        return False


def logpdf(residual, cov):
    """Log N(residual; 0, cov), batched over leading axes of ``residual``."""
    residual = np.asarray(residual, dtype=float)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    k = cov.shape[0]
    chol = np.linalg.cholesky(cov)
    flat = residual.reshape(-1, k)
    z = linalg.solve_triangular(chol, flat.T, lower=True)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    out = -0.5 * (maha + logdet + k * np.log(2.0 * np.pi))
    return out.reshape(residual.shape[:-1])


def peak_logpdf(cov):
    """Largest attainable log density, reached at the mean."""
    cov = np.atleast_2d(cov)
    return float(logpdf(np.zeros(cov.shape[0]), cov))
