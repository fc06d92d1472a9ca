"""Pure numpy versions of the hot kernels, used when the extension is absent."""

import numpy as np


def cooccurrence(m):
    """Product x product count of countries exporting both products (diagonal = ubiquity)."""
    mf = np.ascontiguousarray(m, dtype=np.float64)
    # exact: integer counts far below 2**53
    return np.rint(mf.T @ mf).astype(np.int64)


def density_matrix(m, phi):
    """Density of every country around every product, self term excluded.

    Returns ``(omega, isolated)``.
    """
    m = np.asarray(m)
    phi = np.array(phi, dtype=np.float64, copy=True)
    if phi.shape != (m.shape[1], m.shape[1]):
        raise ValueError("proximity shape does not match M columns")
    np.fill_diagonal(phi, 0.0)
    den = phi.sum(axis=0)
    num = m.astype(np.float64) @ phi
    isolated = den <= 0.0
    safe = np.where(isolated, 1.0, den)
    omega = np.where(isolated[None, :], 0.0, num / safe)
    return omega, isolated
