# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the two pairwise hot loops.

Both functions mirror :mod:`prodspace._pykernels` exactly in their contract.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def cooccurrence(const unsigned char[:, ::1] m):
    """Product x product count of countries exporting both products.

    The diagonal holds ubiquity. Iterates each country's support list, so the
    cost is sum over countries of diversification**2 rather than C * P**2.
    """
    cdef Py_ssize_t nc = m.shape[0]
    cdef Py_ssize_t npr = m.shape[1]
    cdef Py_ssize_t c, p, a, b, i, k
    counts = np.zeros((npr, npr), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] cv = counts
    support = np.empty(npr, dtype=np.intp)
    cdef Py_ssize_t[::1] sv = support
    cdef cnp.int64_t *row

    with nogil:
        for c in range(nc):
            k = 0
            for p in range(npr):
                if m[c, p]:
                    sv[k] = p
                    k += 1
            for a in range(k):
                i = sv[a]
                row = &cv[i, 0]
                for b in range(a, k):
                    row[sv[b]] += 1
        for i in range(npr):
            for p in range(i + 1, npr):
                cv[p, i] = cv[i, p]
    return counts


def density_matrix(const unsigned char[:, ::1] m, const double[:, ::1] phi):
    """Density of every country around every product, self term excluded.

    Products whose off-diagonal proximity row sums to zero get density 0.
    Returns ``(omega, isolated)`` with ``isolated`` a boolean per product.
    Work is tiled over (country block, product column block) so the output
    tile stays in cache while proximity rows stream past it.
    """
    cdef Py_ssize_t nc = m.shape[0]
    cdef Py_ssize_t npr = m.shape[1]
    if phi.shape[0] != npr or phi.shape[1] != npr:
        raise ValueError("proximity shape does not match M columns")
    cdef Py_ssize_t cblock = 64, pblock = 512
    cdef Py_ssize_t c, c0, c1, j, p, p0, p1, bi, bj
    cdef double s

    den = np.zeros(npr, dtype=np.float64)
    cdef double[::1] dv = den
    omega = np.zeros((nc, npr), dtype=np.float64)
    cdef double[:, ::1] ov = omega
    cdef const double *prow
    cdef double *orow

    with nogil:
        for j in range(npr):
            prow = &phi[j, 0]
            for p in range(j):
                dv[p] += prow[p]
            for p in range(j + 1, npr):
                dv[p] += prow[p]
        for bi in range((nc + cblock - 1) // cblock):
            c0 = bi * cblock
            c1 = min(c0 + cblock, nc)
            for bj in range((npr + pblock - 1) // pblock):
                p0 = bj * pblock
                p1 = min(p0 + pblock, npr)
                for j in range(npr):
                    prow = &phi[j, 0]
                    for c in range(c0, c1):
                        if m[c, j]:
                            orow = &ov[c, 0]
                            # the self term phi[j, j] is skipped
                            for p in range(p0, min(j, p1)):
                                orow[p] += prow[p]
                            for p in range(max(j + 1, p0), p1):
                                orow[p] += prow[p]
        for c in range(nc):
            orow = &ov[c, 0]
            for p in range(npr):
                s = dv[p]
                if s > 0.0:
                    orow[p] = orow[p] / s
                else:
                    orow[p] = 0.0
    return omega, den <= 0.0
