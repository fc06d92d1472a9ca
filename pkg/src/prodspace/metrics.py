"""RCA, the M matrix, proximity, density and product sophistication.

Notation follows the usual Product Space literature: ``x_cp`` exports,
``M_cp`` binary comparative advantage, ``phi_ij`` proximity, ``omega_cp``
density, ``k_{c,N}``/``k_{p,N}`` the method-of-reflections sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from prodspace import kernels
from prodspace.trade_data import ExportMatrix

DEFAULT_REFLECTIONS = 18


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RcaMatrix:
    countries: tuple[str, ...]
    products: tuple[str, ...]
    values: np.ndarray
    empty_countries: tuple[str, ...] = ()
    empty_products: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))

    def row(self, country: str) -> np.ndarray:
        try:
            return self.values[self.countries.index(country)]
        except ValueError:
            raise KeyError(f"unknown country {country!r}") from None


@dataclass(frozen=True, eq=False)
class MMatrix:
    countries: tuple[str, ...]
    products: tuple[str, ...]
    bits: np.ndarray
    threshold: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "bits", _frozen(np.ascontiguousarray(self.bits, dtype=np.uint8)))

    def row(self, country: str) -> np.ndarray:
        try:
            return self.bits[self.countries.index(country)]
        except ValueError:
            raise KeyError(f"unknown country {country!r}") from None


@dataclass(frozen=True, eq=False)
class ProximityMatrix:
    products: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.ascontiguousarray(self.values, dtype=np.float64)))

    def reindex(self, products: Sequence[str]) -> "ProximityMatrix":
        """Realign onto another product ordering; unknown products get zero rows."""
        products = tuple(products)
        out = np.zeros((len(products), len(products)))
        pos = {p: i for i, p in enumerate(self.products)}
        dst = [i for i, p in enumerate(products) if p in pos]
        src = [pos[products[i]] for i in dst]
        out[np.ix_(dst, dst)] = self.values[np.ix_(src, src)]
        return ProximityMatrix(products, out)


@dataclass(frozen=True, eq=False)
class DensityVector:
    country: str
    products: tuple[str, ...]
    values: np.ndarray
    isolated: np.ndarray


@dataclass(frozen=True, eq=False)
class ReflectionsState:
    """``k_country[N]`` and ``k_product[N]`` for N = 0..iterations.

    Only countries/products with non-zero degree take part; their positions
    in the original matrix are in ``country_index``/``product_index``.
    """

    k_country: np.ndarray
    k_product: np.ndarray
    country_index: np.ndarray
    product_index: np.ndarray

    @property
    def iterations(self) -> int:
        return self.k_country.shape[0] - 1


@dataclass(frozen=True, eq=False)
class SophisticationVector:
    products: tuple[str, ...]
    values: np.ndarray
    iterations: int
    degenerate: bool = False
    # Spearman correlation of k_{p,N} against k_{p,N-2}; 1.0 means the ranking is settled
    convergence: float = float("nan")
    meta: dict = field(default_factory=dict)

    def get(self, product: str) -> float:
        return float(self.values[self.products.index(product)])


def rca_values(x: np.ndarray) -> np.ndarray:
    """Balassa index on a raw array; zero-total rows and columns give zeros."""
    x = np.asarray(x, dtype=np.float64)
    world = x.sum()
    if not world > 0:
        raise ValueError("RCA undefined: world export total is zero")
    country_tot = x.sum(axis=1)
    product_tot = x.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = x / country_tot[:, None]
        world_share = product_tot / world
        out = share / world_share[None, :]
    out[~np.isfinite(out)] = 0.0
    out[country_tot == 0, :] = 0.0
    out[:, product_tot == 0] = 0.0
    return out


def rca(m: ExportMatrix) -> RcaMatrix:
    v = m.values
    ct = v.sum(axis=1)
    pt = v.sum(axis=0)
    return RcaMatrix(
        m.countries,
        m.products,
        rca_values(v),
        tuple(c for c, t in zip(m.countries, ct) if t == 0),
        tuple(p for p, t in zip(m.products, pt) if t == 0),
    )


@dataclass(frozen=True, eq=False)
class ShareVector:
    country: str
    products: tuple[str, ...]
    values: np.ndarray
    empty: bool


def export_shares(m: ExportMatrix, country: str) -> ShareVector:
    row = m.row(country)
    total = row.sum()
    if total == 0:
        return ShareVector(country, m.products, np.zeros_like(row), True)
    return ShareVector(country, m.products, row / total, False)


def binarize(r: RcaMatrix, threshold: float = 1.0) -> MMatrix:
    if not threshold > 0:
        raise ValueError("binarization threshold must be positive")
    return MMatrix(r.countries, r.products, r.values >= threshold, threshold)


def diversification(m: MMatrix) -> np.ndarray:
    return m.bits.sum(axis=1, dtype=np.int64)


def ubiquity(m: MMatrix) -> np.ndarray:
    return m.bits.sum(axis=0, dtype=np.int64)


def proximity_from_counts(counts: np.ndarray) -> np.ndarray:
    """phi_ij = co-exporters / max(ubiquity_i, ubiquity_j), 0 where either is 0."""
    u = np.diagonal(counts).astype(np.float64)
    out = np.empty(counts.shape, dtype=np.float64)
    # row blocks keep the temporaries small on 5000 x 5000 inputs
    step = 512
    for start in range(0, len(u), step):
        stop = min(start + step, len(u))
        denom = np.maximum(u[start:stop, None], u[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            block = counts[start:stop] / denom
        block[denom == 0] = 0.0
        out[start:stop] = block
    if len(u):
        np.fill_diagonal(out, 1.0)
    return out


def proximity(m: MMatrix) -> ProximityMatrix:
    """Minimum of the two conditional co-export probabilities; diagonal stored as 1."""
    counts = kernels.cooccurrence(m.bits)
    return ProximityMatrix(m.products, proximity_from_counts(counts))


def average_proximity(mats: Sequence[ProximityMatrix]) -> ProximityMatrix:
    """Element-wise mean over years, realigned on the union of product codes.

    A product missing from a year contributes zeros for that year.
    """
    if not mats:
        raise ValueError("average_proximity needs at least one matrix")
    products = tuple(sorted(set().union(*(p.products for p in mats))))
    acc = np.zeros((len(products), len(products)))
    for p in mats:
        acc += p.values if p.products == products else p.reindex(products).values
    acc /= len(mats)
    np.fill_diagonal(acc, 1.0)
    return ProximityMatrix(products, acc)


def pooled_proximity(matrices: Sequence[ExportMatrix], threshold: float = 1.0) -> ProximityMatrix:
    """Alternative path: proximity from RCA on exports summed across years."""
    if not matrices:
        raise ValueError("pooled_proximity needs at least one matrix")
    countries = sorted(set().union(*(m.countries for m in matrices)))
    products = sorted(set().union(*(m.products for m in matrices)))
    total = sum(m.reindex(countries, products).values for m in matrices)
    pooled = ExportMatrix(matrices[-1].year, tuple(countries), tuple(products), total)
    return proximity(binarize(rca(pooled), threshold))


def _aligned(phi: ProximityMatrix, products: Sequence[str]) -> ProximityMatrix:
    return phi if tuple(products) == phi.products else phi.reindex(products)


def density(m_row, phi: ProximityMatrix, country: str = "") -> DensityVector:
    """omega_p = sum_{j != p} M_j phi_pj / sum_{j != p} phi_pj for one M row."""
    row = np.ascontiguousarray(np.asarray(m_row, dtype=np.uint8).reshape(1, -1))
    omega, isolated = kernels.density_matrix(row, phi.values)
    return DensityVector(country, phi.products, _frozen(omega[0]), _frozen(isolated))


def density_all(m: MMatrix, phi: ProximityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Density for every country at once; returns (omega[c, p], isolated[p])."""
    phi = _aligned(phi, m.products)
    return kernels.density_matrix(m.bits, phi.values)


def reflections(m: MMatrix, iterations: int = DEFAULT_REFLECTIONS) -> ReflectionsState:
    """Method of reflections on M after dropping empty rows and columns.

    k_{c,N} = (1/k_{c,0}) sum_p M_cp k_{p,N-1}
    k_{p,N} = (1/k_{p,0}) sum_c M_cp k_{c,N-1}
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    bits = m.bits
    ci = np.flatnonzero(bits.sum(axis=1))
    pi = np.flatnonzero(bits.sum(axis=0))
    # removing empty columns cannot empty a row and vice versa, so one pass suffices
    mm = bits[np.ix_(ci, pi)].astype(np.float64)
    if mm.size == 0:
        raise ValueError("M matrix is empty after removing zero rows/columns")
    kc0 = mm.sum(axis=1)
    kp0 = mm.sum(axis=0)
    kc = np.empty((iterations + 1, len(ci)))
    kp = np.empty((iterations + 1, len(pi)))
    kc[0], kp[0] = kc0, kp0
    for n in range(1, iterations + 1):
        kc[n] = (mm @ kp[n - 1]) / kc0
        kp[n] = (mm.T @ kc[n - 1]) / kp0
    return ReflectionsState(kc, kp, ci, pi)


def sophistication(m: MMatrix, iterations: int = DEFAULT_REFLECTIONS) -> SophisticationVector:
    """z-scored k_{p,N}, oriented to correlate non-negatively with k_{p,1}.

    Uses the population standard deviation over products with non-zero
    ubiquity; other products get NaN. Zero variance yields zeros and
    ``degenerate=True``.

    Rows and columns are put in label order first, so every floating-point
    sum runs in the same order whatever the input ordering.
    """
    rows = np.argsort(np.asarray(m.countries, dtype=object), kind="stable")
    cols = np.argsort(np.asarray(m.products, dtype=object), kind="stable")
    canon = MMatrix(
        tuple(m.countries[i] for i in rows), tuple(m.products[j] for j in cols), m.bits[np.ix_(rows, cols)], m.threshold
    )
    state = reflections(canon, max(iterations, 1))
    kp = state.k_product[iterations]
    out = np.full(len(m.products), np.nan)
    mean = kp.mean()
    sd = kp.std()
    if not sd > 1e-12 * max(abs(mean), 1.0):
        out[cols[state.product_index]] = 0.0
        return SophisticationVector(m.products, _frozen(out), iterations, degenerate=True)
    z = (kp - mean) / sd
    ref = state.k_product[1]
    if ref.std() > 0 and np.dot(z, ref - ref.mean()) < 0:
        z = -z
    out[cols[state.product_index]] = z
    conv = float("nan")
    if iterations >= 2:
        conv = float(stats.spearmanr(kp, state.k_product[iterations - 2]).statistic)
    return SophisticationVector(m.products, _frozen(out), iterations, convergence=conv)
