"""Per-country views of the Product Space and the country tables."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from prodspace.metrics import DensityVector, ProximityMatrix, RcaMatrix, SophisticationVector, density, rca
from prodspace.trade_data import ExportMatrix, ProductRegistry

STRONG_RCA = 1.0
MARGINAL_RCA = 0.1
DEFAULT_OPPORTUNITY_CUTOFF = 0.1


class Tier(str, enum.Enum):
    STRONG = "Strong"
    MARGINAL = "Marginal"
    ABSENT = "Absent"


class Growth(str, enum.Enum):
    INCREASED = "Increased"
    DECREASED = "Decreased"
    FLAT = "Flat"


class SortKey(str, enum.Enum):
    BY_VALUE = "value"
    BY_RCA = "rca"


@dataclass(frozen=True)
class NodeAnnotation:
    product: str
    tier: Tier
    size_value: float | None = None
    growth: Growth | None = None
    decile: int | None = None

    def as_dict(self) -> dict:
        return {
            "product": self.product,
            "tier": self.tier.value,
            "size_value": self.size_value,
            "growth": self.growth.value if self.growth is not None else None,
            "decile": self.decile,
        }


def tier_for(value: float) -> Tier:
    if value >= STRONG_RCA:
        return Tier.STRONG
    if value >= MARGINAL_RCA:
        return Tier.MARGINAL
    return Tier.ABSENT


def _align(src_codes: Sequence[str], src_values, dst_codes: Sequence[str], fill: float = 0.0) -> np.ndarray:
    src_values = np.asarray(src_values, dtype=np.float64)
    if tuple(src_codes) == tuple(dst_codes):
        return src_values
    pos = {c: i for i, c in enumerate(src_codes)}
    return np.array([src_values[pos[c]] if c in pos else fill for c in dst_codes])


def _country_row(codes: Sequence[str], values: np.ndarray, country: str, what: str) -> np.ndarray:
    try:
        return values[list(codes).index(country)]
    except ValueError:
        raise KeyError(f"unknown country {country!r} in {what}") from None


def rca_view(country: str, r: RcaMatrix) -> list[NodeAnnotation]:
    row = _country_row(r.countries, r.values, country, "RCA matrix")
    return [NodeAnnotation(p, tier_for(v)) for p, v in zip(r.products, row.tolist())]


def export_value_view(country: str, x0: ExportMatrix, x1: ExportMatrix) -> list[NodeAnnotation]:
    """Node size = year-1 exports; growth compares year 1 against year 0 in nominal terms."""
    row1 = _country_row(x1.countries, x1.values, country, f"{x1.year} exports")
    r1 = rca(x1).row(country)
    if country in x0.countries:
        row0 = _align(x0.products, x0.row(country), x1.products)
    else:
        row0 = np.zeros(len(x1.products))
    out = []
    for p, a, b, rv in zip(x1.products, row0.tolist(), row1.tolist(), r1.tolist()):
        growth = Growth.INCREASED if b > a else Growth.DECREASED if b < a else Growth.FLAT
        out.append(NodeAnnotation(p, tier_for(rv), size_value=b, growth=growth))
    return out


def rank_deciles(n: int) -> list[int]:
    """Decile (1..10) for ranks 0..n-1.

    With n >= 10 the ranks are split into ten groups whose sizes differ by at
    most one. With fewer than ten items the ranks are spread evenly over
    1..10 so the first is decile 1 and the last decile 10.
    """
    if n <= 0:
        return []
    if n == 1:
        return [1]
    if n < 10:
        return [1 + (r * 9) // (n - 1) for r in range(n)]
    return [1 + (r * 10) // n for r in range(n)]


def _density_order(codes: Sequence[str], key: Sequence[float]) -> list[int]:
    return sorted(range(len(codes)), key=lambda i: (-key[i], codes[i]))


def opportunities_view(
    country: str,
    dens: DensityVector,
    r: RcaMatrix,
    cutoff: float = DEFAULT_OPPORTUNITY_CUTOFF,
) -> list[NodeAnnotation]:
    """Tier every product and give RCA < cutoff products a density decile (1 = densest)."""
    rrow = _align(r.products, _country_row(r.countries, r.values, country, "RCA matrix"), dens.products)
    eligible = [i for i, v in enumerate(rrow.tolist()) if v < cutoff]
    codes = [dens.products[i] for i in eligible]
    key = [float(dens.values[i]) for i in eligible]
    order = _density_order(codes, key)
    deciles = {codes[k]: d for k, d in zip(order, rank_deciles(len(order)))}
    return [
        NodeAnnotation(p, tier_for(v), decile=deciles.get(p))
        for p, v in zip(dens.products, rrow.tolist())
    ]


# ------------------------------------------------------------------ tables


@dataclass(frozen=True)
class TableRow:
    rank: int
    product: str
    name: str
    rca_y0: float
    rca_y1: float
    exports_y0: float
    exports_y1: float
    share_y1: float
    density: float
    sophistication: float


@dataclass(frozen=True)
class _CountryColumns:
    products: tuple[str, ...]
    rca0: np.ndarray
    rca1: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    share: np.ndarray
    dens: np.ndarray
    soph: np.ndarray


def _columns(country, products, rca0, rca1, x0, x1, dens, soph) -> _CountryColumns:
    def row_of(mat):
        if mat is None or country not in mat.countries:
            return np.zeros(len(products))
        return _align(mat.products, mat.values[mat.countries.index(country)], products)

    x1_row = row_of(x1)
    total = x1_row.sum()
    share = x1_row / total if total > 0 else np.zeros(len(products))
    return _CountryColumns(
        products=tuple(products),
        rca0=row_of(rca0),
        rca1=row_of(rca1),
        x0=row_of(x0),
        x1=x1_row,
        share=share,
        dens=_align(dens.products, dens.values, products) if dens is not None else np.zeros(len(products)),
        soph=_align(soph.products, soph.values, products, fill=math.nan) if soph is not None else np.full(len(products), math.nan),
    )


def _rows(cols: _CountryColumns, order: Sequence[int], registry: ProductRegistry | None) -> list[TableRow]:
    out = []
    for rank, i in enumerate(order, start=1):
        code = cols.products[i]
        out.append(
            TableRow(
                rank=rank,
                product=code,
                name=registry.name(code) if registry is not None else "",
                rca_y0=float(cols.rca0[i]),
                rca_y1=float(cols.rca1[i]),
                exports_y0=float(cols.x0[i]),
                exports_y1=float(cols.x1[i]),
                share_y1=float(cols.share[i]),
                density=float(cols.dens[i]),
                sophistication=float(cols.soph[i]),
            )
        )
    return out


def top_exports_table(
    country: str,
    rca0: RcaMatrix | None,
    rca1: RcaMatrix,
    x0: ExportMatrix | None,
    x1: ExportMatrix,
    dens: DensityVector | None,
    soph: SophisticationVector | None,
    sort: SortKey | str = SortKey.BY_VALUE,
    n: int = 30,
    registry: ProductRegistry | None = None,
) -> list[TableRow]:
    """Top ``n`` exports by year-1 value or year-1 RCA; ties by HS code ascending."""
    if n <= 0:
        raise ValueError("n must be positive")
    sort = SortKey(sort)
    if country not in x1.countries:
        raise KeyError(f"unknown country {country!r}")
    cols = _columns(country, x1.products, rca0, rca1, x0, x1, dens, soph)
    key = (cols.x1 if sort is SortKey.BY_VALUE else cols.rca1).tolist()
    order = sorted(range(len(cols.products)), key=lambda i: (-key[i], cols.products[i]))
    return _rows(cols, order[:n], registry)


def opportunity_table(
    country: str,
    dens: DensityVector,
    r: RcaMatrix,
    soph: SophisticationVector | None,
    n: int = 30,
    require_soph_above_avg: bool = False,
    *,
    cutoff: float = DEFAULT_OPPORTUNITY_CUTOFF,
    rca0: RcaMatrix | None = None,
    x0: ExportMatrix | None = None,
    x1: ExportMatrix | None = None,
    registry: ProductRegistry | None = None,
) -> list[TableRow]:
    """Products with RCA < cutoff by descending density (optionally sophistication > 0)."""
    if n <= 0:
        raise ValueError("n must be positive")
    cols = _columns(country, dens.products, rca0, r, x0, x1, dens, soph)
    if country not in r.countries:
        raise KeyError(f"unknown country {country!r}")
    keep = [
        i
        for i in range(len(cols.products))
        if cols.rca1[i] < cutoff and (not require_soph_above_avg or cols.soph[i] > 0)
    ]
    order = sorted(keep, key=lambda i: (-cols.dens[i], cols.products[i]))
    return _rows(cols, order[:n], registry)


def table_header(year0: int, year1: int) -> list[str]:
    return [
        "RANK",
        "Product Code (HS-6)",
        "Product Name",
        f"RCA {year0}",
        f"RCA {year1}",
        f"Exports {year0}",
        f"Exports {year1}",
        f"Export Share {year1}",
        "Density",
        "Sophistication",
    ]


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def table_csv(rows: Sequence[TableRow], year0: int, year1: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table_header(year0, year1))
    for r in rows:
        w.writerow(
            [
                r.rank,
                r.product,
                r.name,
                _fmt(r.rca_y0),
                _fmt(r.rca_y1),
                _fmt(r.exports_y0),
                _fmt(r.exports_y1),
                f"{100 * r.share_y1:.2f}%",
                _fmt(r.density),
                _fmt(r.sophistication),
            ]
        )
    return buf.getvalue()


# ----------------------------------------------------------------- scatter


@dataclass(frozen=True)
class ScatterPoint:
    product: str
    density: float
    sophistication: float
    owner: str


def density_sophistication_scatter(
    owners: Sequence[tuple[str, np.ndarray]],
    phi: ProximityMatrix,
    soph: SophisticationVector,
    cutoff: float = DEFAULT_OPPORTUNITY_CUTOFF,
    rca_threshold: float = STRONG_RCA,
) -> list[ScatterPoint]:
    """One point per (owner, product with RCA < cutoff).

    Each owner is ``(label, rca_row)`` with the row aligned to ``phi.products``;
    the owner's M row is ``rca_row >= rca_threshold``.
    """
    soph_vals = _align(soph.products, soph.values, phi.products, fill=math.nan)
    points = []
    for label, rca_row in owners:
        rca_row = np.asarray(rca_row, dtype=np.float64)
        if rca_row.shape != (len(phi.products),):
            raise ValueError(f"RCA row for {label!r} is not aligned with the proximity matrix")
        omega = density(rca_row >= rca_threshold, phi, label).values
        for i in np.flatnonzero(rca_row < cutoff):
            points.append(ScatterPoint(phi.products[i], float(omega[i]), float(soph_vals[i]), label))
    return points


def scatter_csv(points: Sequence[ScatterPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["owner", "hs6", "density", "sophistication"])
    for p in points:
        w.writerow([p.owner, p.product, _fmt(p.density), _fmt(p.sophistication)])
    return buf.getvalue()


def annotations_json_ready(annotations: Sequence[NodeAnnotation]) -> list[dict]:
    return [a.as_dict() for a in annotations]

