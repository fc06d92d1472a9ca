"""Trade record ingestion, code registries and per-year export matrices."""

from __future__ import annotations

import csv
import enum
import functools
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

log = logging.getLogger(__name__)

FIELDS = ("year", "exporter", "importer", "product", "value", "quantity")
MANDATORY = ("year", "exporter", "importer", "product", "value")

BACI_ALIASES = {"t": "year", "i": "exporter", "j": "importer", "k": "product", "v": "value", "q": "quantity"}

_MISSING = {"", "na", "nan", "null", "none"}


class IngestError(ValueError):
    """Fatal ingestion problem (bad header, unknown format)."""


class EmptyYearError(ValueError):
    """Raised when a requested year has no records."""


class SectorClass(str, enum.Enum):
    AGRICULTURE_AND_FOOD = "AgricultureAndFood"
    TEXTILES_AND_GARMENTS = "TextilesAndGarments"
    OTHER = "Other"


def normalize_hs6(code) -> str:
    """Zero-pad an HS code to six digits ("90240" -> "090240")."""
    s = str(code).strip()
    if s.endswith(".0"):
        s = s[:-2]
    if not s.isdigit() or len(s) > 6:
        raise ValueError(f"not an HS-6 code: {code!r}")
    return s.zfill(6)


def classify_sector(code) -> SectorClass:
    """Coarse sector from the numeric HS-6 code.

    ``< 280000`` is agriculture and food, ``[500000, 680000)`` textiles and
    garments, everything else other. Chapters 25-27 (minerals) fall in the
    first bucket under this numeric rule.
    """
    n = int(normalize_hs6(code))
    if n < 280000:
        return SectorClass.AGRICULTURE_AND_FOOD
    if 500000 <= n < 680000:
        return SectorClass.TEXTILES_AND_GARMENTS
    return SectorClass.OTHER


@dataclass(frozen=True)
class TradeRecord:
    year: int
    exporter: str
    importer: str
    product: str
    value: float
    quantity: float | None = None


@dataclass(frozen=True)
class Country:
    code: str
    iso3: str
    name: str


@dataclass
class CountryRegistry:
    """BACI numeric code -> ISO-3 mapping.

    Reads ``code,iso3,name`` or BACI's own ``country_codes`` file
    (``country_code,country_name,country_iso3``).
    """

    entries: dict[str, Country] = field(default_factory=dict)

    @classmethod
    def from_csv(cls, path_or_stream) -> "CountryRegistry":
        entries = {}
        for row in _dict_rows(path_or_stream):
            code = _pick(row, "code", "country_code")
            iso3 = _pick(row, "iso3", "country_iso3")
            if not code or not iso3:
                raise IngestError(f"country registry row lacks code or iso3: {row}")
            entries[code] = Country(code, iso3, _pick(row, "name", "country_name", "country_name_full"))
        return cls(entries)

    def known(self, code: str) -> bool:
        return code in self.entries or code in self.iso3_codes

    @functools.cached_property
    def iso3_codes(self) -> set[str]:
        return {c.iso3 for c in self.entries.values()}

    def map(self, code: str) -> str | None:
        """ISO-3 for a code; ISO-3 codes map to themselves; None when unknown."""
        if code in self.entries:
            return self.entries[code].iso3
        if code in self.iso3_codes:
            return code
        return None


@dataclass(frozen=True)
class ProductInfo:
    name: str
    sector: SectorClass


@dataclass
class ProductRegistry:
    entries: dict[str, ProductInfo] = field(default_factory=dict)

    @classmethod
    def from_csv(cls, path_or_stream) -> "ProductRegistry":
        entries = {}
        for row in _dict_rows(path_or_stream):
            # also reads BACI's product_codes file (code,description)
            code = normalize_hs6(_pick(row, "hs6", "code"))
            entries[code] = ProductInfo(_pick(row, "name", "description"), classify_sector(code))
        return cls(entries)

    def resolve(self, code: str) -> ProductInfo:
        """Every HS-6 code resolves; unknown codes get an empty name."""
        code = normalize_hs6(code)
        info = self.entries.get(code)
        if info is None:
            return ProductInfo("", classify_sector(code))
        return info

    def name(self, code: str) -> str:
        return self.resolve(code).name


@dataclass(frozen=True)
class IngestFormat:
    """How to read a delimited trade table.

    ``aliases`` maps header names to canonical field names; BACI short names
    (t, i, j, k, v, q) are always accepted. ``delimiter=None`` sniffs comma
    versus tab from the header line.
    """

    delimiter: str | None = None
    aliases: Mapping[str, str] = field(default_factory=dict)
    countries: CountryRegistry | None = None
    years: tuple[int, int] | None = None


@dataclass(frozen=True)
class RowIssue:
    line: int
    message: str
    raw: str


@dataclass
class ParseResult:
    records: list[TradeRecord] = field(default_factory=list)
    errors: list[RowIssue] = field(default_factory=list)
    warnings: list[RowIssue] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def extend(self, other: "ParseResult") -> None:
        self.records.extend(other.records)
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)

    def errors_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["line", "message", "raw"])
        for issue in self.errors:
            w.writerow([issue.line, issue.message, issue.raw])
        return buf.getvalue()


def _pick(row: dict, *names: str) -> str:
    for n in names:
        if row.get(n) is not None:
            return row[n].strip()
    return ""


def _dict_rows(path_or_stream):
    if isinstance(path_or_stream, (str, Path)):
        with open(path_or_stream, newline="", encoding="utf-8-sig") as fh:
            yield from csv.DictReader(fh)
    else:
        yield from csv.DictReader(path_or_stream)


def _text_stream(stream) -> IO[str]:
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(stream.decode("utf-8"))
    if isinstance(stream, io.TextIOBase):
        return stream
    if hasattr(stream, "read"):
        sample = stream.read(0)
        if isinstance(sample, bytes):
            return io.TextIOWrapper(stream, encoding="utf-8", newline="")
        return stream
    raise TypeError(f"cannot read trade records from {type(stream).__name__}")


def _country(code: str, registry: CountryRegistry | None) -> tuple[str, bool]:
    """Return (canonical code, known?)."""
    code = code.strip()
    if code.endswith(".0"):
        code = code[:-2]
    if registry is not None:
        mapped = registry.map(code)
        if mapped is not None:
            return mapped, True
    if code.isdigit():
        code = "N" + code
    return code, registry is None


def parse_trade_records(stream, fmt: IngestFormat | None = None) -> ParseResult:
    """Parse a delimited trade table into records plus a row-level issue report.

    Raises :class:`IngestError` if a mandatory column is missing. Rows with
    bad values are reported in ``errors`` (with their line number) and
    skipped; rows whose country code is not in the registry are kept and
    reported in ``warnings``.
    """
    fmt = fmt or IngestFormat()
    fh = _text_stream(stream)
    header_line = fh.readline()
    result = ParseResult()
    if not header_line.strip():
        raise IngestError("missing header row")
    delim = fmt.delimiter or ("\t" if header_line.count("\t") > header_line.count(",") else ",")
    header = next(csv.reader([header_line], delimiter=delim))
    aliases = {**BACI_ALIASES, **{k.lower(): v for k, v in fmt.aliases.items()}}
    colmap = {}
    for idx, name in enumerate(header):
        key = name.strip().lower()
        canonical = key if key in FIELDS else aliases.get(key)
        if canonical is not None and canonical not in colmap:
            colmap[canonical] = idx
    missing = [f for f in MANDATORY if f not in colmap]
    if missing:
        raise IngestError(f"missing mandatory column(s): {', '.join(missing)}")

    reader = csv.reader(fh, delimiter=delim)
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        raw = delim.join(row)
        try:
            rec, unknown = _parse_row(row, colmap, fmt)
        except (ValueError, IndexError) as exc:
            result.errors.append(RowIssue(lineno, str(exc), raw))
            continue
        if unknown:
            result.warnings.append(RowIssue(lineno, f"unknown country code(s): {', '.join(unknown)}", raw))
        result.records.append(rec)
    if result.errors:
        log.warning("%d malformed row(s) rejected", len(result.errors))
    return result


def _parse_row(row, colmap, fmt: IngestFormat):
    def cell(name):
        return row[colmap[name]].strip()

    year_s = cell("year")
    try:
        year = int(float(year_s))
    except ValueError:
        raise ValueError(f"bad year {year_s!r}") from None
    if fmt.years is not None and not fmt.years[0] <= year <= fmt.years[1]:
        raise ValueError(f"year {year} outside {fmt.years[0]}-{fmt.years[1]}")
    value_s = cell("value")
    try:
        value = float(value_s)
    except ValueError:
        raise ValueError(f"bad value {value_s!r}") from None
    if not np.isfinite(value):
        raise ValueError(f"non-finite value {value_s!r}")
    if value < 0:
        raise ValueError(f"negative value {value_s!r}")
    product = normalize_hs6(cell("product"))
    quantity = None
    if "quantity" in colmap and colmap["quantity"] < len(row):
        q = row[colmap["quantity"]].strip()
        if q.lower() not in _MISSING:
            try:
                quantity = float(q)
            except ValueError:
                raise ValueError(f"bad quantity {q!r}") from None
            if quantity < 0:
                raise ValueError(f"negative quantity {q!r}")
    exporter, ok_e = _country(cell("exporter"), fmt.countries)
    importer, ok_i = _country(cell("importer"), fmt.countries)
    unknown = [c for c, ok in ((exporter, ok_e), (importer, ok_i)) if not ok]
    return TradeRecord(year, exporter, importer, product, value, quantity), unknown


def parse_trade_file(path, fmt: IngestFormat | None = None) -> ParseResult:
    with open(path, "rb") as fh:
        return parse_trade_records(fh, fmt)


@dataclass(frozen=True, eq=False)
class ExportMatrix:
    """Country x product export values (thousands of USD) for one year."""

    year: int
    countries: tuple[str, ...]
    products: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        # + 0.0 folds -0.0 into 0.0 so cache round-trips are bit-exact
        values = np.array(self.values, dtype=np.float64) + 0.0
        if values.shape != (len(self.countries), len(self.products)):
            raise ValueError(f"values shape {values.shape} != ({len(self.countries)}, {len(self.products)})")
        if values.size and values.min() < 0:
            raise ValueError("export values must be non-negative")
        for name, codes in (("countries", self.countries), ("products", self.products)):
            if list(codes) != sorted(set(codes)):
                raise ValueError(f"{name} must be sorted and duplicate-free")
        values.setflags(write=False)
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "products", tuple(self.products))
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        if not isinstance(other, ExportMatrix):
            return NotImplemented
        return (
            self.year == other.year
            and self.countries == other.countries
            and self.products == other.products
            and np.array_equal(self.values, other.values)
        )

    def country_index(self, code: str) -> int:
        try:
            return self.countries.index(code)
        except ValueError:
            raise KeyError(f"unknown country {code!r}") from None

    def row(self, code: str) -> np.ndarray:
        return self.values[self.country_index(code)]

    def reindex(self, countries: Iterable[str] | None = None, products: Iterable[str] | None = None) -> "ExportMatrix":
        """Realign onto other (sorted) code lists; absent entries become 0."""
        countries = tuple(countries) if countries is not None else self.countries
        products = tuple(products) if products is not None else self.products
        out = np.zeros((len(countries), len(products)))
        ci = {c: i for i, c in enumerate(self.countries)}
        pi = {p: i for i, p in enumerate(self.products)}
        rows = [(i, ci[c]) for i, c in enumerate(countries) if c in ci]
        cols = [(j, pi[p]) for j, p in enumerate(products) if p in pi]
        if rows and cols:
            dst_r, src_r = map(list, zip(*rows))
            dst_c, src_c = map(list, zip(*cols))
            out[np.ix_(dst_r, dst_c)] = self.values[np.ix_(src_r, src_c)]
        return ExportMatrix(self.year, countries, products, out)


def aggregate_exports(
    records: Iterable[TradeRecord],
    year: int,
    countries: Iterable[str] | None = None,
    products: Iterable[str] | None = None,
) -> ExportMatrix:
    """Sum record values by (exporter, product) over importers for one year.

    Intra-country flows are dropped. ``countries``/``products`` fix the
    output orderings (e.g. the union across several years); otherwise the
    sorted codes observed in that year are used.
    """
    flows: dict[tuple[str, str], list[float]] = defaultdict(list)
    seen = False
    for r in records:
        if r.year != year:
            continue
        seen = True
        if r.exporter == r.importer:
            continue
        flows[(r.exporter, r.product)].append(r.value)
    if not seen:
        raise EmptyYearError(f"no records for year {year}")
    # fsum is exactly rounded, so the result does not depend on record order
    totals = {k: math.fsum(v) for k, v in flows.items()}
    cs = tuple(sorted(set(countries))) if countries is not None else tuple(sorted({c for c, _ in totals}))
    ps = tuple(sorted(set(products))) if products is not None else tuple(sorted({p for _, p in totals}))
    ci = {c: i for i, c in enumerate(cs)}
    pi = {p: i for i, p in enumerate(ps)}
    values = np.zeros((len(cs), len(ps)))
    for (c, p), v in totals.items():
        if c in ci and p in pi:
            values[ci[c], pi[p]] = v
    return ExportMatrix(year, cs, ps, values)


def aggregate_years(records: list[TradeRecord], years: Iterable[int]) -> dict[int, ExportMatrix]:
    """One matrix per year, all on the union orderings of those years."""
    years = sorted(set(years))
    ys = set(years)
    cs = sorted({r.exporter for r in records if r.year in ys and r.exporter != r.importer})
    ps = sorted({r.product for r in records if r.year in ys and r.exporter != r.importer})
    return {y: aggregate_exports(records, y, cs, ps) for y in years}


def _sum_exact(values) -> float:
    return float(np.sum(np.asarray(values, dtype=np.float64)))


@dataclass(frozen=True)
class ValidationReport:
    year: int
    n_countries: int
    n_products: int
    world_total: float
    empty_countries: tuple[str, ...]
    empty_products: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.world_total > 0

    def as_dict(self) -> dict:
        return {
            "year": self.year,
            "n_countries": self.n_countries,
            "n_products": self.n_products,
            "world_total": self.world_total,
            "empty_countries": list(self.empty_countries),
            "empty_products": list(self.empty_products),
        }


def validate_matrix(m: ExportMatrix) -> ValidationReport:
    v = m.values
    return ValidationReport(
        year=m.year,
        n_countries=len(m.countries),
        n_products=len(m.products),
        world_total=_sum_exact(v),
        empty_countries=tuple(c for c, t in zip(m.countries, v.sum(axis=1)) if t == 0),
        empty_products=tuple(p for p, t in zip(m.products, v.sum(axis=0)) if t == 0),
    )
