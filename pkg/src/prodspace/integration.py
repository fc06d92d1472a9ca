"""Regional-integration scenarios: combine member structures and rank density gains."""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from prodspace.metrics import MMatrix, ProximityMatrix, RcaMatrix, density_all, rca_values
from prodspace.trade_data import ExportMatrix, ProductRegistry, SectorClass, classify_sector

DEFAULT_CANDIDATE_CUTOFF = 0.5
DEFAULT_TOP_N = 150


class Mode(str, enum.Enum):
    MAX_RCA = "max-rca"
    POOLED_EXPORTS = "pooled"


@dataclass(frozen=True)
class ScenarioSpec:
    members: tuple[str, ...]
    mode: Mode = Mode.MAX_RCA
    rca_cutoff_for_candidates: float = DEFAULT_CANDIDATE_CUTOFF
    top_n: int = DEFAULT_TOP_N
    rca_threshold: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "mode", Mode(self.mode))
        if len(set(self.members)) < 2:
            raise ValueError("a scenario needs at least two distinct members")
        if not (self.rca_cutoff_for_candidates > 0 and self.rca_threshold > 0):
            raise ValueError("cutoffs must be positive")
        if self.top_n <= 0:
            raise ValueError("top_n must be positive")

    def as_dict(self) -> dict:
        return {
            "members": list(self.members),
            "mode": self.mode.value,
            "rca_cutoff_for_candidates": self.rca_cutoff_for_candidates,
            "top_n": self.top_n,
            "rca_threshold": self.rca_threshold,
        }


def combine_max_rca(rows) -> np.ndarray:
    """Element-wise maximum of member RCA rows (members x products)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("need at least one member RCA row")
    return rows.max(axis=0)


def combine_pooled_exports(members: Sequence[str], x: ExportMatrix) -> np.ndarray:
    """RCA of the member group treated as one country.

    Member rows are replaced by their column-wise sum, so world totals are
    unchanged.
    """
    if not members:
        raise ValueError("need at least one member")
    idx = [x.country_index(c) for c in dict.fromkeys(members)]
    pooled = x.values[idx].sum(axis=0)
    rest = np.delete(x.values, idx, axis=0)
    return rca_values(np.vstack([pooled[None, :], rest]))[0]


def density_delta(member_row, regional_row, phi: ProximityMatrix) -> np.ndarray:
    """omega(region) - omega(member) per product, from binary M rows."""
    both = np.ascontiguousarray(np.vstack([np.asarray(regional_row, bool), np.asarray(member_row, bool)]), dtype=np.uint8)
    omega, _ = density_all(MMatrix(("region", "member"), phi.products, both), phi)
    return omega[0] - omega[1]


@dataclass(frozen=True)
class GainEntry:
    product: str
    delta: float
    member_density: float
    regional_density: float
    zero_gain: bool


def rank_density_gains(
    products: Sequence[str],
    deltas,
    member_rca,
    cutoff: float = DEFAULT_CANDIDATE_CUTOFF,
    n: int | None = None,
    member_density=None,
    regional_density=None,
) -> list[GainEntry]:
    """Products with member RCA < cutoff by descending density gain; ties by HS code.

    Zero-gain candidates stay in the list with ``zero_gain=True``.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    member_rca = np.asarray(member_rca, dtype=np.float64)
    md = np.zeros(len(products)) if member_density is None else np.asarray(member_density)
    rd = np.zeros(len(products)) if regional_density is None else np.asarray(regional_density)
    keep = [i for i in range(len(products)) if member_rca[i] < cutoff]
    keep.sort(key=lambda i: (-deltas[i], products[i]))
    if n is not None:
        keep = keep[:n]
    return [
        GainEntry(products[i], float(deltas[i]), float(md[i]), float(rd[i]), bool(deltas[i] <= 0))
        for i in keep
    ]


@dataclass(frozen=True)
class Decomposition:
    fractions: dict[str, float]
    count: int
    requested: int

    def as_dict(self) -> dict:
        return {"fractions": dict(self.fractions), "count": self.count, "requested": self.requested}


def sector_decomposition(ranked: Sequence, top_n: int = DEFAULT_TOP_N) -> Decomposition:
    """Share of the first ``top_n`` ranked products in each coarse sector.

    Shorter lists use every entry; ``count`` records how many were used.
    Labels that are not HS-6 codes count as other.
    """
    codes = [e.product if isinstance(e, GainEntry) else e for e in ranked][:top_n]
    tally = {s.value: 0 for s in SectorClass}
    for code in codes:
        try:
            tally[classify_sector(code).value] += 1
        except ValueError:
            tally[SectorClass.OTHER.value] += 1
    k = len(codes)
    fractions = {s: (c / k if k else 0.0) for s, c in tally.items()}
    return Decomposition(fractions, k, top_n)


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    spec: ScenarioSpec
    products: tuple[str, ...]
    regional_rca: np.ndarray
    regional_m_row: np.ndarray
    regional_density: np.ndarray
    member_density: dict[str, np.ndarray]
    deltas: dict[str, np.ndarray]
    rankings: dict[str, list[GainEntry]]
    decomposition: dict[str, Decomposition]
    meta: dict = field(default_factory=dict)

    def to_json(self, registry: ProductRegistry | None = None) -> str:
        def name(code):
            return registry.name(code) if registry is not None else ""

        doc = {
            "spec": self.spec.as_dict(),
            "meta": self.meta,
            "regional_products": [p for p, b in zip(self.products, self.regional_m_row.tolist()) if b],
            "rankings": {
                m: [
                    {
                        "code": e.product,
                        "name": name(e.product),
                        "delta": e.delta,
                        "member_density": e.member_density,
                        "regional_density": e.regional_density,
                        "zero_gain": e.zero_gain,
                    }
                    for e in entries
                ]
                for m, entries in self.rankings.items()
            },
            "decomposition": {m: d.as_dict() for m, d in self.decomposition.items()},
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def rankings_csv(self, registry: ProductRegistry | None = None, n: int | None = None) -> str:
        """Two columns (code, name) per member, members side by side."""
        members = list(self.spec.members)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([x for m in members for x in (m, "")])
        w.writerow(["HS-6 code", "Product Name"] * len(members))
        cols = [self.rankings[m][:n] if n is not None else self.rankings[m] for m in members]
        depth = max((len(c) for c in cols), default=0)
        for k in range(depth):
            row = []
            for c in cols:
                if k < len(c):
                    code = c[k].product
                    row += [code, registry.name(code) if registry is not None else ""]
                else:
                    row += ["", ""]
            w.writerow(row)
        return buf.getvalue()


def run_scenario(
    spec: ScenarioSpec,
    x: ExportMatrix,
    phi: ProximityMatrix,
    r: RcaMatrix | None = None,
) -> ScenarioResult:
    """Regional M row, per-member density gains, rankings and sector shares.

    RCA is computed on the full export matrix, then aligned onto
    ``phi.products`` (products unknown to ``x`` get RCA 0).
    """
    if r is None:
        r = RcaMatrix(x.countries, x.products, rca_values(x.values))
    pos = {p: i for i, p in enumerate(r.products)}
    cols = [pos.get(p, -1) for p in phi.products]

    def aligned(row):
        padded = np.append(np.asarray(row, dtype=np.float64), 0.0)
        return padded[cols]

    rows = np.vstack([aligned(r.row(m)) for m in spec.members])
    if spec.mode is Mode.MAX_RCA:
        regional = combine_max_rca(rows)
    else:
        regional = aligned(combine_pooled_exports(spec.members, x))
    regional_m = regional >= spec.rca_threshold
    member_m = rows >= spec.rca_threshold
    stack = np.ascontiguousarray(np.vstack([regional_m[None, :], member_m]), dtype=np.uint8)
    omega, isolated = density_all(MMatrix(("__region__",) + spec.members, phi.products, stack), phi)
    reg_omega = omega[0]
    member_density, deltas, rankings, decomp = {}, {}, {}, {}
    for k, m in enumerate(spec.members):
        mo = omega[k + 1]
        d = reg_omega - mo
        if spec.mode is Mode.MAX_RCA:
            # regional M is a superset of every member's M; clear rounding noise
            d = np.maximum(d, 0.0)
        member_density[m] = mo
        deltas[m] = d
        ranked = rank_density_gains(phi.products, d, rows[k], spec.rca_cutoff_for_candidates, None, mo, reg_omega)
        rankings[m] = ranked
        decomp[m] = sector_decomposition(ranked, spec.top_n)
    meta = {
        "delta_basis": "per-member density",
        "tie_break": "hs6 ascending",
        "isolated_products": int(isolated.sum()),
    }
    return ScenarioResult(
        spec, phi.products, regional, regional_m, reg_omega, member_density, deltas,
        {m: v[: spec.top_n] for m, v in rankings.items()}, decomp, meta,
    )

