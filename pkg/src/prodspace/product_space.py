"""The thresholded Product Space graph: construction, percolation, layout, export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence
from xml.sax.saxutils import quoteattr

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from prodspace.metrics import ProximityMatrix, SophisticationVector
from prodspace.trade_data import ProductRegistry, classify_sector

DEFAULT_THRESHOLD = 0.45


@dataclass(frozen=True)
class NodeAttrs:
    name: str = ""
    sector: str = ""
    soph: float | None = None


@dataclass(frozen=True)
class SpaceGraph:
    nodes: tuple[str, ...]
    attrs: Mapping[str, NodeAttrs]
    edges: tuple[tuple[str, str, float], ...]
    threshold: float
    inclusive: bool = True
    components: tuple[tuple[str, ...], ...] = ()
    isolated: tuple[str, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, SpaceGraph):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and dict(self.attrs) == dict(other.attrs)
            and self.edges == other.edges
            and self.threshold == other.threshold
            and self.inclusive == other.inclusive
            and self.components == other.components
            and self.isolated == other.isolated
        )

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_weighted_edges_from(self.edges)
        return g


def _edge_mask(values: np.ndarray, threshold: float, inclusive: bool) -> np.ndarray:
    mask = values >= threshold if inclusive else values > threshold
    return np.triu(mask, k=1)


def _components(nodes: Sequence[str], pairs: np.ndarray) -> tuple[tuple[tuple[str, ...], ...], tuple[str, ...]]:
    n = len(nodes)
    if n == 0:
        return (), ()
    if len(pairs) == 0:
        return (), tuple(nodes)
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    degree = np.bincount(pairs.ravel(), minlength=n)
    groups: dict[int, list[str]] = {}
    isolated = []
    for i, code in enumerate(nodes):
        if degree[i] == 0:
            isolated.append(code)
        else:
            groups.setdefault(labels[i], []).append(code)
    comps = sorted((tuple(g) for g in groups.values()), key=lambda g: (-len(g), g[0]))
    return tuple(comps), tuple(isolated)


def _describe(code: str, registry: ProductRegistry | None) -> tuple[str, str]:
    # non-numeric labels (toy inputs) carry no name or sector
    try:
        sector = classify_sector(code).value
    except ValueError:
        return "", ""
    return (registry.name(code) if registry is not None else ""), sector


def build_graph(
    phi: ProximityMatrix,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    inclusive: bool = True,
    registry: ProductRegistry | None = None,
    soph: SophisticationVector | None = None,
) -> SpaceGraph:
    """Keep edges with phi >= threshold (``inclusive=False`` switches to >)."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    nodes = phi.products
    pairs = np.argwhere(_edge_mask(phi.values, threshold, inclusive))
    edges = tuple((nodes[i], nodes[j], float(phi.values[i, j])) for i, j in pairs)
    soph_map = {}
    if soph is not None:
        soph_map = {p: v for p, v in zip(soph.products, soph.values.tolist())}
    attrs = {}
    for code in nodes:
        s = soph_map.get(code)
        attrs[code] = NodeAttrs(*_describe(code, registry), soph=None if s is None or math.isnan(s) else s)
    comps, isolated = _components(nodes, pairs)
    return SpaceGraph(nodes, attrs, edges, float(threshold), inclusive, comps, isolated)


@dataclass(frozen=True)
class PercolationCurve:
    thresholds: tuple[float, ...]
    giant_fraction: tuple[float, ...]
    edge_counts: tuple[int, ...]
    base_nodes: int

    @property
    def percolation_threshold(self) -> float | None:
        """Largest grid value at which the giant component still holds >= half the base nodes."""
        ok = [t for t, f in zip(self.thresholds, self.giant_fraction) if f >= 0.5]
        return max(ok) if ok else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "giant_fraction", "edge_count"])
        for row in zip(self.thresholds, self.giant_fraction, self.edge_counts):
            w.writerow([repr(row[0]), repr(row[1]), row[2]])
        return buf.getvalue()


def percolation_sweep(phi: ProximityMatrix, thresholds: Sequence[float], *, inclusive: bool = True) -> PercolationCurve:
    """Giant-component fraction and edge count over an ascending threshold grid.

    The fraction's denominator is the number of nodes with at least one edge
    at the smallest grid threshold, so the curve is comparable across grid
    points.
    """
    grid = [float(t) for t in thresholds]
    if not grid:
        raise ValueError("empty threshold grid")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("threshold grid must be ascending")
    if not all(0 < t <= 1 for t in grid):
        raise ValueError("thresholds must lie in (0, 1]")
    values = phi.values
    n = len(phi.products)
    iu, ju = np.triu_indices(n, k=1)
    w = values[iu, ju]
    keep = w >= grid[0] if inclusive else w > grid[0]
    iu, ju, w = iu[keep], ju[keep], w[keep]
    base = int(np.count_nonzero(np.bincount(np.concatenate([iu, ju]), minlength=n))) if len(w) else 0
    fractions, counts = [], []
    for t in grid:
        sel = w >= t if inclusive else w > t
        counts.append(int(sel.sum()))
        if base == 0 or not sel.any():
            fractions.append(0.0)
            continue
        adj = coo_matrix((np.ones(int(sel.sum())), (iu[sel], ju[sel])), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        touched = np.zeros(n, dtype=bool)
        touched[iu[sel]] = True
        touched[ju[sel]] = True
        sizes = np.bincount(labels[touched])
        fractions.append(float(sizes.max()) / base)
    return PercolationCurve(tuple(grid), tuple(fractions), tuple(counts), base)


@dataclass(frozen=True)
class LayoutResult:
    coordinates: Mapping[str, tuple[float, float]]
    grid_block: Mapping[str, tuple[float, float]]


def layout(g: SpaceGraph, seed: int = 0, iterations: int = 100) -> LayoutResult:
    """Seeded force-directed placement; isolated nodes go to a grid on the right.

    The grid starts one bounding-box diagonal (at least 1 unit) to the right
    of the connected region, so any two connected nodes are closer to each
    other than to any grid node. Grid order is by HS code, column-major.
    """
    iso_set = set(g.isolated)
    connected = [n for n in g.nodes if n not in iso_set]
    coords: dict[str, tuple[float, float]] = {}
    if connected:
        sub = nx.Graph()
        sub.add_nodes_from(connected)
        sub.add_weighted_edges_from(g.edges)
        pos = nx.spring_layout(sub, seed=seed, iterations=iterations, scale=None)
        for n in connected:
            x, y = pos[n]
            coords[n] = (float(x), float(y))
        xs = np.array([c[0] for c in coords.values()])
        ys = np.array([c[1] for c in coords.values()])
        xmin, xmax, ymin, ymax = xs.min(), xs.max(), ys.min(), ys.max()
        diag = math.hypot(xmax - xmin, ymax - ymin)
        span = max(diag, 1.0)
        gx0 = xmax + 1.1 * span
        height = max(ymax - ymin, span)
    else:
        span, gx0, ymin, height = 1.0, 0.0, 0.0, 1.0
    grid = {}
    iso = sorted(g.isolated)
    if iso:
        rows = max(1, math.ceil(math.sqrt(len(iso) * 2)))
        step = height / max(rows - 1, 1)
        for k, code in enumerate(iso):
            col, row = divmod(k, rows)
            grid[code] = (float(gx0 + col * step), float(ymin + height - row * step))
    coords.update(grid)
    return LayoutResult({n: coords[n] for n in g.nodes}, grid)


# ---------------------------------------------------------------- export

FORMATS = ("csv", "json", "gexf")

_ANNOTATION_FIELDS = ("tier", "size_value", "growth", "decile")


def _annotation_map(g: SpaceGraph, annotations) -> dict[str, dict]:
    if annotations is None:
        return {}
    if isinstance(annotations, Mapping):
        items = list(annotations.values())
    else:
        items = list(annotations)
    out = {}
    for a in items:
        d = a if isinstance(a, Mapping) else a.as_dict()
        out[d["product"]] = {k: d.get(k) for k in _ANNOTATION_FIELDS}
    if set(out) != set(g.nodes):
        raise ValueError("annotations must cover exactly the graph's nodes")
    return out


def _num(v) -> str:
    return repr(float(v))


def export_graph(g: SpaceGraph, annotations=None, fmt: str = "csv", layout_result: LayoutResult | None = None) -> bytes:
    """Serialize as edge-list CSV, node-link JSON or GEXF 1.2 (byte-stable)."""
    fmt = fmt.lower()
    if fmt not in FORMATS:
        raise ValueError(f"unknown graph format {fmt!r}; expected one of {FORMATS}")
    ann = _annotation_map(g, annotations)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        for s, t, wt in g.edges:
            w.writerow([s, t, _num(wt)])
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        return _to_json(g, ann, layout_result).encode("utf-8")
    return _to_gexf(g, ann, layout_result).encode("utf-8")


def _to_json(g: SpaceGraph, ann, lay) -> str:
    nodes = []
    for code in g.nodes:
        a = g.attrs[code]
        node = {"id": code, "name": a.name, "sector": a.sector, "soph": a.soph}
        if code in ann:
            node.update(ann[code])
        if lay is not None:
            node["x"], node["y"] = lay.coordinates[code]
        nodes.append(node)
    doc = {
        "graph": {"threshold": g.threshold, "inclusive": g.inclusive},
        "nodes": nodes,
        "links": [{"source": s, "target": t, "weight": w} for s, t, w in g.edges],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def load_graph_json(data: bytes | str) -> SpaceGraph:
    doc = json.loads(data)
    nodes = tuple(n["id"] for n in doc["nodes"])
    attrs = {n["id"]: NodeAttrs(n.get("name", ""), n.get("sector", ""), n.get("soph")) for n in doc["nodes"]}
    edges = tuple((l["source"], l["target"], float(l["weight"])) for l in doc["links"])
    idx = {c: i for i, c in enumerate(nodes)}
    pairs = np.array([(idx[s], idx[t]) for s, t, _ in edges], dtype=np.int64).reshape(-1, 2)
    comps, isolated = _components(nodes, pairs)
    meta = doc.get("graph", {})
    return SpaceGraph(nodes, attrs, edges, float(meta.get("threshold", 0.0)), bool(meta.get("inclusive", True)), comps, isolated)


_GEXF_ATTRS = (
    ("0", "name", "string"),
    ("1", "sector", "string"),
    ("2", "sophistication", "double"),
    ("3", "tier", "string"),
    ("4", "size_value", "double"),
    ("5", "growth", "string"),
    ("6", "decile", "integer"),
)


def _to_gexf(g: SpaceGraph, ann, lay) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://gexf.net/1.2" xmlns:viz="http://gexf.net/1.2/viz" version="1.2">',
        "  <meta>",
        "    <creator>prodspace</creator>",
        f"    <description>Product Space, proximity threshold {_num(g.threshold)}</description>",
        "  </meta>",
        '  <graph mode="static" defaultedgetype="undirected">',
        '    <attributes class="node">',
    ]
    for aid, title, typ in _GEXF_ATTRS:
        out.append(f'      <attribute id="{aid}" title="{title}" type="{typ}"/>')
    out.append("    </attributes>")
    out.append("    <nodes>")
    for code in g.nodes:
        a = g.attrs[code]
        vals = {"name": a.name, "sector": a.sector, "sophistication": a.soph}
        vals.update({k: v for k, v in ann.get(code, {}).items()})
        out.append(f"      <node id={quoteattr(code)} label={quoteattr(a.name or code)}>")
        out.append("        <attvalues>")
        for aid, title, typ in _GEXF_ATTRS:
            v = vals.get(title)
            if v is None or v == "":
                continue
            if typ == "double":
                v = _num(v)
            out.append(f'          <attvalue for="{aid}" value={quoteattr(str(v))}/>')
        out.append("        </attvalues>")
        if lay is not None:
            x, y = lay.coordinates[code]
            out.append(f'        <viz:position x="{_num(x)}" y="{_num(y)}" z="0.0"/>')
        out.append("      </node>")
    out.append("    </nodes>")
    out.append("    <edges>")
    for k, (s, t, w) in enumerate(g.edges):
        out.append(f'      <edge id="{k}" source={quoteattr(s)} target={quoteattr(t)} weight="{_num(w)}"/>')
    out.append("    </edges>")
    out.append("  </graph>")
    out.append("</gexf>")
    return "\n".join(out) + "\n"

