"""Command-line pipeline: ingest -> metrics -> graph / views / integrate -> report.

Exit codes: 0 success, 2 usage error, 3 missing prerequisite cache,
4 data validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from prodspace import __version__, kernels, store
from prodspace import integration as integ
from prodspace import metrics as mx
from prodspace import product_space as ps
from prodspace import views as vw
from prodspace.trade_data import (
    CountryRegistry,
    IngestError,
    IngestFormat,
    ParseResult,
    ProductRegistry,
    aggregate_years,
    parse_trade_file,
    validate_matrix,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("prodspace")

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_INVALID = 0, 2, 3, 4
ENV_DATA_DIR = "PS_DATA_DIR"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def missing(what: str, command: str) -> CliError:
    return CliError(f"{what} not found; run `prodspace {command}` first", EXIT_MISSING)


@dataclass
class RunConfig:
    data_dir: str = "ps_data"
    years: tuple[int, int] | None = None
    rca_threshold: float = 1.0
    proximity_threshold: float = 0.45
    opportunity_cutoff: float = 0.1
    candidate_cutoff: float = 0.5
    reflections_n: int = mx.DEFAULT_REFLECTIONS
    seed: int = 0
    inclusive: bool = True
    proximity_mode: str = "average"

    def validate(self) -> None:
        for name in ("rca_threshold", "opportunity_cutoff", "candidate_cutoff"):
            if not getattr(self, name) > 0:
                raise CliError(f"{name} must be positive", EXIT_USAGE)
        if not 0 < self.proximity_threshold <= 1:
            raise CliError("proximity_threshold must lie in (0, 1]", EXIT_USAGE)
        if self.reflections_n < 0:
            raise CliError("reflections_n must be >= 0", EXIT_USAGE)
        if self.years is not None and self.years[0] > self.years[1]:
            raise CliError("empty year range", EXIT_USAGE)
        if self.proximity_mode not in ("average", "pooled"):
            raise CliError("proximity_mode must be 'average' or 'pooled'", EXIT_USAGE)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("data_dir")
        d["years"] = list(self.years) if self.years else None
        return d


def parse_years(text: str) -> tuple[int, int]:
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            return int(a), int(b)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad year range {text!r} (use 2003:2005)") from None


def parse_grid(text: str) -> list[float]:
    """``0.2:0.8:0.05`` or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            n = int(round((b - a) / step)) + 1
            return [round(a + k * step, 10) for k in range(n)]
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold grid {text!r}") from None


_CONFIG_FLAGS = {
    "years": "years",
    "rca_threshold": "rca_threshold",
    "proximity_threshold": "threshold",
    "opportunity_cutoff": "cutoff",
    "candidate_cutoff": "candidate_cutoff",
    "reflections_n": "reflections",
    "seed": "seed",
    "proximity_mode": "proximity_mode",
}


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    file_values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                doc = tomllib.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}", EXIT_USAGE) from None
        except tomllib.TOMLDecodeError as exc:
            raise CliError(f"bad config file: {exc}", EXIT_USAGE) from None
        file_values = doc.get("run", doc)
        known = {f.name for f in dataclasses.fields(RunConfig)}
        for key, value in file_values.items():
            if key not in known:
                raise CliError(f"unknown config key {key!r}", EXIT_USAGE)
            if key == "years":
                value = parse_years(value) if isinstance(value, str) else tuple(value)
            setattr(cfg, key, value)
    env_dir = os.environ.get(ENV_DATA_DIR)
    if "data_dir" not in file_values and env_dir:
        cfg.data_dir = env_dir
    if getattr(args, "data_dir", None):
        cfg.data_dir = args.data_dir
    for key, flag in _CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if key in file_values and getattr(cfg, key) != value:
            log.warning("flag --%s=%s overrides config value %s", flag.replace("_", "-"), value, getattr(cfg, key))
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


# ------------------------------------------------------------------ paths


def exports_dir(cfg: RunConfig) -> Path:
    return Path(cfg.data_dir) / "exports"


def metrics_dir(cfg: RunConfig) -> Path:
    return Path(cfg.data_dir) / "metrics"


def registry_path(cfg: RunConfig) -> Path:
    return Path(cfg.data_dir) / "registry" / "products.csv"


def load_registry(cfg: RunConfig) -> ProductRegistry:
    path = registry_path(cfg)
    return ProductRegistry.from_csv(path) if path.exists() else ProductRegistry()


def load_exports(cfg: RunConfig, year: int):
    try:
        return store.read_export_cache(exports_dir(cfg), year)
    except store.CacheError:
        raise missing(f"exports for {year}", "ingest") from None


def cache_years(cfg: RunConfig) -> list[int]:
    years = store.cached_years(exports_dir(cfg))
    if not years:
        raise missing(f"export cache in {exports_dir(cfg)}", "ingest")
    if cfg.years is not None:
        years = [y for y in years if cfg.years[0] <= y <= cfg.years[1]]
        if not years:
            raise missing(f"exports for {cfg.years[0]}-{cfg.years[1]}", "ingest")
    return years


def load_tile(cfg: RunConfig, name: str):
    try:
        return store.read_tile(metrics_dir(cfg), name)
    except store.CacheError:
        raise missing(f"metrics tile {name!r}", "metrics") from None


def load_proximity(cfg: RunConfig) -> mx.ProximityMatrix:
    arr, man = load_tile(cfg, "proximity")
    return mx.ProximityMatrix(tuple(man["cols"]), arr)


def load_sophistication(cfg: RunConfig) -> mx.SophisticationVector:
    arr, man = load_tile(cfg, "sophistication")
    p = man["params"]
    return mx.SophisticationVector(tuple(man["cols"]), arr, p["reflections_n"], p["degenerate"], p["convergence"])


def export_digest(cfg: RunConfig, year: int) -> str:
    path = exports_dir(cfg) / f"exports_{year}.json"
    if not path.exists():
        raise missing(f"exports for {year}", "ingest")
    return json.loads(path.read_text())["sha256"]


def tile_checksum(cfg: RunConfig, name: str) -> str:
    _, man = load_tile(cfg, name)
    return man["sha256"]


# ---------------------------------------------------------------- manifests


class Outputs:
    """Collects files written by one command and records them in manifest.json."""

    def __init__(self, root, command: str, key: str, config: dict, inputs: dict):
        self.root = Path(root)
        self.command = command
        self.key = key
        self.config = config
        self.inputs = inputs
        self.paths: list[Path] = []

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def _doc(self) -> dict:
        if self.manifest_path.exists():
            return json.loads(self.manifest_path.read_text())
        return {"tool": "prodspace", "version": __version__, "entries": {}}

    def cached(self) -> bool:
        entry = self._doc()["entries"].get(self.key)
        if not entry or entry["config"] != self.config or entry["inputs"] != self.inputs:
            return False
        for rel, digest in entry["outputs"].items():
            p = self.root / rel
            if not p.exists() or store.sha256_file(p) != digest:
                return False
        return True

    def write(self, rel: str, data: bytes | str) -> Path:
        if isinstance(data, str):
            data = data.encode("utf-8")
        path = self.root / rel
        store.write_bytes(path, data)
        self.paths.append(path)
        return path

    def add(self, path) -> None:
        self.paths.append(Path(path))

    def commit(self) -> None:
        doc = self._doc()
        entry = store.build_manifest(self.command, self.config, self.inputs, self.paths, self.root)
        doc["entries"][self.key] = {k: entry[k] for k in ("command", "config", "inputs", "outputs")}
        doc["version"] = __version__
        store.write_bytes(self.manifest_path, store.dump_json(doc))


def _run(outputs: Outputs, body) -> int:
    with store.locked(outputs.root):
        if outputs.cached():
            log.info("%s: up to date (cache hit)", outputs.key)
            return EXIT_OK
        body(outputs)
        outputs.commit()
    log.info("%s: wrote %d file(s) under %s", outputs.key, len(outputs.paths), outputs.root)
    return EXIT_OK


# ------------------------------------------------------------------ ingest


def cmd_ingest(args, cfg: RunConfig) -> int:
    creg = CountryRegistry.from_csv(args.countries) if args.countries else None
    fmt = IngestFormat(delimiter=args.delimiter, countries=creg, years=cfg.years)
    inputs = {}
    for path in args.input:
        if not Path(path).exists():
            raise CliError(f"input file not found: {path}", EXIT_USAGE)
        inputs[str(path)] = store.sha256_file(path)
    for extra in (args.countries, args.products):
        if extra:
            inputs[str(extra)] = store.sha256_file(extra)
    out = Outputs(exports_dir(cfg), "ingest", "ingest", cfg.as_dict(), inputs)

    def body(o: Outputs):
        result = ParseResult()
        for path in args.input:
            try:
                result.extend(parse_trade_file(path, fmt))
            except IngestError as exc:
                raise CliError(f"{path}: {exc}", EXIT_INVALID) from None
        for w in result.warnings[:20]:
            log.warning("line %d: %s", w.line, w.message)
        o.write("errors.csv", result.errors_csv())
        if result.errors:
            log.warning("%d row(s) quarantined to %s", len(result.errors), o.root / "errors.csv")
        years = sorted({r.year for r in result.records})
        if not years:
            raise CliError("no valid trade records", EXIT_INVALID)
        mats = aggregate_years(result.records, years)
        reports = {}
        for y, m in mats.items():
            rep = validate_matrix(m)
            if not rep.ok:
                raise CliError(f"year {y}: world export total is zero", EXIT_INVALID)
            reports[str(y)] = {k: v for k, v in rep.as_dict().items() if not k.startswith("empty")}
            reports[str(y)]["n_empty_countries"] = len(rep.empty_countries)
            reports[str(y)]["n_empty_products"] = len(rep.empty_products)
            o.add(store.write_export_cache(m, o.root))
            o.add(o.root / f"exports_{y}.json")
            log.info("year %d: %d countries x %d products", y, rep.n_countries, rep.n_products)
        o.write("validation.json", store.dump_json(reports))
        if args.products:
            store.write_bytes(registry_path(cfg), Path(args.products).read_bytes())
        if args.countries:
            store.write_bytes(registry_path(cfg).with_name("countries.csv"), Path(args.countries).read_bytes())

    return _run(out, body)


# ----------------------------------------------------------------- metrics

STAGES = ("rca", "proximity", "sophistication", "density", "all")


def cmd_metrics(args, cfg: RunConfig) -> int:
    years = cache_years(cfg)
    inputs = {f"exports_{y}": export_digest(cfg, y) for y in years}
    stage = args.stage
    key = f"metrics:{stage}"
    out = Outputs(metrics_dir(cfg), "metrics", key, cfg.as_dict() | {"stage": stage}, inputs)
    want = set(STAGES[:-1]) if stage == "all" else {stage}
    if "density" in want:
        want.add("proximity")

    def body(o: Outputs):
        mats = {y: load_exports(cfg, y) for y in years}
        rcas, ms = {}, {}
        for y, x in mats.items():
            rcas[y] = mx.rca(x)
            ms[y] = mx.binarize(rcas[y], cfg.rca_threshold)
            if "rca" in want:
                params = {"year": y, "rca_threshold": cfg.rca_threshold}
                o.add(store.write_tile(o.root, f"rca_{y}", rcas[y].values, x.countries, x.products, params))
                o.add(o.root / f"rca_{y}.json")
                o.add(store.write_tile(o.root, f"m_{y}", ms[y].bits, x.countries, x.products, params))
                o.add(o.root / f"m_{y}.json")
        phi = None
        if "proximity" in want:
            if cfg.proximity_mode == "pooled":
                phi = mx.pooled_proximity(list(mats.values()), cfg.rca_threshold)
            else:
                phi = mx.average_proximity([mx.proximity(ms[y]) for y in years])
            params = {"years": years, "mode": cfg.proximity_mode, "rca_threshold": cfg.rca_threshold}
            o.add(store.write_tile(o.root, "proximity", phi.values, phi.products, phi.products, params))
            o.add(o.root / "proximity.json")
        if "sophistication" in want:
            pooled = _pooled(mats)
            soph = mx.sophistication(mx.binarize(mx.rca(pooled), cfg.rca_threshold), cfg.reflections_n)
            params = {
                "years": years,
                "reflections_n": cfg.reflections_n,
                "degenerate": soph.degenerate,
                "convergence": None if np.isnan(soph.convergence) else soph.convergence,
            }
            o.add(store.write_tile(o.root, "sophistication", soph.values, None, soph.products, params))
            o.add(o.root / "sophistication.json")
        if "density" in want:
            for y in years:
                m = ms[y]
                aligned = _m_on(m, phi.products)
                omega, _ = mx.density_all(aligned, phi)
                o.add(store.write_tile(o.root, f"density_{y}", omega, m.countries, phi.products, {"year": y}))
                o.add(o.root / f"density_{y}.json")

    return _run(out, body)


def _pooled(mats: dict):
    from prodspace.trade_data import ExportMatrix

    countries = sorted(set().union(*(m.countries for m in mats.values())))
    products = sorted(set().union(*(m.products for m in mats.values())))
    total = sum(m.reindex(countries, products).values for m in mats.values())
    return ExportMatrix(max(mats), tuple(countries), tuple(products), total)


def _m_on(m: mx.MMatrix, products) -> mx.MMatrix:
    if m.products == tuple(products):
        return m
    pos = {p: i for i, p in enumerate(m.products)}
    bits = np.zeros((len(m.countries), len(products)), dtype=np.uint8)
    for j, p in enumerate(products):
        if p in pos:
            bits[:, j] = m.bits[:, pos[p]]
    return mx.MMatrix(m.countries, tuple(products), bits, m.threshold)


def _rca_row_on(r: mx.RcaMatrix, country: str, products) -> np.ndarray:
    pos = {p: i for i, p in enumerate(r.products)}
    row = r.row(country)
    return np.array([row[pos[p]] if p in pos else 0.0 for p in products])


# ------------------------------------------------------------------- graph


def _country_annotations(cfg, country, view, phi, year, base_year):
    x1 = load_exports(cfg, year)
    r1 = mx.rca(x1)
    if country not in x1.countries:
        raise CliError(f"unknown country {country!r}", EXIT_USAGE)
    if view == "rca":
        anns = vw.rca_view(country, r1)
    elif view == "value":
        x0 = load_exports(cfg, base_year)
        anns = vw.export_value_view(country, x0, x1)
    else:
        m_row = _rca_row_on(r1, country, phi.products) >= cfg.rca_threshold
        dens = mx.density(m_row, phi, country)
        anns = vw.opportunities_view(country, dens, r1, cfg.opportunity_cutoff)
    by_code = {a.product: a for a in anns}
    # products outside the year's matrix are absent for that country
    return [by_code.get(p) or vw.NodeAnnotation(p, vw.Tier.ABSENT) for p in phi.products]


def cmd_graph(args, cfg: RunConfig) -> int:
    phi = load_proximity(cfg)
    inputs = {"proximity": tile_checksum(cfg, "proximity")}
    soph = None
    if (metrics_dir(cfg) / "sophistication.json").exists():
        soph = load_sophistication(cfg)
        inputs["sophistication"] = tile_checksum(cfg, "sophistication")
    years = cache_years(cfg)
    conf = cfg.as_dict() | {
        "format": args.format,
        "country": args.country,
        "view": args.view,
        "layout": args.layout,
        "sweep": args.sweep,
    }
    key = f"graph:{args.format}:{args.country or '-'}:{args.view}"
    out = Outputs(args.out, "graph", key, conf, inputs)

    def body(o: Outputs):
        g = ps.build_graph(phi, cfg.proximity_threshold, inclusive=cfg.inclusive, registry=load_registry(cfg), soph=soph)
        anns = None
        suffix = ""
        if args.country:
            year = args.year or years[-1]
            base = args.base_year or years[0]
            anns = _country_annotations(cfg, args.country, args.view, phi, year, base)
            suffix = f"_{args.country}_{args.view}"
        lay = ps.layout(g, seed=cfg.seed) if args.layout else None
        ext = {"csv": "csv", "json": "json", "gexf": "gexf"}[args.format]
        o.write(f"product_space{suffix}.{ext}", ps.export_graph(g, anns, args.format, lay))
        if args.sweep:
            curve = ps.percolation_sweep(phi, args.sweep, inclusive=cfg.inclusive)
            o.write("percolation.csv", curve.to_csv())
            log.info("percolation threshold (giant fraction >= 0.5): %s", curve.percolation_threshold)
        log.info("graph: %d nodes, %d edges, %d isolated", len(g.nodes), len(g.edges), len(g.isolated))

    return _run(out, body)


# ------------------------------------------------------------------- views

TABLE_SORTS = ("value", "rca", "opportunity", "opportunity-soph")


def _table(cfg, country, sort, top, year, base_year, phi, soph, registry) -> str:
    x1 = load_exports(cfg, year)
    x0 = load_exports(cfg, base_year)
    if country not in x1.countries:
        raise CliError(f"unknown country {country!r} in {year}", EXIT_USAGE)
    r1, r0 = mx.rca(x1), mx.rca(x0)
    m_row = _rca_row_on(r1, country, phi.products) >= cfg.rca_threshold
    dens = mx.density(m_row, phi, country)
    if sort in ("value", "rca"):
        rows = vw.top_exports_table(country, r0, r1, x0, x1, dens, soph, sort, top, registry)
    else:
        rows = vw.opportunity_table(
            country, dens, r1, soph, top, sort == "opportunity-soph",
            cutoff=cfg.opportunity_cutoff, rca0=r0, x0=x0, x1=x1, registry=registry,
        )
    return vw.table_csv(rows, base_year, year)


def _scatter(cfg, owners, region, year, phi, soph) -> str:
    x1 = load_exports(cfg, year)
    r1 = mx.rca(x1)
    rows = []
    for c in owners:
        if c not in x1.countries:
            raise CliError(f"unknown country {c!r} in {year}", EXIT_USAGE)
        rows.append((c, _rca_row_on(r1, c, phi.products)))
    if region:
        reg = integ.combine_max_rca([_rca_row_on(r1, c, phi.products) for c in region])
        rows.append(("+".join(region), reg))
    pts = vw.density_sophistication_scatter(rows, phi, soph, cfg.opportunity_cutoff, cfg.rca_threshold)
    return vw.scatter_csv(pts)


def cmd_views(args, cfg: RunConfig) -> int:
    years = cache_years(cfg)
    year = args.year or years[-1]
    base = args.base_year or years[0]
    phi = load_proximity(cfg)
    soph = load_sophistication(cfg)
    inputs = {"proximity": tile_checksum(cfg, "proximity"), "sophistication": tile_checksum(cfg, "sophistication")}
    for y in sorted({year, base}):
        inputs[f"exports_{y}"] = export_digest(cfg, y)
    conf = cfg.as_dict() | {k: v for k, v in vars(args).items() if k in ("kind", "country", "sort", "top", "owners", "region", "view")}
    conf |= {"year": year, "base_year": base}
    registry = load_registry(cfg)

    if args.kind == "table":
        key = f"views:table:{args.country}:{args.sort}"
        out = Outputs(args.out, "views", key, conf, inputs)
        return _run(out, lambda o: o.write(
            f"table_{args.country}_{args.sort}.csv",
            _table(cfg, args.country, args.sort, args.top, year, base, phi, soph, registry),
        ))
    if args.kind == "scatter":
        owners = args.owners
        key = f"views:scatter:{','.join(owners)}"
        out = Outputs(args.out, "views", key, conf, inputs)
        return _run(out, lambda o: o.write("scatter.csv", _scatter(cfg, owners, args.region, year, phi, soph)))
    key = f"views:annotate:{args.country}:{args.view}"
    out = Outputs(args.out, "views", key, conf, inputs)

    def body(o):
        anns = _country_annotations(cfg, args.country, args.view, phi, year, base)
        o.write(f"annotations_{args.country}_{args.view}.json", store.dump_json([a.as_dict() for a in anns]))

    return _run(out, body)


# --------------------------------------------------------------- integrate


def _scenario(cfg, members, mode, top, year, phi):
    x = load_exports(cfg, year)
    unknown = [m for m in members if m not in x.countries]
    if unknown:
        raise CliError(f"unknown member(s) in {year}: {', '.join(unknown)}", EXIT_USAGE)
    try:
        spec = integ.ScenarioSpec(tuple(members), mode, cfg.candidate_cutoff, top, cfg.rca_threshold)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    return integ.run_scenario(spec, x, phi)


def cmd_integrate(args, cfg: RunConfig) -> int:
    years = cache_years(cfg)
    year = args.year or years[-1]
    phi = load_proximity(cfg)
    inputs = {"proximity": tile_checksum(cfg, "proximity"), f"exports_{year}": export_digest(cfg, year)}
    conf = cfg.as_dict() | {"members": args.members, "mode": args.mode, "top": args.top, "year": year}
    out = Outputs(args.out, "integrate", f"integrate:{','.join(args.members)}:{args.mode}", conf, inputs)
    registry = load_registry(cfg)

    def body(o):
        res = _scenario(cfg, args.members, args.mode, args.top, year, phi)
        o.write("scenario.json", res.to_json(registry))
        o.write("rankings.csv", res.rankings_csv(registry))
        for m, d in res.decomposition.items():
            log.info("%s: agriculture share of top %d gains = %.3f", m, d.count, d.fractions["AgricultureAndFood"])

    return _run(out, body)


# ------------------------------------------------------------------ report


def cmd_report(args, cfg: RunConfig) -> int:
    years = cache_years(cfg)
    year = args.year or years[-1]
    base = args.base_year or years[0]
    phi = load_proximity(cfg)
    soph = load_sophistication(cfg)
    countries = args.countries
    members = args.members or (countries if len(countries) >= 2 else None)
    inputs = {"proximity": tile_checksum(cfg, "proximity"), "sophistication": tile_checksum(cfg, "sophistication")}
    for y in sorted({year, base}):
        inputs[f"exports_{y}"] = export_digest(cfg, y)
    conf = cfg.as_dict() | {"countries": countries, "members": members, "top": args.top, "year": year, "base_year": base}
    out = Outputs(args.out, "report", "report", conf, inputs)
    registry = load_registry(cfg)

    def body(o):
        g = ps.build_graph(phi, cfg.proximity_threshold, inclusive=cfg.inclusive, registry=registry, soph=soph)
        lay = ps.layout(g, seed=cfg.seed)
        o.write("graph/product_space.gexf", ps.export_graph(g, None, "gexf", lay))
        o.write("graph/product_space.json", ps.export_graph(g, None, "json", lay))
        o.write("graph/edges.csv", ps.export_graph(g, None, "csv"))
        grid = [round(0.05 * k, 2) for k in range(1, 21)]
        o.write("graph/percolation.csv", ps.percolation_sweep(phi, grid, inclusive=cfg.inclusive).to_csv())
        for c in countries:
            for view in ("rca", "value", "opportunities"):
                anns = _country_annotations(cfg, c, view, phi, year, base)
                o.write(f"{c}/product_space_{view}.gexf", ps.export_graph(g, anns, "gexf", lay))
            for sort in TABLE_SORTS:
                o.write(f"{c}/table_{sort}.csv", _table(cfg, c, sort, args.top, year, base, phi, soph, registry))
        o.write("scatter.csv", _scatter(cfg, countries, members, year, phi, soph))
        if members:
            res = _scenario(cfg, members, "max-rca", args.scenario_top, year, phi)
            o.write("scenario/scenario.json", res.to_json(registry))
            o.write("scenario/rankings.csv", res.rankings_csv(registry))

    return _run(out, body)


# ------------------------------------------------------------------- synth


def cmd_synth(args, cfg: RunConfig) -> int:
    from prodspace import synthetic

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    years = list(range(args.years[0], args.years[1] + 1)) if args.years else [2000, 2003, 2004, 2005]
    store.write_bytes(out / "trade.csv", synthetic.generate_csv(args.countries, args.products, years, cfg.seed).encode())
    store.write_bytes(out / "countries.csv", synthetic.country_registry_csv(args.countries).encode())
    store.write_bytes(out / "products.csv", synthetic.product_registry_csv(args.products, cfg.seed, n_countries=args.countries).encode())
    log.info("synthetic data written to %s", out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _codes(text: str) -> list[str]:
    return [c.strip() for c in text.split(",") if c.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (keys of RunConfig, optionally under [run])")
    common.add_argument("--data-dir", help=f"cache directory (default: ${ENV_DATA_DIR} or ./ps_data)")
    common.add_argument("--years", type=parse_years, help="inclusive year range, e.g. 2003:2005")
    common.add_argument("--rca-threshold", type=float, help="RCA cutoff for M (default 1.0)")
    common.add_argument("--reflections", type=int, help="method-of-reflections depth (default 18)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="prodspace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"prodspace {__version__} ({kernels.BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="parse trade files into the export cache")
    s.add_argument("--input", action="append", required=True, help="trade CSV/TSV (repeatable)")
    s.add_argument("--countries", help="country registry CSV code,iso3,name")
    s.add_argument("--products", help="product registry CSV hs6,name")
    s.add_argument("--delimiter", help="field delimiter (default: sniff comma/tab)")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("metrics", parents=[common], help="RCA, M, proximity, sophistication, density tiles")
    s.add_argument("--stage", choices=STAGES, default="all")
    s.add_argument("--proximity-mode", choices=("average", "pooled"))
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("graph", parents=[common], help="export the thresholded Product Space")
    s.add_argument("--threshold", type=float, help="proximity cutoff (default 0.45)")
    s.add_argument("--format", choices=ps.FORMATS, default="gexf")
    s.add_argument("--country", help="annotate nodes with this country's view")
    s.add_argument("--view", choices=("rca", "value", "opportunities"), default="rca")
    s.add_argument("--year", type=int)
    s.add_argument("--base-year", type=int)
    s.add_argument("--layout", action="store_true", help="include seeded force-directed coordinates")
    s.add_argument("--sweep", type=parse_grid, help="percolation grid, e.g. 0.2:0.8:0.05")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_graph)

    s = sub.add_parser("views", parents=[common], help="country tables, density-sophistication scatter, node annotations")
    s.add_argument("kind", choices=("table", "scatter", "annotate"))
    s.add_argument("--country")
    s.add_argument("--sort", choices=TABLE_SORTS, default="value")
    s.add_argument("--top", type=int, default=30)
    s.add_argument("--owners", type=_codes)
    s.add_argument("--region", type=_codes, help="add a max-RCA combined owner of these countries")
    s.add_argument("--view", choices=("rca", "value", "opportunities"), default="rca")
    s.add_argument("--cutoff", type=float, help="RCA cutoff for 'not exported' (default 0.1)")
    s.add_argument("--year", type=int)
    s.add_argument("--base-year", type=int)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_views)

    s = sub.add_parser("integrate", parents=[common], help="regional-integration scenario")
    s.add_argument("--members", type=_codes, required=True)
    s.add_argument("--mode", choices=[m.value for m in integ.Mode], default="max-rca")
    s.add_argument("--top", type=int, default=integ.DEFAULT_TOP_N)
    s.add_argument("--candidate-cutoff", type=float, help="member RCA below which a product is a candidate (default 0.5)")
    s.add_argument("--year", type=int)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("report", parents=[common], help="bundle graph, views, tables and scenario")
    s.add_argument("--countries", type=_codes, required=True)
    s.add_argument("--members", type=_codes)
    s.add_argument("--top", type=int, default=30)
    s.add_argument("--scenario-top", type=int, default=integ.DEFAULT_TOP_N)
    s.add_argument("--year", type=int)
    s.add_argument("--base-year", type=int)
    s.add_argument("--out", default="report")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic BACI-style dataset")
    s.add_argument("--countries", type=int, default=30)
    s.add_argument("--products", type=int, default=200)
    s.add_argument("--out", default="synthetic")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 2 on usage errors, 0 for --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "views" and args.kind in ("table", "annotate") and not args.country:
            raise CliError(f"views {args.kind} requires --country", EXIT_USAGE)
        if args.command == "views" and args.kind == "scatter" and not args.owners:
            raise CliError("views scatter requires --owners", EXIT_USAGE)
        if getattr(args, "top", 1) is not None and getattr(args, "top", 1) <= 0:
            raise CliError("--top must be positive", EXIT_USAGE)
        cfg = load_config(args)
        return args.func(args, cfg)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
