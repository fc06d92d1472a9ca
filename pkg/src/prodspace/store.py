"""On-disk formats: export cache, dense binary tiles and output manifests."""

from __future__ import annotations

import contextlib
import csv
import fcntl
import hashlib
import io
import json
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from prodspace import __version__
from prodspace.trade_data import ExportMatrix


class CacheError(RuntimeError):
    """Missing or corrupt cache entry."""


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_bytes(path, data: bytes) -> None:
    """Write via a temp file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


@contextlib.contextmanager
def locked(directory):
    """Exclusive advisory lock on ``<directory>/.lock`` for the duration of a write."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / ".lock", "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


# -------------------------------------------------------------- export cache


def export_csv_bytes(m: ExportMatrix) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["country", "product", "value"])
    rows, cols = np.nonzero(m.values)
    for i, j in zip(rows.tolist(), cols.tolist()):
        w.writerow([m.countries[i], m.products[j], repr(float(m.values[i, j]))])
    return buf.getvalue().encode("utf-8")


def write_export_cache(m: ExportMatrix, directory) -> Path:
    """``exports_<year>.csv`` (non-zero cells sorted by country, product) plus a JSON manifest."""
    directory = Path(directory)
    data = export_csv_bytes(m)
    csv_path = directory / f"exports_{m.year}.csv"
    manifest = {
        "kind": "exports",
        "year": m.year,
        "n_countries": len(m.countries),
        "n_products": len(m.products),
        "countries": list(m.countries),
        "products": list(m.products),
        "file": csv_path.name,
        "sha256": sha256_bytes(data),
    }
    write_bytes(csv_path, data)
    write_bytes(directory / f"exports_{m.year}.json", dump_json(manifest))
    return csv_path


def cached_years(directory) -> list[int]:
    return sorted(int(p.stem.split("_", 1)[1]) for p in Path(directory).glob("exports_*.json"))


def read_export_cache(directory, year: int) -> ExportMatrix:
    directory = Path(directory)
    mpath = directory / f"exports_{year}.json"
    if not mpath.exists():
        raise CacheError(f"no cached exports for {year} in {directory}")
    manifest = json.loads(mpath.read_text())
    data = (directory / manifest["file"]).read_bytes()
    if sha256_bytes(data) != manifest["sha256"]:
        raise CacheError(f"checksum mismatch for {manifest['file']}")
    countries = tuple(manifest["countries"])
    products = tuple(manifest["products"])
    ci = {c: i for i, c in enumerate(countries)}
    pi = {p: i for i, p in enumerate(products)}
    values = np.zeros((len(countries), len(products)))
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    next(reader)
    for c, p, v in reader:
        values[ci[c], pi[p]] = float(v)
    return ExportMatrix(int(manifest["year"]), countries, products, values)


# -------------------------------------------------------------- dense tiles


def write_tile(
    directory,
    name: str,
    array: np.ndarray,
    rows: Sequence[str] | None = None,
    cols: Sequence[str] | None = None,
    params: Mapping | None = None,
) -> Path:
    """Raw little-endian C-order array in ``<name>.bin`` plus ``<name>.json``."""
    directory = Path(directory)
    array = np.ascontiguousarray(array)
    dtype = array.dtype.newbyteorder("<") if array.dtype.byteorder not in "|" else array.dtype
    data = array.astype(dtype, copy=False).tobytes(order="C")
    manifest = {
        "kind": "tile",
        "name": name,
        "dtype": dtype.str,
        "shape": list(array.shape),
        "rows": list(rows) if rows is not None else None,
        "cols": list(cols) if cols is not None else None,
        "params": dict(params or {}),
        "file": f"{name}.bin",
        "sha256": sha256_bytes(data),
    }
    write_bytes(directory / f"{name}.bin", data)
    write_bytes(directory / f"{name}.json", dump_json(manifest))
    return directory / f"{name}.bin"


def read_tile(directory, name: str) -> tuple[np.ndarray, dict]:
    directory = Path(directory)
    mpath = directory / f"{name}.json"
    if not mpath.exists():
        raise CacheError(f"missing tile {name!r} in {directory}")
    manifest = json.loads(mpath.read_text())
    data = (directory / manifest["file"]).read_bytes()
    if sha256_bytes(data) != manifest["sha256"]:
        raise CacheError(f"checksum mismatch for tile {name!r}")
    arr = np.frombuffer(data, dtype=np.dtype(manifest["dtype"])).reshape(manifest["shape"]).copy()
    return arr, manifest


# ---------------------------------------------------------- run manifests


def build_manifest(command: str, config: Mapping, inputs: Mapping[str, str], outputs: Iterable[Path], root) -> dict:
    root = Path(root)
    return {
        "tool": "prodspace",
        "version": __version__,
        "command": command,
        "config": dict(config),
        "inputs": dict(sorted(inputs.items())),
        "outputs": {str(Path(p).relative_to(root)): sha256_file(p) for p in sorted(outputs)},
    }


def verify_manifest(path) -> bool:
    """True if every output listed in the manifest exists with its recorded checksum.

    Accepts a single-command manifest or one with per-command ``entries``.
    """
    path = Path(path)
    if not path.exists():
        return False
    doc = json.loads(path.read_text())
    root = path.parent
    entries = doc["entries"].values() if "entries" in doc else [doc]
    for entry in entries:
        for rel, digest in entry.get("outputs", {}).items():
            p = root / rel
            if not p.exists() or sha256_file(p) != digest:
                return False
    return True
