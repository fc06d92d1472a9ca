"""Deterministic synthetic BACI-style trade data for tests and demos.

Countries hold random subsets of "capabilities" and products require
subsets; a country exports a product (at a large value) when it holds every
required capability, and at a small noise value otherwise. This yields a
nested country x product structure like real trade data.
"""

from __future__ import annotations

import csv
import io

import numpy as np

ISO3 = [
    "KEN", "MOZ", "RWA", "TZA", "ZMB", "USA", "CHN", "DEU", "JPN", "BRA",
    "IND", "FRA", "GBR", "ITA", "KOR", "MEX", "CAN", "AUS", "ZAF", "EGY",
    "NGA", "ETH", "UGA", "GHA", "PER", "CHL", "ARG", "COL", "IDN", "THA",
]


def hs6_codes(n: int, rng: np.random.Generator) -> list[str]:
    """Distinct 6-digit codes spread over HS chapters 01-97."""
    pool = rng.choice(np.arange(10100, 970000), size=n * 3, replace=False)
    return sorted(f"{int(c):06d}" for c in pool[:n])


def capability_matrix(n_countries, n_products, n_caps, seed):
    rng = np.random.default_rng(seed)
    country_caps = rng.random((n_countries, n_caps)) < rng.uniform(0.15, 0.9, size=(n_countries, 1))
    product_caps = rng.random((n_products, n_caps)) < rng.uniform(0.02, 0.25, size=(n_products, 1))
    # c can make p iff p's requirements are a subset of c's capabilities
    missing = (~country_caps).astype(np.int32) @ product_caps.T.astype(np.int32)
    return missing == 0, rng


def generate_csv(
    n_countries: int = 30,
    n_products: int = 200,
    years=(2000, 2003, 2004, 2005),
    seed: int = 0,
    n_caps: int = 20,
    partners: int = 3,
) -> str:
    """BACI-layout CSV text (``t,i,j,k,v,q``) with numeric country codes."""
    can, rng = capability_matrix(n_countries, n_products, n_caps, seed)
    products = hs6_codes(n_products, rng)
    codes = [str(100 + 4 * c) for c in range(n_countries)]
    size = rng.lognormal(0.0, 1.0, size=n_countries)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "i", "j", "k", "v", "q"])
    for y in years:
        drift = rng.lognormal(0.0, 0.1, size=(n_countries, n_products))
        for c in range(n_countries):
            for p in range(n_products):
                if can[c, p]:
                    total = 1000.0 * size[c] * drift[c, p] * rng.lognormal(0.0, 1.0)
                elif rng.random() < 0.3:
                    total = rng.uniform(0.001, 0.5)
                else:
                    continue
                dests = rng.choice([d for d in range(n_countries) if d != c], size=partners, replace=False)
                split = rng.dirichlet(np.ones(partners))
                for d, s in zip(dests, split):
                    w.writerow([y, codes[c], codes[d], int(products[p]), f"{total * s:.3f}", f"{total * s / 7:.3f}"])
    return buf.getvalue()


def country_registry_csv(n_countries: int = 30) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["code", "iso3", "name"])
    for c in range(n_countries):
        iso = ISO3[c] if c < len(ISO3) else f"X{c:02d}"
        w.writerow([100 + 4 * c, iso, iso])
    return buf.getvalue()


def product_registry_csv(n_products: int = 200, seed: int = 0, n_caps: int = 20, n_countries: int = 30) -> str:
    _, rng = capability_matrix(n_countries, n_products, n_caps, seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hs6", "name"])
    for code in hs6_codes(n_products, rng):
        w.writerow([code, f"Product {code}"])
    return buf.getvalue()
