"""Build crates/core/data/world.geojson from the `world-countries` npm package.

Usage: python3 tools/build_world.py <path-to-extracted-world-countries-package> <out>

The output is a single GeoJSON FeatureCollection. Each feature carries
{id, name, aliases, region, continent, area_km2, neighbors, selectable}.
Geometry is simplified as one polygonal coverage so shared borders stay shared.
"""
import json
import sys

import shapely
from shapely.geometry import shape, mapping, MultiPolygon, Polygon

# UN members plus the non-member entries needed for real land borders.
EXTRA = {"PSE", "ESH", "VAT"}
NOT_SELECTABLE = {"PSE", "ESH", "VAT"}
# Region overrides. Sudan is filed under Eastern Africa so "Northern Africa"
# is the Mediterranean rim (Algeria, Libya, Egypt, Morocco, Tunisia, W. Sahara).
REGION_OVERRIDE = {"SDN": "Eastern Africa"}
EXTRA_ALIASES = {
    "USA": ["USA", "US", "America", "United States of America"],
    "GBR": ["UK", "Britain", "Great Britain", "England"],
    "TUR": ["Turkey"],
    "NLD": ["Holland"],
    "CIV": ["Cote d'Ivoire", "Côte d'Ivoire"],
    "CZE": ["Czech Republic"],
    "MMR": ["Burma"],
    "SWZ": ["Swaziland"],
    "CPV": ["Cabo Verde"],
    "MKD": ["Macedonia"],
    "COD": ["Democratic Republic of the Congo", "Congo-Kinshasa"],
    "COG": ["Congo", "Congo-Brazzaville"],
    "PRK": ["DPRK"],
}
# Maritime-only pairs listed as land borders upstream.
DROP_BORDERS = {("LKA", "IND")}
TOLERANCE = 0.02
DIGITS = 3


def rnd(geom):
    return shapely.set_precision(geom, 10 ** -DIGITS)


def main(pkg, out):
    data = json.load(open(f"{pkg}/countries.json"))
    by = {c["cca3"]: c for c in data}
    ids = sorted(c["cca3"] for c in data if c["unMember"] or c["cca3"] in EXTRA)

    geoms = []
    for cid in ids:
        fc = json.load(open(f"{pkg}/data/{cid.lower()}.geo.json"))
        parts = [shape(f["geometry"]) for f in fc["features"]]
        g = shapely.union_all(parts)
        if not g.is_valid:
            g = shapely.make_valid(g)
        geoms.append(g)

    simplified = shapely.coverage_simplify(geoms, TOLERANCE, simplify_boundary=True)

    features = []
    seen_alias = {}
    for cid, orig, g in zip(ids, geoms, simplified):
        if g.is_empty or g.area < orig.area * 0.2:
            g = orig
        g = rnd(g)
        if g.is_empty:
            g = orig
        polys = [p for p in getattr(g, "geoms", [g]) if isinstance(p, Polygon) and not p.is_empty]
        g = MultiPolygon(polys)
        c = by[cid]
        name = c["name"]["common"]
        aliases = []
        for a in [c["name"]["official"], *c.get("altSpellings", []), *EXTRA_ALIASES.get(cid, [])]:
            key = a.casefold()
            if len(a) < 4 and cid not in EXTRA_ALIASES:
                continue
            if key == name.casefold() or a in aliases:
                continue
            aliases.append(a)
        for a in [name, *aliases]:
            seen_alias.setdefault(a.casefold(), set()).add(cid)
        neighbors = sorted(b for b in c["borders"] if b in ids and (cid, b) not in DROP_BORDERS)
        features.append({
            "type": "Feature",
            "properties": {
                "id": cid,
                "name": name,
                "aliases": aliases,
                "region": REGION_OVERRIDE.get(cid, c["subregion"]),
                "continent": c["region"],
                "area_km2": c["area"],
                "neighbors": neighbors,
                "selectable": cid not in NOT_SELECTABLE,
            },
            "geometry": mapping(g),
        })
    # Drop aliases that collide between countries.
    clashes = {k for k, v in seen_alias.items() if len(v) > 1}
    for f in features:
        p = f["properties"]
        p["aliases"] = [a for a in p["aliases"] if a.casefold() not in clashes]
        if p["name"].casefold() in clashes:
            raise SystemExit(f"name clash: {p['name']}")
    # Neighbors must be symmetric in the shipped file.
    nb = {f["properties"]["id"]: set(f["properties"]["neighbors"]) for f in features}
    for a, bs in nb.items():
        for b in bs:
            if a not in nb[b]:
                raise SystemExit(f"asymmetric {a}/{b}")

    with open(out, "w") as fh:
        fh.write('{"type":"FeatureCollection","features":[\n')
        fh.write(",\n".join(json.dumps(f, ensure_ascii=False, separators=(",", ":")) for f in features))
        fh.write("\n]}\n")
    print(f"{len(features)} features, {sum(f['properties']['selectable'] for f in features)} selectable, clashes={sorted(clashes)}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
