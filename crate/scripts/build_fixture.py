#!/usr/bin/env python3
"""Build the offline fixture snapshot under data/fixture/.

Source: the `dslabs::gapminder` table as shipped in the `rdatasets` PyPI
package (annual country panel 1960-2016 compiled from World Bank and
Gapminder series). Only the indicators present in that table are written:

    life-expectancy-total   <- life_expectancy
    infant-mortality        <- infant_mortality
    gdp-per-capita          <- gdp / population   (constant 2000 US$)

Usage:
    pip install rdatasets==0.2.10
    python3 scripts/build_fixture.py [--csv exported_gapminder.csv] [--out data/fixture]

The output layout matches the cache written by `oilpanel fetch`:
one long-format CSV per indicator plus manifest.json.
"""

import argparse
import hashlib
import json
import math
import os

# Country name in the source table -> (ISO3, region label). Must agree with
# the static country table in crates/core/src/panel/countries.rs.
COUNTRIES = {
    "Malaysia": ("MYS", "East Asia"),
    "China": ("CHN", "East Asia"),
    "Hong Kong, China": ("HKG", "East Asia"),
    "Indonesia": ("IDN", "East Asia"),
    "Japan": ("JPN", "East Asia"),
    "South Korea": ("KOR", "East Asia"),
    "Lao": ("LAO", "East Asia"),
    "Mongolia": ("MNG", "East Asia"),
    "Philippines": ("PHL", "East Asia"),
    "Singapore": ("SGP", "East Asia"),
    "Thailand": ("THA", "East Asia"),
    "Cambodia": ("KHM", "East Asia"),
    "Vietnam": ("VNM", "East Asia"),
    "Ecuador": ("ECU", "Latin America and the Caribbean"),
    "Costa Rica": ("CRI", "Latin America and the Caribbean"),
    "Cuba": ("CUB", "Latin America and the Caribbean"),
    "Dominican Republic": ("DOM", "Latin America and the Caribbean"),
    "El Salvador": ("SLV", "Latin America and the Caribbean"),
    "Guatemala": ("GTM", "Latin America and the Caribbean"),
    "Honduras": ("HND", "Latin America and the Caribbean"),
    "Jamaica": ("JAM", "Latin America and the Caribbean"),
    "Nicaragua": ("NIC", "Latin America and the Caribbean"),
    "Panama": ("PAN", "Latin America and the Caribbean"),
    "Paraguay": ("PRY", "Latin America and the Caribbean"),
    "Puerto Rico": ("PRI", "Latin America and the Caribbean"),
    "Uruguay": ("URY", "Latin America and the Caribbean"),
    "Yemen": ("YEM", "Middle East and North Africa"),
    "Oman": ("OMN", "Middle East and North Africa"),
    "Syria": ("SYR", "Middle East and North Africa"),
    "Djibouti": ("DJI", "Middle East and North Africa"),
    "Egypt": ("EGY", "Middle East and North Africa"),
    "Israel": ("ISR", "Middle East and North Africa"),
    "Jordan": ("JOR", "Middle East and North Africa"),
    "Lebanon": ("LBN", "Middle East and North Africa"),
    "Morocco": ("MAR", "Middle East and North Africa"),
    "Tunisia": ("TUN", "Middle East and North Africa"),
    "Turkey": ("TUR", "Middle East and North Africa"),
    "Denmark": ("DNK", "North and Eastern Europe"),
    "Netherlands": ("NLD", "North and Eastern Europe"),
    "New Zealand": ("NZL", "North and Eastern Europe"),
    "Norway": ("NOR", "North and Eastern Europe"),
    "United Kingdom": ("GBR", "North and Eastern Europe"),
    "Belgium": ("BEL", "North and Eastern Europe"),
    "Finland": ("FIN", "North and Eastern Europe"),
    "France": ("FRA", "North and Eastern Europe"),
    "Germany": ("DEU", "North and Eastern Europe"),
    "Ireland": ("IRL", "North and Eastern Europe"),
    "Sweden": ("SWE", "North and Eastern Europe"),
    "Switzerland": ("CHE", "North and Eastern Europe"),
    "Czech Republic": ("CZE", "North and Eastern Europe"),
    "Hungary": ("HUN", "North and Eastern Europe"),
    "Poland": ("POL", "North and Eastern Europe"),
    "Greece": ("GRC", "Southern Europe"),
    "Italy": ("ITA", "Southern Europe"),
    "Portugal": ("PRT", "Southern Europe"),
    "Spain": ("ESP", "Southern Europe"),
    "Equatorial Guinea": ("GNQ", "Sub-Saharan Africa"),
    "Benin": ("BEN", "Sub-Saharan Africa"),
    "Burkina Faso": ("BFA", "Sub-Saharan Africa"),
    "Burundi": ("BDI", "Sub-Saharan Africa"),
    "Cameroon": ("CMR", "Sub-Saharan Africa"),
    "Cape Verde": ("CPV", "Sub-Saharan Africa"),
    "Central African Republic": ("CAF", "Sub-Saharan Africa"),
    "Chad": ("TCD", "Sub-Saharan Africa"),
    "Cote d'Ivoire": ("CIV", "Sub-Saharan Africa"),
    "Gambia": ("GMB", "Sub-Saharan Africa"),
    "Ghana": ("GHA", "Sub-Saharan Africa"),
    "Guinea": ("GIN", "Sub-Saharan Africa"),
    "Kenya": ("KEN", "Sub-Saharan Africa"),
    "Lesotho": ("LSO", "Sub-Saharan Africa"),
    "Liberia": ("LBR", "Sub-Saharan Africa"),
    "Madagascar": ("MDG", "Sub-Saharan Africa"),
    "Malawi": ("MWI", "Sub-Saharan Africa"),
    "Mali": ("MLI", "Sub-Saharan Africa"),
    "Mauritania": ("MRT", "Sub-Saharan Africa"),
    "Mauritius": ("MUS", "Sub-Saharan Africa"),
    "Mozambique": ("MOZ", "Sub-Saharan Africa"),
    "Namibia": ("NAM", "Sub-Saharan Africa"),
    "Niger": ("NER", "Sub-Saharan Africa"),
    "Senegal": ("SEN", "Sub-Saharan Africa"),
    "Somalia": ("SOM", "Sub-Saharan Africa"),
    "Sudan": ("SDN", "Sub-Saharan Africa"),
    "Swaziland": ("SWZ", "Sub-Saharan Africa"),
    "Tanzania": ("TZA", "Sub-Saharan Africa"),
    "Togo": ("TGO", "Sub-Saharan Africa"),
    "Uganda": ("UGA", "Sub-Saharan Africa"),
    "Zambia": ("ZMB", "Sub-Saharan Africa"),
    "Zimbabwe": ("ZWE", "Sub-Saharan Africa"),
    "Nigeria": ("NGA", "Sub-Saharan Africa"),
    "Rwanda": ("RWA", "Sub-Saharan Africa"),
    "Botswana": ("BWA", "Sub-Saharan Africa"),
    "Congo, Rep.": ("COG", "Sub-Saharan Africa"),
}

INDICATORS = {
    "life-expectancy-total": lambda r: r["life_expectancy"],
    "infant-mortality": lambda r: r["infant_mortality"],
    "gdp-per-capita": lambda r: (r["gdp"] / r["population"])
    if _ok(r["gdp"]) and _ok(r["population"]) and r["population"] > 0
    else float("nan"),
}

FIRST_YEAR, LAST_YEAR = 1960, 2014


def _ok(v):
    return v is not None and not (isinstance(v, float) and math.isnan(v))


def fmt(v):
    if not _ok(v):
        return ""
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return s if s else "0"


def load(csv_path):
    import pandas as pd

    if csv_path:
        return pd.read_csv(csv_path)
    from rdatasets import data

    return data("dslabs", "gapminder")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", help="CSV export of dslabs::gapminder")
    ap.add_argument("--out", default="data/fixture")
    args = ap.parse_args()

    df = load(args.csv)
    df = df[(df["year"] >= FIRST_YEAR) & (df["year"] <= LAST_YEAR)]
    os.makedirs(args.out, exist_ok=True)
    manifest = {"source": "dslabs::gapminder via rdatasets 0.2.10", "entries": []}

    for label, getter in INDICATORS.items():
        lines = ["country,region,year,indicator,value"]
        per_country = {}
        for name in sorted(COUNTRIES, key=lambda n: COUNTRIES[n][0]):
            iso, region = COUNTRIES[name]
            rows = df[df["country"] == name].sort_values("year")
            if rows.empty:
                continue
            body = []
            for _, r in rows.iterrows():
                body.append(f"{iso},{region},{int(r['year'])},{label},{fmt(getter(r))}")
            lines.extend(body)
            per_country[iso] = body
        path = os.path.join(args.out, f"{label}.csv")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        for iso, body in sorted(per_country.items()):
            h = hashlib.sha256("".join(l + "\n" for l in body).encode()).hexdigest()
            manifest["entries"].append(
                {
                    "indicator": label,
                    "country": iso,
                    "fetched_at": "snapshot",
                    "rows": len(body),
                    "sha256": h,
                }
            )

    with open(os.path.join(args.out, "manifest.json"), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
