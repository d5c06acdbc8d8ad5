"""Workspace-level report builders and the small CSV formats feeding them.
The CLI and the HTTP service both emit reports through canonical_json, so
the two surfaces produce byte-identical output for identical inputs."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from . import compliance, geo, impact, survey
from .errors import ConfigError, ParseError
from .ingest import (
    ComplianceRuleSet,
    FeatureCategory,
    FeatureLayer,
    PopulationGrid,
    parse_feature_geojson,
    parse_population_grid,
    parse_rule_table,
    read_kiln_dataset,
)
from .obb import KilnClass


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# workspace inputs
# ---------------------------------------------------------------------------

def load_feature_dir(path) -> list[FeatureLayer]:
    """Read every <category>.geojson in a directory; file stem names the
    category. Features were filtered at ingest time, so no filter here."""
    layers = []
    for f in sorted(Path(path).glob("*.geojson")):
        try:
            category = FeatureCategory(f.stem)
        except ValueError:
            raise ConfigError(f"{f.name}: not a known feature category") from None
        layer, issues = parse_feature_geojson(
            f.read_text(), category, feature_filter=lambda props: True
        )
        if issues:
            raise ParseError(f"{f.name}: {issues[0].message}")
        layers.append(layer)
    return layers


def load_named_polygons(data, name_keys=("name", "state", "district")) -> list:
    """GeoJSON polygons with a name property -> [(name, Polygon)]."""
    layer, issues = parse_feature_geojson(
        data, FeatureCategory.KILN, feature_filter=lambda props: True
    )
    if issues:
        raise ParseError(issues[0].message)
    out = []
    for f in layer.features:
        name = next((f.properties[k] for k in name_keys if k in f.properties), None)
        if name is None:
            raise ParseError(f"feature {f.id}: no name property among {name_keys}")
        if not isinstance(f.geometry, geo.Polygon):
            raise ParseError(f"feature {f.id}: boundaries must be polygons")
        out.append((str(name), f.geometry))
    return out


def assign_states(kilns, state_polygons) -> list:
    """Set each kiln's state by centroid containment; kilns already carrying
    a state keep it. Returns ids that fall outside every polygon."""
    unassigned = []
    for k in kilns:
        if k.state:
            continue
        c = k.centroid
        containing = sorted(
            name for name, poly in state_polygons if geo.point_in_polygon(c, poly)
        )
        if containing:
            k.state = containing[0]
        else:
            unassigned.append(k.id)
    return unassigned


def read_kilns_file(path) -> list:
    return read_kiln_dataset(Path(path).read_text())


def read_rules_file(path) -> ComplianceRuleSet:
    return parse_rule_table(Path(path).read_text())


def read_population_file(path) -> PopulationGrid:
    return parse_population_grid(Path(path).read_text())


# ---------------------------------------------------------------------------
# small CSV inputs
# ---------------------------------------------------------------------------

def _csv_rows(text):
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ParseError("CSV needs a header and at least one row")
    return [c.strip() for c in rows[0]], rows[1:]


def read_counts_csv(text) -> dict:
    """state,CFCBK,FCBK,Zigzag -> {state: {KilnClass: count}}"""
    header, rows = _csv_rows(text)
    want = ["state"] + [c.value for c in KilnClass]
    if [h.lower() for h in header] != [w.lower() for w in want]:
        raise ParseError(f"counts header must be {','.join(want)}")
    out = {}
    for row in rows:
        state = row[0].strip()
        counts = {}
        for cls, cell in zip(KilnClass, row[1:]):
            n = int(cell)
            if n < 0:
                raise ParseError(f"{state}: negative count {n}")
            counts[cls] = n
        out[state] = counts
    return out


def read_production_csv(text) -> list:
    """state,daily_tonnes or state,annual_tonnes (divided by 180)."""
    header, rows = _csv_rows(text)
    cols = [h.lower() for h in header]
    if cols == ["state", "daily_tonnes"]:
        annual = False
    elif cols == ["state", "annual_tonnes"]:
        annual = True
    else:
        raise ParseError("production header must be state,daily_tonnes or state,annual_tonnes")
    out = []
    for row in rows:
        value = float(row[1])
        daily = impact.daily_production(value) if annual else value
        out.append(impact.StateProduction(row[0].strip(), daily))
    return out


def read_rates_csv(text) -> impact.EmissionRates:
    """pollutant,cfcbk_fcbk,zigzag rows for the four pollutants."""
    header, rows = _csv_rows(text)
    if [h.lower() for h in header] != ["pollutant", "cfcbk_fcbk", "zigzag"]:
        raise ParseError("rates header must be pollutant,cfcbk_fcbk,zigzag")
    old, zz = {}, {}
    for row in rows:
        pol = row[0].strip()
        old[pol] = float(row[1])
        zz[pol] = float(row[2])
    return impact.EmissionRates(old_tech=old, zigzag=zz)


def read_survey_csv(text) -> dict:
    header, rows = _csv_rows(text)
    if [h.lower() for h in header] != ["district", "count"]:
        raise ParseError("survey header must be district,count")
    out = {}
    for row in rows:
        out[row[0].strip()] = int(row[1])
    return out


def read_observations_csv(text) -> dict:
    """kiln_id,year,class presence observations -> {kiln: {year: class}}."""
    header, rows = _csv_rows(text)
    if [h.lower() for h in header] != ["kiln_id", "year", "class"]:
        raise ParseError("observations header must be kiln_id,year,class")
    out: dict = {}
    for row in rows:
        kiln, year, cls = row[0].strip(), int(row[1]), row[2].strip()
        KilnClass(cls)  # validates
        out.setdefault(kiln, {})[year] = cls
    return out


# ---------------------------------------------------------------------------
# report builders
# ---------------------------------------------------------------------------

def compliance_report(kilns, layers, rules, state: str | None = None) -> dict:
    if state is not None:
        kilns = [k for k in kilns if k.state == state]
    violations = compliance.audit_all(kilns, layers, rules)
    summary = compliance.aggregate(kilns, violations, rules)
    return summary.to_dict()


def emissions_report(per_state_counts, productions, rates=None) -> dict:
    rows = impact.emissions_table(
        per_state_counts, productions, rates or impact.DEFAULT_EMISSION_RATES
    )
    return {"unit": "tonnes_per_day", "rows": rows}


def exposure_report(kilns, grid, radii_km=impact.EXPOSURE_RADII_KM) -> dict:
    by_state: dict = {}
    for k in kilns:
        if k.discarded:
            continue
        by_state.setdefault(k.state or "unknown", []).append(k.centroid)
    rows = impact.exposure_by_state(by_state, grid, radii_km)
    return {"unit": "persons", "radii_km": list(radii_km), "rows": rows}


def survey_report(kilns, districts, survey_counts) -> dict:
    comparison = survey.district_join(kilns, districts, survey_counts)
    return comparison.to_dict()


def dating_report(observations, year_range=survey.DEFAULT_YEAR_RANGE) -> dict:
    rows = {}
    for kiln_id in sorted(observations):
        history = observations[kiln_id]
        result = survey.date_kiln(lambda y, h=history: h.get(y), year_range)
        rows[kiln_id] = {
            "establishment": result.establishment,
            "established_class": result.established_class,
            "conversion_year": result.conversion_year,
            "final_class": result.final_class,
            "establishment_queries": result.establishment_queries,
            "conversion_queries": result.conversion_queries,
        }
    return {"year_range": list(year_range), "kilns": rows}
