"""Command-line shell for every batch pipeline stage."""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click

from . import compliance, impact, reports, survey, tiling
from .errors import KilnAuditError
from .evaluation import evaluate
from .ingest import (
    FeatureCategory,
    feature_layer_to_geojson,
    parse_feature_geojson,
    parse_population_grid,
    parse_quad_labels,
    parse_rule_table,
    read_kiln_dataset,
    write_kiln_dataset,
    write_population_grid,
    write_rule_table,
)
from .obb import CropGeoreference, merge_cross_tile
from .reports import canonical_json


def _fail(message: str) -> "NoReturn":  # noqa: F821 - forward ref for clarity
    raise click.ClickException(message)


def _write_out(path: str | None, text: str) -> None:
    if path in (None, "-"):
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text)


@click.group()
def main():
    """Brick-kiln inventory tooling: ingest, tile, merge, evaluate, audit."""


# -- ingest ------------------------------------------------------------------

@main.group()
def ingest():
    """Validate external files and copy them into a workspace."""


@ingest.command("features")
@click.argument("source", type=click.Path(exists=True))
@click.option("--category", required=True, type=click.Choice([c.value for c in FeatureCategory]))
@click.option("--workspace", required=True, type=click.Path(file_okay=False))
@click.option("--keep-all", is_flag=True, help="skip the category filter")
def ingest_features(source, category, workspace, keep_all):
    """Filter a GeoJSON FeatureCollection and store it as <category>.geojson."""
    try:
        layer, issues = parse_feature_geojson(
            Path(source).read_text(),
            FeatureCategory(category),
            feature_filter=(lambda props: True) if keep_all else None,
        )
    except KilnAuditError as e:
        _fail(str(e))
    for issue in issues:
        click.echo(f"warning: {issue.message}", err=True)
    out_dir = Path(workspace) / "features"
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{category}.geojson"
    out.write_text(json.dumps(feature_layer_to_geojson(layer), indent=2, sort_keys=True) + "\n")
    click.echo(f"{len(layer.features)} feature(s) -> {out}")


@ingest.command("labels")
@click.argument("source", type=click.Path(exists=True))
@click.option("--crop-id", required=True)
@click.option("--origin-x", type=float, required=True, help="Mercator x of the crop top-left")
@click.option("--origin-y", type=float, required=True, help="Mercator y of the crop top-left")
@click.option("--m-per-px", type=float, required=True)
@click.option("--crop-size", type=int, default=640, show_default=True)
@click.option("--workspace", required=True, type=click.Path(file_okay=False))
def ingest_labels(source, crop_id, origin_x, origin_y, m_per_px, crop_size, workspace):
    """Validate a quad label file and store it under labels/."""
    georef = CropGeoreference(crop_id, origin_x, origin_y, m_per_px, crop_size)
    try:
        dets = parse_quad_labels(Path(source).read_text(), georef)
    except KilnAuditError as e:
        _fail(str(e))
    out_dir = Path(workspace) / "labels"
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{crop_id}.txt"
    out.write_text(Path(source).read_text())
    meta = out_dir / f"{crop_id}.georef.json"
    meta.write_text(json.dumps({
        "crop_id": crop_id, "origin_x": origin_x, "origin_y": origin_y,
        "m_per_px": m_per_px, "crop_size_px": crop_size,
    }, indent=2, sort_keys=True) + "\n")
    click.echo(f"{len(dets)} detection(s) -> {out}")


@ingest.command("raster")
@click.argument("source", type=click.Path(exists=True))
@click.option("--workspace", required=True, type=click.Path(file_okay=False))
def ingest_raster(source, workspace):
    """Validate an ESRI ASCII population grid and store it as population.asc."""
    try:
        grid = parse_population_grid(Path(source).read_text())
    except KilnAuditError as e:
        _fail(str(e))
    out = Path(workspace) / "population.asc"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_population_grid(grid))
    click.echo(f"{grid.nrows}x{grid.ncols} grid, population {grid.total_population():.0f} -> {out}")


@ingest.command("rules")
@click.argument("source", type=click.Path(exists=True))
@click.option("--workspace", required=True, type=click.Path(file_okay=False))
def ingest_rules(source, workspace):
    """Validate a siting-rule table and store it as rules.csv."""
    try:
        rules = parse_rule_table(Path(source).read_text())
    except KilnAuditError as e:
        _fail(str(e))
    out = Path(workspace) / "rules.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_rule_table(rules))
    click.echo(f"{len(rules.states)} state(s) -> {out}")


# -- tiling ------------------------------------------------------------------

@main.command("crop-grid")
@click.option("--image-size", type=int, default=tiling.MOSAIC_SIZE, show_default=True)
@click.option("--crop-size", type=int, default=tiling.CROP_SIZE, show_default=True)
@click.option("--overlap", type=int, default=tiling.CROP_OVERLAP, show_default=True)
@click.option("-o", "--out", default="-")
def crop_grid(image_size, crop_size, overlap, out):
    """Crop origins covering a mosaic."""
    try:
        spec = tiling.CropSpec(image_size, crop_size, overlap)
        origins = tiling.crop_origins(spec)
    except KilnAuditError as e:
        _fail(str(e))
    _write_out(out, canonical_json({
        "image_size": image_size, "crop_size": crop_size, "overlap": overlap,
        "stride": spec.stride, "count": len(origins),
        "origins": [list(o) for o in origins],
    }))


@main.command("annotation-grid")
@click.option("--region", required=True, type=click.Path(exists=True),
              help="GeoJSON FeatureCollection of region polygons")
@click.option("--cell-km", type=float, default=1.0, show_default=True)
@click.option("-o", "--out", default="-")
def annotation_grid_cmd(region, cell_km, out):
    """1 km2 annotation grid over a region."""
    try:
        layer, issues = parse_feature_geojson(
            Path(region).read_text(), FeatureCategory.KILN, feature_filter=lambda p: True
        )
        if issues:
            _fail(issues[0].message)
        polys = [f.geometry for f in layer.features]
        cells = tiling.annotation_grid(polys, cell_km)
    except KilnAuditError as e:
        _fail(str(e))
    _write_out(out, json.dumps(tiling.grid_to_geojson(cells), indent=2, sort_keys=True) + "\n")
    click.echo(f"{len(cells)} cell(s)", err=True)


# -- detection post-processing -------------------------------------------------

@main.command("merge")
@click.option("--kilns", "kilns_path", required=True, type=click.Path(exists=True))
@click.option("--iou", type=float, default=0.33, show_default=True)
@click.option("--conf", type=float, default=0.25, show_default=True)
@click.option("--per-class", is_flag=True, help="suppress only within the same class")
@click.option("-o", "--out", default="-")
def merge(kilns_path, iou, conf, per_class, out):
    """Cross-tile NMS over a kiln dataset; one record per physical kiln."""
    try:
        records = read_kiln_dataset(Path(kilns_path).read_text())
        from .obb import Detection

        dets = [
            Detection(box=r.box, kiln_class=r.kiln_class, confidence=r.confidence,
                      id=r.id, source_crop=r.provenance.crop_id)
            for r in records
        ]
        kept = merge_cross_tile(dets, iou, conf, class_agnostic=not per_class)
        keep_ids = {d.id for d in kept}
        survivors = [r for r in records if r.id in keep_ids]
    except KilnAuditError as e:
        _fail(str(e))
    _write_out(out, write_kiln_dataset(survivors))
    click.echo(f"{len(records)} -> {len(survivors)} record(s)", err=True)


@main.command("eval")
@click.option("--dets", required=True, type=click.Path(exists=True))
@click.option("--truth", required=True, type=click.Path(exists=True))
@click.option("--crop-size", type=int, default=640, show_default=True)
@click.option("--iou", type=float, default=0.5, show_default=True)
@click.option("-o", "--out", default=None, help="also write the JSON report here")
def eval_cmd(dets, truth, crop_size, iou, out):
    """Evaluate a detection label file against a ground-truth label file."""
    georef_d = CropGeoreference("dets", 0.0, 0.0, 1.0, crop_size)
    georef_t = CropGeoreference("truth", 0.0, 0.0, 1.0, crop_size)
    try:
        d = parse_quad_labels(Path(dets).read_text(), georef_d)
        t = parse_quad_labels(Path(truth).read_text(), georef_t)
        report = evaluate(d, t, iou)
    except KilnAuditError as e:
        _fail(str(e))
    click.echo(report.to_table())
    if out:
        _write_out(out, canonical_json(report.to_dict()))


# -- analytics ----------------------------------------------------------------

@main.command("audit")
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--kilns", "kilns_path", required=True, type=click.Path(exists=True))
@click.option("--features", "features_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--states", "states_path", type=click.Path(exists=True),
              help="state boundary polygons for kilns without a state")
@click.option("--state", default=None, help="restrict the report to one state")
@click.option("--csv", "csv_path", type=click.Path(), help="per-violation CSV output")
@click.option("-o", "--out", default="-")
def audit(rules_path, kilns_path, features_dir, states_path, state, csv_path, out):
    """Distance-rule audit; emits the violation matrix as JSON."""
    try:
        rules = parse_rule_table(Path(rules_path).read_text())
        kilns = read_kiln_dataset(Path(kilns_path).read_text())
        layers = reports.load_feature_dir(features_dir)
        if states_path:
            boundaries = reports.load_named_polygons(Path(states_path).read_text())
            missing = reports.assign_states(kilns, boundaries)
            if missing:
                click.echo(f"warning: {len(missing)} kiln(s) outside all states", err=True)
        if state:
            kilns = [k for k in kilns if k.state == state]
        violations = compliance.audit_all(kilns, layers, rules)
        summary = compliance.aggregate(kilns, violations, rules)
    except KilnAuditError as e:
        _fail(str(e))
    if csv_path:
        Path(csv_path).write_text(compliance.violations_to_csv(violations))
    _write_out(out, canonical_json(summary.to_dict()))


@main.command("emissions")
@click.option("--counts", "counts_path", required=True, type=click.Path(exists=True))
@click.option("--production", "production_path", required=True, type=click.Path(exists=True))
@click.option("--rates", "rates_path", type=click.Path(exists=True))
@click.option("--csv", "csv_path", type=click.Path())
@click.option("-o", "--out", default="-")
def emissions(counts_path, production_path, rates_path, csv_path, out):
    """Per-state pollutant emissions in tonnes/day."""
    try:
        counts = reports.read_counts_csv(Path(counts_path).read_text())
        productions = reports.read_production_csv(Path(production_path).read_text())
        rates = (
            reports.read_rates_csv(Path(rates_path).read_text())
            if rates_path else impact.DEFAULT_EMISSION_RATES
        )
        rows = impact.emissions_table(counts, productions, rates)
    except KilnAuditError as e:
        _fail(str(e))
    if csv_path:
        Path(csv_path).write_text(impact.emissions_to_csv(rows))
    _write_out(out, canonical_json({"unit": "tonnes_per_day", "rows": rows}))


@main.command("exposure")
@click.option("--kilns", "kilns_path", required=True, type=click.Path(exists=True))
@click.option("--population", "population_path", required=True, type=click.Path(exists=True))
@click.option("--radii", default="0.8,2,5", show_default=True)
@click.option("--csv", "csv_path", type=click.Path())
@click.option("-o", "--out", default="-")
def exposure(kilns_path, population_path, radii, csv_path, out):
    """Unique population living within each radius of any kiln."""
    try:
        kilns = read_kiln_dataset(Path(kilns_path).read_text())
        grid = parse_population_grid(Path(population_path).read_text())
        radii_km = tuple(float(r) for r in radii.split(","))
        report = reports.exposure_report(kilns, grid, radii_km)
    except KilnAuditError as e:
        _fail(str(e))
    except ValueError as e:
        _fail(f"bad radii {radii!r}: {e}")
    if csv_path:
        Path(csv_path).write_text(impact.exposure_to_csv(report["rows"], radii_km))
    _write_out(out, canonical_json(report))


@main.command("survey-compare")
@click.option("--kilns", "kilns_path", required=True, type=click.Path(exists=True))
@click.option("--districts", "districts_path", required=True, type=click.Path(exists=True))
@click.option("--survey", "survey_path", required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", type=click.Path())
@click.option("-o", "--out", default="-")
def survey_compare(kilns_path, districts_path, survey_path, csv_path, out):
    """District-wise comparison of our counts against a field survey."""
    try:
        kilns = read_kiln_dataset(Path(kilns_path).read_text())
        districts = reports.load_named_polygons(Path(districts_path).read_text())
        counts = reports.read_survey_csv(Path(survey_path).read_text())
        comparison = survey.district_join(kilns, districts, counts)
    except KilnAuditError as e:
        _fail(str(e))
    if csv_path:
        Path(csv_path).write_text(survey.survey_comparison_csv(comparison))
    _write_out(out, canonical_json(comparison.to_dict()))


@main.command("date-kilns")
@click.option("--observations", "obs_path", required=True, type=click.Path(exists=True),
              help="CSV kiln_id,year,class with one row per year the kiln is visible")
@click.option("--start", type=int, default=2010, show_default=True)
@click.option("--end", type=int, default=2022, show_default=True)
@click.option("--csv", "csv_path", type=click.Path())
@click.option("-o", "--out", default="-")
def date_kilns(obs_path, start, end, csv_path, out):
    """Binary-search establishment and conversion years per kiln."""
    try:
        observations = reports.read_observations_csv(Path(obs_path).read_text())
        report = reports.dating_report(observations, (start, end))
    except KilnAuditError as e:
        _fail(str(e))
    if csv_path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kiln_id", "establishment", "established_class",
                    "conversion_year", "final_class", "queries"])
        for kiln_id, row in report["kilns"].items():
            w.writerow([
                kiln_id, row["establishment"], row["established_class"] or "",
                row["conversion_year"] or "", row["final_class"] or "",
                row["establishment_queries"] + row["conversion_queries"],
            ])
        Path(csv_path).write_text(buf.getvalue())
    _write_out(out, canonical_json(report))


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--workspace", type=click.Path(file_okay=False))
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, workspace, host, port):
    """Run the HTTP service."""
    from .server import ServerConfig, run

    try:
        if workspace and not config_path:
            cfg = ServerConfig(workspace=Path(workspace))
        else:
            cfg = ServerConfig.load(config_path)
        if workspace:
            cfg.workspace = Path(workspace)
        if host:
            cfg.host = host
        if port:
            cfg.port = port
    except KilnAuditError as e:
        _fail(str(e))
    run(cfg)


if __name__ == "__main__":
    sys.exit(main())
