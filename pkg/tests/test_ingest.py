import json
import math
import random

import pytest

from kilnaudit import geo
from kilnaudit.errors import ConfigError, ParseError
from kilnaudit.ingest import (
    Criterion,
    FeatureCategory,
    KilnRecord,
    Provenance,
    ValidationState,
    min_area_oriented_box,
    parse_feature_geojson,
    parse_population_grid,
    parse_quad_labels,
    parse_rule_table,
    read_kiln_dataset,
    write_kiln_dataset,
    write_population_grid,
    write_quad_labels,
    write_rule_table,
)
from kilnaudit.obb import (
    FRAME_MERCATOR,
    FRAME_PIXEL,
    CropGeoreference,
    KilnClass,
    OrientedBox,
    corners,
)

# Distance thresholds in meters per state and criterion. Hospital rules are
# not part of the published table; the fixture mirrors the school column for
# states that report hospital violations.
RULES_CSV = """\
state,inter_kiln,habitation,national_highway,river,state_highway,district_highway,railway,nature_reserve,orchard,wetland,school,religious,hospital
Uttar Pradesh,800,1000,300,-,300,100,200,5000,800,-,1000,1000,1000
Bihar,1000,800,300,500,200,-,200,-,800,500,800,-,800
West Bengal,300,800,200,200,200,-,200,5000,800,-,1000,1000,1000
Haryana,1000,800,-,-,-,-,-,1000,800,-,1000,-,1000
Punjab,1000,500,-,-,100,-,-,-,800,-,-,-,-
"""


def fc(features):
    return json.dumps({"type": "FeatureCollection", "features": features})


def feat(geom, props, fid=None):
    f = {"type": "Feature", "geometry": geom, "properties": props}
    if fid is not None:
        f["id"] = fid
    return f


def poly(coords):
    return {"type": "Polygon", "coordinates": [coords]}


SQUARE = [[77.0, 28.0], [77.1, 28.0], [77.1, 28.1], [77.0, 28.1], [77.0, 28.0]]


class TestFeatureGeojson:
    def test_habitation_filter(self):
        doc = fc([
            feat(poly(SQUARE), {"fclass": "residential", "osm_id": "1"}),
            feat(poly(SQUARE), {"fclass": "residential", "osm_id": "2"}),
            feat(poly(SQUARE), {"fclass": "industrial", "osm_id": "3"}),
        ])
        layer, issues = parse_feature_geojson(doc, FeatureCategory.HABITATION)
        assert not issues
        assert [f.id for f in layer.features] == ["1", "2"]

    def test_empty_collection(self):
        layer, issues = parse_feature_geojson(fc([]), FeatureCategory.RIVER)
        assert layer.features == [] and issues == []

    def test_highway_ref_prefixes(self):
        line = {"type": "LineString", "coordinates": [[77, 28], [77.2, 28.1]]}
        doc = fc([
            feat(line, {"ref": "NH48", "osm_id": "nh"}),
            feat(line, {"ref": "NE4", "osm_id": "ne"}),
            feat(line, {"ref": "SH12", "osm_id": "sh"}),
            feat(line, {"osm_id": "none"}),
        ])
        national, _ = parse_feature_geojson(doc, FeatureCategory.NATIONAL_HIGHWAY)
        assert [f.id for f in national.features] == ["nh", "ne"]
        state_hw, _ = parse_feature_geojson(doc, FeatureCategory.STATE_HIGHWAY)
        assert [f.id for f in state_hw.features] == ["sh"]

    def test_religious_filter(self):
        doc = fc([
            feat(poly(SQUARE), {"type": "temple"}),
            feat(poly(SQUARE), {"type": "mosque"}),
            feat(poly(SQUARE), {"type": "church"}),
            feat(poly(SQUARE), {"type": "office"}),
        ])
        layer, _ = parse_feature_geojson(doc, FeatureCategory.RELIGIOUS)
        assert len(layer.features) == 3

    def test_railway_unfiltered(self):
        line = {"type": "LineString", "coordinates": [[77, 28], [77.2, 28.1]]}
        doc = fc([feat(line, {}), feat(line, {"anything": 1})])
        layer, _ = parse_feature_geojson(doc, FeatureCategory.RAILWAY)
        assert len(layer.features) == 2

    def test_malformed_json_reports_offset(self):
        with pytest.raises(ParseError, match=r"byte \d+"):
            parse_feature_geojson('{"type": "FeatureCollection", ', FeatureCategory.RIVER)

    def test_invalid_geometry_reported_not_dropped(self):
        doc = fc([
            feat({"type": "Blob", "coordinates": []}, {"fclass": "river"}),
            feat({"type": "LineString", "coordinates": [[77, 28], [77.1, 28]]},
                 {"fclass": "river"}),
        ])
        layer, issues = parse_feature_geojson(doc, FeatureCategory.RIVER)
        assert len(layer.features) == 1
        assert len(issues) == 1 and "Blob" in issues[0].message

    def test_multipolygon_expanded(self):
        mp = {"type": "MultiPolygon", "coordinates": [[SQUARE], [SQUARE]]}
        doc = fc([feat(mp, {"fclass": "wetland", "osm_id": "w"})])
        layer, issues = parse_feature_geojson(doc, FeatureCategory.WETLAND)
        assert not issues
        assert [f.id for f in layer.features] == ["w#0", "w#1"]

    def test_not_a_collection(self):
        with pytest.raises(ParseError, match="FeatureCollection"):
            parse_feature_geojson('{"type": "Feature"}', FeatureCategory.RIVER)


GEOREF = CropGeoreference("crop7", origin_x=8_000_000.0, origin_y=3_400_000.0,
                          m_per_px=4.777314267823516, crop_size_px=640)


class TestQuadLabels:
    def test_axis_aligned_square(self):
        dets = parse_quad_labels("2 0.4 0.4 0.6 0.4 0.6 0.6 0.4 0.6\n", GEOREF)
        assert len(dets) == 1
        d = dets[0]
        assert d.kiln_class is KilnClass.ZIGZAG
        assert d.confidence == 1.0
        assert d.box.frame == FRAME_PIXEL
        assert d.box.cx == pytest.approx(0.5 * 640, abs=1e-9)
        assert d.box.cy == pytest.approx(0.5 * 640, abs=1e-9)
        assert d.box.w == pytest.approx(0.2 * 640, abs=1e-9)
        assert d.box.h == pytest.approx(0.2 * 640, abs=1e-9)
        assert d.box.theta == pytest.approx(0.0, abs=1e-9)

    def test_rotated_square_theta(self):
        r = 0.15
        pts = [(0.5 + r, 0.5), (0.5, 0.5 + r), (0.5 - r, 0.5), (0.5, 0.5 - r)]
        line = "1 " + " ".join(f"{x} {y}" for x, y in pts)
        d = parse_quad_labels(line, GEOREF)[0]
        assert d.kiln_class is KilnClass.FCBK
        assert d.box.theta == pytest.approx(math.pi / 4, abs=1e-9)
        assert d.box.w == pytest.approx(r * math.sqrt(2) * 640, rel=1e-9)

    def test_confidence_token(self):
        d = parse_quad_labels("0 0.4 0.4 0.6 0.4 0.6 0.6 0.4 0.6 0.75\n", GEOREF)[0]
        assert d.kiln_class is KilnClass.CFCBK
        assert d.confidence == 0.75

    def test_round_trip(self):
        rng = random.Random(13)
        text = ""
        for i in range(20):
            cx, cy = rng.uniform(200, 440), rng.uniform(200, 440)
            w, h = rng.uniform(20, 120), rng.uniform(20, 120)
            theta = rng.uniform(-math.pi / 2, math.pi / 2)
            box = OrientedBox(cx, cy, w, h, theta, FRAME_PIXEL)
            pts = [(x / 640, y / 640) for x, y in corners(box)]
            conf = round(rng.uniform(0.3, 1.0), 3)
            text += f"{i % 3} " + " ".join(f"{x:.9f} {y:.9f}" for x, y in pts)
            text += f" {conf}\n"
        dets = parse_quad_labels(text, GEOREF)
        written = write_quad_labels(dets, GEOREF)
        again = parse_quad_labels(written, GEOREF)
        assert len(again) == len(dets)
        for a, b in zip(dets, again):
            assert a.kiln_class == b.kiln_class
            assert b.confidence == pytest.approx(a.confidence, abs=1e-6)
            assert b.box.cx == pytest.approx(a.box.cx, abs=1e-3)
            assert b.box.cy == pytest.approx(a.box.cy, abs=1e-3)
            assert b.box.w == pytest.approx(a.box.w, abs=1e-3)
            assert b.box.h == pytest.approx(a.box.h, abs=1e-3)
            assert b.box.theta == pytest.approx(a.box.theta, abs=1e-6)

    def test_line_errors_carry_line_numbers(self):
        good = "2 0.4 0.4 0.6 0.4 0.6 0.6 0.4 0.6"
        with pytest.raises(ParseError, match="line 2"):
            parse_quad_labels(good + "\n2 0.1 0.2 0.3\n", GEOREF)
        with pytest.raises(ParseError, match="line 1"):
            parse_quad_labels("7 0.4 0.4 0.6 0.4 0.6 0.6 0.4 0.6", GEOREF)
        with pytest.raises(ParseError, match="line 1"):
            parse_quad_labels("2 0.4 0.4 1.6 0.4 0.6 0.6 0.4 0.6", GEOREF)

    def test_min_area_fit_collinear(self):
        with pytest.raises(Exception):
            min_area_oriented_box([(0, 0), (1, 1), (2, 2), (3, 3)], FRAME_PIXEL)


class TestPopulationGrid:
    def test_single_cell(self):
        grid = parse_population_grid(
            "ncols 1\nnrows 1\nxllcorner 77\nyllcorner 28\ncellsize 0.0083\n"
            "NODATA_value -9999\n42\n"
        )
        assert grid.total_population() == 42
        c = grid.cell_center(0, 0)
        assert c.lon == pytest.approx(77 + 0.5 * 0.0083)
        assert c.lat == pytest.approx(28 + 0.5 * 0.0083)

    def test_nodata_excluded(self):
        grid = parse_population_grid(
            "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
            "NODATA_value -1\n5 -1\n"
        )
        assert grid.total_population() == 5

    def test_three_by_three_centers(self):
        grid = parse_population_grid(
            "ncols 3\nnrows 3\nxllcorner 10\nyllcorner 20\ncellsize 0.5\n"
            "NODATA_value -9999\n1 2 3\n4 5 6\n7 8 9\n"
        )
        # row 0 is the northern row: its center sits at yll + (3 - 0 - 0.5)*cs
        assert grid.values[0, 0] == 1 and grid.values[2, 2] == 9
        c00 = grid.cell_center(0, 0)
        assert (c00.lon, c00.lat) == (pytest.approx(10.25), pytest.approx(21.25))
        c21 = grid.cell_center(2, 1)
        assert (c21.lon, c21.lat) == (pytest.approx(10.75), pytest.approx(20.25))

    def test_round_trip(self):
        text = (
            "ncols 3\nnrows 2\nxllcorner 76.5\nyllcorner 27.25\ncellsize 0.0083\n"
            "NODATA_value -9999\n1 0 42.5\n-9999 7 3\n"
        )
        grid = parse_population_grid(text)
        written = write_population_grid(grid)
        again = parse_population_grid(written)
        assert (again.values == grid.values).all()
        assert write_population_grid(again) == written  # byte-stable

    def test_payload_mismatch(self):
        with pytest.raises(ParseError, match="payload"):
            parse_population_grid(
                "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n"
            )

    def test_negative_population_rejected(self):
        with pytest.raises(ParseError, match="negative"):
            parse_population_grid(
                "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n-5\n"
            )


class TestRuleTable:
    def test_paper_thresholds(self):
        rules = parse_rule_table(RULES_CSV)
        assert rules.threshold("Uttar Pradesh", Criterion.INTER_KILN) == 800
        assert rules.threshold("Punjab", Criterion.HABITATION) == 500
        assert rules.threshold("Haryana", Criterion.RIVER) is None
        assert rules.threshold("West Bengal", Criterion.NATURE_RESERVE) == 5000
        assert rules.threshold("Bihar", Criterion.WETLAND) == 500
        assert rules.states == (
            "Uttar Pradesh", "Bihar", "West Bengal", "Haryana", "Punjab"
        )

    def test_spaced_criterion_names_accepted(self):
        rules = parse_rule_table(
            "state,Inter kiln,Religious places\nPunjab,1000,-\n"
        )
        assert rules.threshold("Punjab", Criterion.INTER_KILN) == 1000
        assert rules.threshold("Punjab", Criterion.RELIGIOUS) is None

    def test_unknown_criterion(self):
        with pytest.raises(ConfigError, match="unknown criterion"):
            parse_rule_table("state,airports\nPunjab,100\n")

    def test_negative_threshold(self):
        with pytest.raises(ConfigError, match="positive"):
            parse_rule_table("state,school\nPunjab,-100\n")

    def test_round_trip(self):
        rules = parse_rule_table(RULES_CSV)
        written = write_rule_table(rules)
        again = parse_rule_table(written)
        assert again == rules
        assert write_rule_table(again) == written


def make_kiln(i, cx=8_582_000.0, cy=3_324_000.0, state="Uttar Pradesh",
              cls=KilnClass.ZIGZAG, vstate=ValidationState.PENDING, conf=0.9,
              w=120.0, h=60.0, theta=0.35):
    return KilnRecord(
        id=f"kiln-{i:04d}",
        box=OrientedBox(cx, cy, w, h, theta, FRAME_MERCATOR),
        kiln_class=cls,
        confidence=conf,
        state=state,
        validation_state=vstate,
        provenance=Provenance(crop_id="crop7", model_run="run1"),
    )


class TestKilnDataset:
    def test_empty_round_trip(self):
        text = write_kiln_dataset([])
        assert read_kiln_dataset(text) == []
        assert write_kiln_dataset(read_kiln_dataset(text)) == text

    def test_three_kiln_round_trip(self):
        records = [
            make_kiln(0),
            make_kiln(1, cx=8_590_000.0, cls=KilnClass.FCBK, vstate=ValidationState.ACCEPTED),
            make_kiln(2, cy=3_330_000.0, theta=-1.2, conf=0.4),
        ]
        text = write_kiln_dataset(records)
        back = read_kiln_dataset(text)
        assert len(back) == 3
        for a, b in zip(records, back):
            assert b.id == a.id
            assert b.kiln_class == a.kiln_class
            assert b.validation_state == a.validation_state
            assert b.state == a.state
            assert b.confidence == pytest.approx(a.confidence, abs=1e-6)
            assert b.box.cx == pytest.approx(a.box.cx, abs=1e-3)
            assert b.box.cy == pytest.approx(a.box.cy, abs=1e-3)
            assert b.box.w == pytest.approx(a.box.w, abs=1e-3)
            assert b.box.h == pytest.approx(a.box.h, abs=1e-3)
            assert b.box.theta == pytest.approx(a.box.theta, abs=1e-9)
            assert b.provenance.crop_id == "crop7"

    def test_byte_stable_after_one_round(self):
        rng = random.Random(17)
        records = [
            make_kiln(
                i,
                cx=rng.uniform(7_000_000, 9_900_000),
                cy=rng.uniform(2_400_000, 3_500_000),
                w=rng.uniform(30, 300),
                h=rng.uniform(20, 200),
                theta=rng.uniform(-math.pi, math.pi),
                conf=round(rng.uniform(0, 1), 4),
            )
            for i in range(60)
        ]
        w1 = write_kiln_dataset(records)
        w2 = write_kiln_dataset(read_kiln_dataset(w1))
        assert w2 == w1

    def test_corner_area_consistency_enforced(self):
        text = write_kiln_dataset([make_kiln(0)])
        doc = json.loads(text)
        doc["features"][0]["properties"]["w_m"] = 500.0  # corners no longer agree
        with pytest.raises(ParseError, match="area"):
            read_kiln_dataset(json.dumps(doc))

    def test_missing_property_reported(self):
        text = write_kiln_dataset([make_kiln(0)])
        doc = json.loads(text)
        del doc["features"][0]["properties"]["theta"]
        with pytest.raises(ParseError, match="theta"):
            read_kiln_dataset(json.dumps(doc))

    def test_duplicate_ids_rejected(self):
        a, b = make_kiln(0), make_kiln(0, cx=8_600_000.0)
        with pytest.raises(ParseError, match="duplicate"):
            read_kiln_dataset(write_kiln_dataset([a, b]))

    def test_shoelace_consistency_of_written_corners(self):
        rec = make_kiln(5, theta=0.7, w=150.0, h=75.0)
        doc = json.loads(write_kiln_dataset([rec]))
        ring = doc["features"][0]["geometry"]["coordinates"][0][:4]
        merc = [geo.wgs84_to_mercator(geo.GeoPoint(x, y)) for x, y in ring]
        area = 0.0
        for k in range(4):
            x1, y1 = merc[k].x, merc[k].y
            x2, y2 = merc[(k + 1) % 4].x, merc[(k + 1) % 4].y
            area += x1 * y2 - x2 * y1
        area = abs(area) / 2
        assert area == pytest.approx(150.0 * 75.0, rel=1e-3)
