import random

import pytest

from kilnaudit import geo
from kilnaudit.compliance import (
    KilnCentroidIndex,
    _StrTree,
    aggregate,
    audit_all,
    audit_kiln,
    build_index,
    violations_to_csv,
)
from kilnaudit.errors import ConfigError
from kilnaudit.ingest import (
    ComplianceRuleSet,
    Criterion,
    Feature,
    FeatureCategory,
    FeatureLayer,
    parse_rule_table,
)
from oracles import brute_force_audit
from scenes import make_kiln, offset_point, random_rules, random_scene
from test_ingest import RULES_CSV


@pytest.fixture(scope="module")
def rules():
    return parse_rule_table(RULES_CSV)


BASE = geo.GeoPoint(77.3, 28.2)


def _violation_key(violations_by_kiln):
    return {
        kiln_id: sorted((v.criterion, v.feature_id) for v in vs)
        for kiln_id, vs in violations_by_kiln.items()
    }


class TestStrTree:
    def test_empty(self):
        assert _StrTree([]).query(-1, -1, 1, 1) == []

    def test_single(self):
        tree = _StrTree([(0, 0, 1, 1)])
        assert tree.query(0.5, 0.5, 2, 2) == [0]
        assert tree.query(5, 5, 6, 6) == []

    def test_matches_brute_force(self):
        rng = random.Random(21)
        boxes = []
        for _ in range(2000):
            x, y = rng.uniform(0, 1000), rng.uniform(0, 1000)
            boxes.append((x, y, x + rng.uniform(0, 20), y + rng.uniform(0, 20)))
        tree = _StrTree(boxes)
        for _ in range(100):
            qx, qy = rng.uniform(0, 1000), rng.uniform(0, 1000)
            r = rng.uniform(1, 80)
            window = (qx - r, qy - r, qx + r, qy + r)
            expected = sorted(
                i for i, b in enumerate(boxes)
                if not (b[0] > window[2] or b[2] < window[0]
                        or b[1] > window[3] or b[3] < window[1])
            )
            assert sorted(tree.query(*window)) == expected


class TestSpatialIndex:
    def test_empty_layers(self):
        index = build_index([])
        assert list(index.candidates(BASE, 10_000)) == []

    def test_single_point_found(self):
        layer = FeatureLayer(FeatureCategory.HOSPITAL)
        layer.features.append(Feature("h1", geo.Point(offset_point(BASE, 300, 0)), {}))
        index = build_index([layer])
        hit = index.nearest_within(BASE, 1000, FeatureCategory.HOSPITAL)
        assert hit is not None
        assert hit[1].id == "h1"
        assert hit[0] == pytest.approx(300, abs=0.5)
        assert index.nearest_within(BASE, 200, FeatureCategory.HOSPITAL) is None

    def test_radius_query_equals_brute_force_10k(self):
        rng = random.Random(22)
        layer = FeatureLayer(FeatureCategory.SCHOOL)
        pts = []
        for i in range(10_000):
            p = geo.GeoPoint(77.0 + rng.uniform(0, 0.4), 28.0 + rng.uniform(0, 0.4))
            pts.append(p)
            layer.features.append(Feature(f"s{i}", geo.Point(p), {}))
        index = build_index([layer])
        for _ in range(100):
            q = geo.GeoPoint(77.0 + rng.uniform(0, 0.4), 28.0 + rng.uniform(0, 0.4))
            r = rng.uniform(200, 5000)
            exact = {
                f.id
                for _, f in index.candidates(q, r)
                if geo.point_to_geometry_distance(q, f.geometry) < r
            }
            brute = {
                f"s{i}" for i, p in enumerate(pts)
                if geo.haversine_distance(q, p) < r
            }
            assert exact == brute


class TestAuditKiln:
    def test_habitation_999m(self, rules):
        # habitation polygon whose nearest edge sits 999 m due north
        kiln = make_kiln(0, BASE, state="Uttar Pradesh")
        corner = offset_point(BASE, -500, 999.0)
        ring = (
            corner,
            offset_point(corner, 1000, 0),
            offset_point(corner, 1000, 800),
            offset_point(corner, 0, 800),
            corner,
        )
        layer = FeatureLayer(FeatureCategory.HABITATION)
        layer.features.append(Feature("hab1", geo.Polygon(ring), {}))
        violations = audit_kiln(kiln, build_index([layer]), rules,
                                KilnCentroidIndex([kiln]))
        assert [(v.criterion, v.feature_id) for v in violations] == [
            (Criterion.HABITATION, "hab1")
        ]
        assert violations[0].distance_m == pytest.approx(999.0, abs=0.2)
        assert violations[0].threshold_m == 1000

    def test_inter_kiln_1200m_bihar_ok(self, rules):
        a = make_kiln(0, BASE, state="Bihar")
        b = make_kiln(1, offset_point(BASE, 0, 1200.0), state="Bihar")
        idx = build_index([])
        kidx = KilnCentroidIndex([a, b])
        assert audit_kiln(a, idx, rules, kidx) == []
        assert audit_kiln(b, idx, rules, kidx) == []
        # and at 799 m in Uttar Pradesh (threshold 800) both violate
        c = make_kiln(2, BASE, state="Uttar Pradesh")
        d = make_kiln(3, offset_point(BASE, 0, 799.0), state="Uttar Pradesh")
        kidx2 = KilnCentroidIndex([c, d])
        va = audit_kiln(c, idx, rules, kidx2)
        vb = audit_kiln(d, idx, rules, kidx2)
        assert [v.criterion for v in va] == [Criterion.INTER_KILN]
        assert [v.criterion for v in vb] == [Criterion.INTER_KILN]
        assert va[0].distance_m == pytest.approx(799.0, abs=0.1)

    def test_inside_nature_reserve_west_bengal(self, rules):
        kiln = make_kiln(0, BASE, state="West Bengal")
        ring = (
            offset_point(BASE, -2000, -2000),
            offset_point(BASE, 2000, -2000),
            offset_point(BASE, 2000, 2000),
            offset_point(BASE, -2000, 2000),
            offset_point(BASE, -2000, -2000),
        )
        layer = FeatureLayer(FeatureCategory.NATURE_RESERVE)
        layer.features.append(Feature("nr1", geo.Polygon(ring), {}))
        violations = audit_kiln(kiln, build_index([layer]), rules,
                                KilnCentroidIndex([kiln]))
        nr = [v for v in violations if v.criterion is Criterion.NATURE_RESERVE]
        assert len(nr) == 1
        assert nr[0].distance_m == 0.0
        assert nr[0].threshold_m == 5000

    def test_unknown_state_errors(self, rules):
        kiln = make_kiln(0, BASE, state="Atlantis")
        with pytest.raises(ConfigError, match="Atlantis"):
            audit_kiln(kiln, build_index([]), rules, KilnCentroidIndex([kiln]))

    def test_threshold_not_inclusive(self, rules):
        # exactly at the threshold is compliant; violation needs strictly less
        kiln = make_kiln(0, BASE, state="Uttar Pradesh")
        layer = FeatureLayer(FeatureCategory.RAILWAY)
        layer.features.append(
            Feature("r1", geo.Polyline((
                offset_point(BASE, -800, 200.0), offset_point(BASE, 800, 200.0),
            )), {})
        )
        violations = audit_kiln(kiln, build_index([layer]), rules,
                                KilnCentroidIndex([kiln]))
        assert violations == []


class TestOracleEquivalence:
    def test_indexed_equals_brute_force(self, rules):
        rng = random.Random(30)
        for trial in range(6):
            kilns, layers = random_scene(
                rng, n_kilns=rng.randint(10, 80), n_features=rng.randint(30, 300)
            )
            rule_set = random_rules(rng, ("S0", "S1"))
            fast = audit_all(kilns, layers, rule_set)
            slow = brute_force_audit(kilns, layers, rule_set)
            assert _violation_key(fast) == _violation_key(slow)
            flat_fast = {
                (k, v.criterion, v.feature_id): v.distance_m
                for k, vs in fast.items() for v in vs
            }
            for key, vs in slow.items():
                for v in vs:
                    assert abs(flat_fast[(key, v.criterion, v.feature_id)] - v.distance_m) <= 1e-6

    def test_discarded_kilns_excluded(self, rules):
        a = make_kiln(0, BASE, state="Uttar Pradesh")
        b = make_kiln(1, offset_point(BASE, 0, 500.0), state="Uttar Pradesh",
                      discarded=True)
        result = audit_all([a, b], [], parse_rule_table(RULES_CSV))
        assert set(result) == {"k0000"}
        assert result["k0000"] == []  # the discarded neighbor cannot trigger inter-kiln

    def test_monotone_in_threshold(self):
        rng = random.Random(31)
        kilns, layers = random_scene(rng, 40, 150, states=("S0",))
        for t_low, t_high in ((200.0, 500.0), (500.0, 1000.0), (1000.0, 5000.0)):
            low = ComplianceRuleSet({("S0", Criterion.HABITATION): t_low}, ("S0",))
            high = ComplianceRuleSet({("S0", Criterion.HABITATION): t_high}, ("S0",))
            v_low = {k for k, vs in audit_all(kilns, layers, low).items() if vs}
            v_high = {k for k, vs in audit_all(kilns, layers, high).items() if vs}
            assert v_low <= v_high

    def test_inter_kiln_symmetric(self):
        rng = random.Random(32)
        kilns, layers = random_scene(rng, 60, 10, states=("S0",))
        rule_set = ComplianceRuleSet({("S0", Criterion.INTER_KILN): 1000.0}, ("S0",))
        result = audit_all(kilns, layers, rule_set)
        violators = {k for k, vs in result.items() if vs}
        for kiln_id, vs in result.items():
            for v in vs:
                assert v.feature_id in violators


class TestAggregate:
    def test_no_violations(self, rules):
        kilns = [make_kiln(i, offset_point(BASE, 5000.0 * i, 0), state="Punjab")
                 for i in range(3)]
        summary = aggregate(kilns, {k.id: [] for k in kilns}, rules)
        assert summary.non_compliant["Punjab"] == 0
        assert summary.percentage["Punjab"] == 0
        assert summary.kiln_count["Total"] == 3

    def test_every_kiln_violates(self, rules):
        kilns = [make_kiln(i, BASE, state="Punjab") for i in range(4)]
        violations = {
            k.id: [type("V", (), {})] for k in kilns
        }
        # use real Violation objects instead of stubs
        from kilnaudit.compliance import Violation

        violations = {
            k.id: [Violation(k.id, Criterion.HABITATION, 100.0, 500.0, "hab")]
            for k in kilns
        }
        summary = aggregate(kilns, violations, rules)
        assert summary.non_compliant["Punjab"] == 4
        assert summary.percentage["Punjab"] == 100

    def test_paper_percentage_arithmetic(self, rules):
        # aggregate counts reported for Uttar Pradesh: 13296 of 17335 -> 77%
        from kilnaudit.compliance import _round_half_up

        assert _round_half_up(100.0 * 13296 / 17335) == 77
        assert _round_half_up(100.0 * 3997 / 6048) == 66
        assert _round_half_up(100.0 * 2081 / 3105) == 67
        assert _round_half_up(100.0 * 1162 / 2079) == 56
        assert _round_half_up(100.0 * 866 / 2071) == 42
        assert _round_half_up(100.0 * 21402 / 30638) == 70

    def test_undefined_rules_render_null(self, rules):
        kilns = [make_kiln(0, BASE, state="Punjab")]
        summary = aggregate(kilns, {"k0000": []}, rules)
        d = summary.to_dict()
        assert d["violations"]["river"]["Punjab"] is None
        assert d["violations"]["habitation"]["Punjab"] == 0

    def test_twenty_kiln_planted_fixture(self, rules):
        # 20 kilns in Uttar Pradesh on a 2 km grid (no inter-kiln violations
        # at 800 m), with hand-planted violations:
        #   k0: hospital 500 m north          -> hospital
        #   k1: inside a habitation polygon   -> habitation (0 m)
        #   k2: school 999 m north            -> school
        #   k3: railway 150 m north           -> railway
        #   k4 & k5: moved 600 m apart        -> inter-kiln (both)
        #   k6: orchard edge 900 m north      -> none (threshold 800; the
        #       orchard sits midway between grid rows, 900 m from each)
        kilns = []
        for i in range(20):
            center = offset_point(BASE, 2000.0 * (i % 5), 2000.0 * (i // 5))
            kilns.append(make_kiln(i, center, state="Uttar Pradesh"))
        kilns[4] = make_kiln(4, offset_point(kilns[5].centroid, 0, 600.0),
                             state="Uttar Pradesh")

        def hexish(center, r):
            ring = (
                offset_point(center, -r, -r), offset_point(center, r, -r),
                offset_point(center, r, r), offset_point(center, -r, r),
                offset_point(center, -r, -r),
            )
            return geo.Polygon(ring)

        layers = {c: FeatureLayer(c) for c in FeatureCategory}
        layers[FeatureCategory.HOSPITAL].features.append(
            Feature("hosp", geo.Point(offset_point(kilns[0].centroid, 0, 500.0)), {})
        )
        layers[FeatureCategory.HABITATION].features.append(
            Feature("hab", hexish(kilns[1].centroid, 300.0), {})
        )
        layers[FeatureCategory.SCHOOL].features.append(
            Feature("sch", geo.Point(offset_point(kilns[2].centroid, 0, 999.0)), {})
        )
        layers[FeatureCategory.RAILWAY].features.append(
            Feature("rail", geo.Polyline((
                offset_point(kilns[3].centroid, -500, 150.0),
                offset_point(kilns[3].centroid, 500, 150.0),
            )), {})
        )
        layers[FeatureCategory.ORCHARD].features.append(
            Feature("orch", hexish(offset_point(kilns[6].centroid, 0, 1000.0), 100.0), {})
        )
        violations = audit_all(kilns, list(layers.values()), rules)
        summary = aggregate(kilns, violations, rules)
        counts = summary.to_dict()["violations"]
        assert counts["hospital"]["Uttar Pradesh"] == 1
        assert counts["habitation"]["Uttar Pradesh"] == 1
        assert counts["school"]["Uttar Pradesh"] == 1
        assert counts["railway"]["Uttar Pradesh"] == 1
        assert counts["inter_kiln"]["Uttar Pradesh"] == 2
        assert counts["orchard"]["Uttar Pradesh"] == 0
        assert summary.non_compliant["Uttar Pradesh"] == 6
        assert summary.kiln_count["Uttar Pradesh"] == 20
        assert summary.percentage["Uttar Pradesh"] == 30  # 6/20
        csv_text = violations_to_csv(violations)
        assert "k0000,hospital" in csv_text
        assert csv_text.splitlines()[0] == "kiln_id,criterion,distance_m,threshold_m,feature_id"
