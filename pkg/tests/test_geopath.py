"""Path reconstruction, GeoJSON export, and advisory hygiene."""

from __future__ import annotations

from datetime import datetime, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epitrace.cdr import CallType, CdrRecord, filter_window, normalize_records
from epitrace.geopath import (
    PathError,
    PathTrace,
    Waypoint,
    advisory_to_doc,
    export_geojson,
    path_from_geojson_doc,
    path_to_geojson_doc,
    publish_advisory,
    reconstruct_path,
)
from conftest import WINDOW_CS1

T = datetime(2020, 5, 8, 9, 0, 0)


def mkrec(ts, lat, lon, site="Site", a="5550001111", b="5550002222"):
    return CdrRecord(ts, a, b, CallType.CALL_OUTGOING, None, site, lat, lon)


class TestReconstruct:
    def test_table2_case_window_path(self, table2_records):
        records = normalize_records(filter_window(table2_records, WINDOW_CS1))
        path = reconstruct_path(records)
        assert path.subscriber == "1234567890"
        assert len(path.waypoints) == 10
        first = path.waypoints[0]
        assert first.cell_site == "Plot # 2, Rawalpindi"
        assert (first.latitude, first.longitude) == (33.5026, 73.1965)
        # the two-visit run at Plot # 6 collapses into one stay
        stay = path.waypoints[6]
        assert stay.cell_site == "Plot # 6, Islamabad"
        assert stay.arrived == datetime(2020, 5, 5, 17, 49, 33)
        assert stay.departed == datetime(2020, 5, 6, 17, 51, 23)

    def test_table3_runs_collapse_on_exact_coordinates(self, table3_records):
        path = reconstruct_path(normalize_records(table3_records))
        assert len(path.waypoints) == 11
        stay = path.waypoints[4]
        assert stay.cell_site == "Plot # 6, Islamabad"
        assert stay.arrived == datetime(2020, 5, 10, 17, 16, 29)
        assert stay.departed == datetime(2020, 5, 12, 17, 46, 14)

    def test_near_equal_coordinates_do_not_merge(self, table3_records):
        # 72.988361 vs 72.98836: different decimals, so a separate waypoint
        path = reconstruct_path(normalize_records(table3_records))
        longitudes = [wp.longitude for wp in path.waypoints]
        assert 72.988361 in longitudes and longitudes.count(72.98836) == 2

    def test_run_keeps_first_sites_name(self, table3_records):
        # Plot # 1 and Plot # 2 share coordinates; the run is named for its start
        path = reconstruct_path(normalize_records(table3_records))
        first = path.waypoints[0]
        assert first.cell_site == "Plot # 1, Rawalpindi"
        assert first.arrived == datetime(2020, 5, 1, 11, 13, 4)
        assert first.departed == datetime(2020, 5, 8, 12, 30, 2)

    def test_empty_input_gives_empty_path(self):
        path = reconstruct_path([])
        assert path == PathTrace(subscriber="", waypoints=())

    def test_single_record(self):
        path = reconstruct_path([mkrec(T, 33.5, 73.1)])
        assert len(path.waypoints) == 1
        assert path.waypoints[0].arrived == path.waypoints[0].departed == T


class TestInvariants:
    def test_waypoint_rejects_inverted_stay(self):
        with pytest.raises(PathError, match="arrived after departed"):
            Waypoint("x", 1.0, 2.0, T, T - timedelta(seconds=1))

    def test_trace_rejects_decreasing_arrivals(self):
        w1 = Waypoint("a", 1.0, 1.0, T, T)
        w2 = Waypoint("b", 2.0, 2.0, T - timedelta(hours=1), T)
        with pytest.raises(PathError, match="non-decreasing"):
            PathTrace("s", (w1, w2))

    def test_trace_rejects_consecutive_duplicates(self):
        w1 = Waypoint("a", 1.0, 1.0, T, T)
        w2 = Waypoint("b", 1.0, 1.0, T + timedelta(hours=1), T + timedelta(hours=1))
        with pytest.raises(PathError, match="share coordinates"):
            PathTrace("s", (w1, w2))


class TestGeoJson:
    def test_linestring_and_points(self, table2_records):
        records = normalize_records(filter_window(table2_records, WINDOW_CS1))
        path = reconstruct_path(records)
        doc = path_to_geojson_doc(path)
        assert doc["type"] == "FeatureCollection"
        lines = [f for f in doc["features"]
                 if f["geometry"]["type"] == "LineString"]
        points = [f for f in doc["features"] if f["geometry"]["type"] == "Point"]
        assert len(lines) == 1 and len(points) == 10
        # GeoJSON positions are [longitude, latitude]
        assert lines[0]["geometry"]["coordinates"][0] == [73.1965, 33.5026]
        assert points[0]["geometry"]["coordinates"] == [73.1965, 33.5026]
        orders = [f["properties"]["order"] for f in points]
        assert orders == list(range(10))
        assert points[0]["properties"]["role"] == "waypoint"
        assert points[0]["properties"]["cell_site"] == "Plot # 2, Rawalpindi"

    def test_single_waypoint_has_no_linestring(self):
        doc = path_to_geojson_doc(reconstruct_path([mkrec(T, 33.5, 73.1)]))
        assert [f["geometry"]["type"] for f in doc["features"]] == ["Point"]

    def test_export_parses_and_round_trips(self, table2_records):
        import json

        records = normalize_records(filter_window(table2_records, WINDOW_CS1))
        path = reconstruct_path(records)
        doc = json.loads(export_geojson(path))
        recovered = path_from_geojson_doc(doc)
        assert recovered.waypoints == path.waypoints


class TestAdvisories:
    def test_publish_strips_subscriber(self, table2_records):
        path = reconstruct_path(
            normalize_records(filter_window(table2_records, WINDOW_CS1))
        )
        advisory = publish_advisory(path, now=T, advisory_id="adv-1")
        assert advisory.path.subscriber == ""
        assert advisory.path.waypoints == path.waypoints
        assert advisory.valid_until == T + timedelta(days=14)
        assert "cell-tower" in advisory.message

    def test_doc_never_mentions_subscriber(self, table2_records):
        path = reconstruct_path(
            normalize_records(filter_window(table2_records, WINDOW_CS1))
        )
        doc = advisory_to_doc(publish_advisory(path, now=T))

        def walk(node):
            if isinstance(node, dict):
                for k, v in node.items():
                    assert "subscriber" not in k.lower()
                    walk(v)
            elif isinstance(node, (list, tuple)):
                for item in node:
                    walk(item)
            elif isinstance(node, str):
                assert "1234567890" not in node

        walk(doc)
        assert set(doc) == {"advisory_id", "valid_until", "message", "geojson"}

    def test_custom_ttl(self):
        path = reconstruct_path([mkrec(T, 33.5, 73.1)])
        advisory = publish_advisory(path, ttl_days=3, now=T)
        assert advisory.valid_until == T + timedelta(days=3)

    def test_empty_path_rejected(self):
        with pytest.raises(PathError, match="empty path"):
            publish_advisory(PathTrace("", ()), now=T)

    @pytest.mark.parametrize("ttl", [0, -1])
    def test_non_positive_ttl_rejected(self, ttl):
        path = reconstruct_path([mkrec(T, 33.5, 73.1)])
        with pytest.raises(PathError, match="positive"):
            publish_advisory(path, ttl_days=ttl, now=T)

    def test_generated_id_prefix(self):
        path = reconstruct_path([mkrec(T, 33.5, 73.1)])
        assert publish_advisory(path, now=T).advisory_id.startswith("adv-")


# --- reconstruction against an independent run count ---------------------------

_COORDS = [(33.5, 73.1), (33.6, 73.2), (33.7, 73.3)]


@settings(max_examples=80)
@given(
    st.lists(
        st.tuples(
            st.datetimes(
                min_value=datetime(2020, 5, 1), max_value=datetime(2020, 5, 14)
            ).map(lambda ts: ts.replace(microsecond=0)),
            st.sampled_from(_COORDS),
        ),
        min_size=1,
        max_size=20,
    )
)
def test_waypoints_match_coordinate_runs(steps):
    records = normalize_records(
        mkrec(ts, lat, lon, b=f"55500022{i:02d}")
        for i, (ts, (lat, lon)) in enumerate(steps)
    )
    path = reconstruct_path(records)

    coords = [(r.latitude, r.longitude) for r in records]
    expected_runs = 1 + sum(1 for a, b in zip(coords, coords[1:]) if a != b)
    assert len(path.waypoints) == expected_runs
    assert path.waypoints[0].arrived == records[0].timestamp
    assert path.waypoints[-1].departed == records[-1].timestamp
    assert path_from_geojson_doc(path_to_geojson_doc(path)).waypoints == path.waypoints
