"""Independent tally oracle over the golden CDR fixtures.

Reads the fixture CSVs with nothing but the stdlib and prints the expected
values the test suite freezes: counterpart counts, per-edge call tallies,
window-filtered row counts, path run-collapse spans, and the reference
geofence distance. Deliberately shares no code with the engine.
"""

import csv
import math
from collections import Counter
from datetime import datetime
from pathlib import Path

import mpmath

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def load(name):
    with open(DATA / name, newline="") as fh:
        return list(csv.DictReader(fh))


def ts(row):
    return datetime.strptime(row["Date & Time"], "%m/%d/%Y %H:%M:%S")


def tally(rows, focal):
    assert all(r["A party"] == focal for r in rows)
    out = Counter()
    inc = Counter()
    for r in rows:
        if "Outgoing" in r["Call Type"]:
            out[r["B party"]] += 1
        else:
            inc[r["B party"]] += 1
    return out, inc


def in_window(rows, start, end):
    return [r for r in rows if start <= ts(r) <= end]


def runs(rows):
    """Collapse time-sorted rows into maximal same-coordinate runs."""
    ordered = sorted(rows, key=ts)
    spans = []
    for r in ordered:
        coord = (r["Latitude"], r["Longitude"])
        if spans and spans[-1][0] == coord:
            spans[-1][2] = ts(r)
        else:
            spans.append([coord, ts(r), ts(r), r["Cell Site"]])
    return spans


def haversine_hp(lat1, lon1, lat2, lon2):
    """High-precision haversine on the 6371 km sphere (mpmath, 50 digits)."""
    mpmath.mp.dps = 50
    rad = lambda d: mpmath.mpf(d) * mpmath.pi / 180
    p1, l1, p2, l2 = rad(lat1), rad(lon1), rad(lat2), rad(lon2)
    a = mpmath.sin((p2 - p1) / 2) ** 2 + mpmath.cos(p1) * mpmath.cos(p2) * mpmath.sin((l2 - l1) / 2) ** 2
    return 6371000 * 2 * mpmath.asin(mpmath.sqrt(a))


t2 = load("table2.csv")
t3 = load("table3.csv")

print(f"table2 rows: {len(t2)}")
print(f"table2 counterparts: {sorted(set(r['B party'] for r in t2))}")
print(f"table2 counterpart count: {len(set(r['B party'] for r in t2))}")
out2, in2 = tally(t2, "1234567890")
print(f"table2 edge 14141414141: out={out2['14141414141']} in={in2['14141414141']}")

w = in_window(t2, datetime(2020, 5, 1), datetime(2020, 5, 7, 23, 59, 59))
print(f"table2 rows in 05/01..05/07 window: {len(w)}")
print(f"table2 earliest timestamp: {min(ts(r) for r in t2)}")
print(f"table2 first-seen counterparts (time order): "
      f"{list(dict.fromkeys(r['B party'] for r in sorted(t2, key=ts)))}")

print(f"table3 rows: {len(t3)}")
print(f"table3 counterpart count: {len(set(r['B party'] for r in t3))}")
out3, in3 = tally(t3, "9876543210")
print(f"table3 edge 41141414141: out={out3['41141414141']} in={in3['41141414141']}")
w3 = in_window(t3, datetime(2020, 5, 1), datetime(2020, 5, 1, 23, 59, 59))
print(f"table3 rows on 05/01 only: {len(w3)}")

union = set(r["B party"] for r in t2) | set(r["B party"] for r in t3)
overlap = set(r["B party"] for r in t2) & set(r["B party"] for r in t3)
print(f"counterpart union: {len(union)}  overlap: {sorted(overlap)}")

print("table2 window path runs:")
for coord, first, last, site in runs(w):
    print(f"  {coord} {site!r} {first} .. {last}")

print("table3 full path runs:")
for coord, first, last, site in runs(t3):
    print(f"  {coord} {site!r} {first} .. {last}")

d = haversine_hp("33.6844", "72.98836", "33.5026", "73.1965")
print(f"geofence reference distance (33.6844,72.98836)->(33.5026,73.1965): {mpmath.nstr(d, 12)} m")

m, p = 100, 1 - (1 - 1e-4) ** 100
print(f"false-match closed form m={m}: p={p:.10f}  3se@1e5={3 * math.sqrt(p * (1 - p) / 1e5):.8f}")
