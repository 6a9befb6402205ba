"""Regenerates the preprocessing fixture (deterministic, no RNG).

Three participants, records every 5 minutes from 12:00 local on day 0 to
midnight after day 5. p01 presses at its self-reported rate (with double
presses that deduplication removes), p02 has two implausibly quiet days, p03
has exactly one.
"""
import datetime as dt
import json
import pathlib

HERE = pathlib.Path(__file__).parent
TZ = dt.timezone(dt.timedelta(hours=-4))
START = dt.datetime(2021, 5, 3, 12, 0, tzinfo=TZ)
END = dt.datetime(2021, 5, 9, 0, 0, tzinfo=TZ)

# presses per calendar day (day 0 is the half day starting at noon)
PLANS = {
    "p01": (12, [6, 12, 12, 12, 12, 12]),
    "p02": (20, [10, 30, 2, 30, 2, 30]),
    "p03": (20, [10, 22, 2, 24, 20, 22]),
}


def rows(plan):
    out = []
    t = START
    day_start = START
    day = 0
    step = dt.timedelta(minutes=5)
    while t < END:
        if t.date() != day_start.date():
            day += 1
            day_start = t
        out.append(t)
        t += step
    by_day = {}
    for r in out:
        by_day.setdefault(r.date(), []).append(r)
    presses = set()
    doubles = set()
    for d, (date, recs) in enumerate(sorted(by_day.items())):
        n = plan[d]
        if n == 0:
            continue
        stride = len(recs) // n
        for k in range(n):
            presses.add(recs[k * stride + stride // 2])
            if k == 0:
                doubles.add(recs[k * stride + stride // 2])
    return out, presses, doubles


for pid, (cpd, plan) in PLANS.items():
    recs, presses, doubles = rows(plan)
    lines = ["timestamp,lat,lon,speed_kmh,distance_m,performance,button"]
    for i, t in enumerate(recs):
        lat = 40.7128 + 0.01 * ((i // 12) % 9)
        lon = -74.006 - 0.008 * ((i // 24) % 5)
        speed = float((i * 7) % 23)
        press = t in presses
        lines.append(f"{t.isoformat()},{lat:.6f},{lon:.6f},{speed:.1f},{(i % 50) * 10.0:.1f},3,{int(press)}")
        if t in doubles:
            t2 = t + dt.timedelta(seconds=25)
            lines.append(f"{t2.isoformat()},{lat:.6f},{lon:.6f},{speed:.1f},{(i % 50) * 10.0:.1f},3,1")
    (HERE / "raw" / f"{pid}.csv").write_text("\n".join(lines) + "\n")

profiles = {
    "p01": {"cigarettes_per_day": 12, "home_location": {"lat": 40.7128, "lon": -74.006},
            "exhaled_co": 15, "years_smoked": "[10, 20]", "age": 33, "sex": "Female", "race": "White",
            "ethnicity": "Non-Hispanic", "education": "College Graduate", "marital": "Married"},
    "p02": {"cigarettes_per_day": 20, "home_location": {"lat": 40.75, "lon": -74.0},
            "exhaled_co": "<10", "years_smoked": 25, "age": ">50", "sex": "Male", "race": "Black",
            "ethnicity": "Non-Hispanic", "education": "High", "marital": "Divorced"},
    "p03": {"cigarettes_per_day": 20, "home_location": {"lat": 40.70, "lon": -74.02},
            "exhaled_co": 31, "years_smoked": 8, "age": 22, "sex": "Male", "race": "American Indian",
            "ethnicity": "Unknown", "education": "Coll/Tech", "marital": "Single"},
}
(HERE / "profiles.json").write_text(json.dumps(profiles, indent=2) + "\n")
