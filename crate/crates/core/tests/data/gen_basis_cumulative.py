"""Frozen values of ∫_0^x exp(-(s-c)^2 / 2σ^2) ds, computed at 120 digits."""
import json
import pathlib
import random

import mpmath

mpmath.mp.dps = 120
rng = random.Random(20240611)
rows = []
for i in range(100):
    sigma = rng.choice([0.05, 0.3, 1.0, 2.5, 6.0]) * rng.uniform(0.5, 2.0)
    c = rng.uniform(0.0, 72.0) if i % 3 else rng.uniform(0.0, 3.0)
    # mix of points near the center, deep in either tail and far beyond
    x = max(0.0, c + sigma * rng.choice([-12.0, -4.0, -1.0, 0.0, 0.5, 2.0, 6.0, 40.0]) * rng.uniform(0.5, 1.5))
    s, cc, xx = mpmath.mpf(sigma), mpmath.mpf(c), mpmath.mpf(x)
    v = mpmath.quad(lambda t: mpmath.exp(-((t - cc) ** 2) / (2 * s * s)), [0, min(xx, cc), xx] if 0 < cc < xx else [0, xx])
    lo, hi = -cc / (s * mpmath.sqrt(2)), (xx - cc) / (s * mpmath.sqrt(2))
    # erfc(-hi) - erfc(-lo) keeps full relative precision in the lower tail
    closed = s * mpmath.sqrt(mpmath.pi / 2) * (mpmath.erfc(-hi) - mpmath.erfc(-lo))
    assert abs(v - closed) <= mpmath.mpf(10) ** -20 * abs(closed), (v, closed)
    rows.append({"x": x, "center": c, "sigma": sigma, "value": float(closed)})
(pathlib.Path(__file__).parent / "basis_cumulative.json").write_text(json.dumps(rows, indent=1) + "\n")
