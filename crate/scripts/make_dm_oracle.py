"""Freeze Diebold-Mariano reference values (numpy/scipy) for the Rust test-suite.

Run from the repository root:  python3 scripts/make_dm_oracle.py
"""
import json

import numpy as np
from scipy.stats import norm

rng = np.random.default_rng(20240611)


def dm(a, b, h):
    d = np.asarray(a) - np.asarray(b)
    n = d.size
    dc = d - d.mean()
    acov = np.array([np.dot(dc[k:], dc[: n - k]) / n for k in range(h)])
    lrv = acov[0] + 2.0 * acov[1:].sum()
    stat = d.mean() / np.sqrt(lrv / n)
    return float(stat), float(2.0 * norm.sf(abs(stat)))


cases = []
base = rng.standard_normal(500) ** 2
a = 0.5 * base
stat, p = dm(a, base, 1)
cases.append({"name": "half_losses_n500", "horizon": 1, "a": a.tolist(), "b": base.tolist(), "statistic": stat, "p_value": p})

for i, (n, h) in enumerate([(10, 1), (25, 2), (60, 3), (120, 1), (200, 5), (400, 4), (705, 1), (705, 2)]):
    e1 = rng.standard_normal(n)
    e2 = 0.6 * e1 + 0.8 * rng.standard_normal(n) + 0.1
    la, lb = e1**2, e2**2
    stat, p = dm(la, lb, h)
    cases.append({"name": f"random_{i}", "horizon": h, "a": la.tolist(), "b": lb.tolist(), "statistic": stat, "p_value": p})

with open("crates/core/tests/fixtures/dm_oracle.json", "w") as f:
    json.dump({"cases": cases}, f)
print(cases[0]["statistic"], cases[0]["p_value"])
