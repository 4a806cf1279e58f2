"""Freeze reference statistics (statsmodels) for the Rust test-suite.

Run from the repository root:  python3 scripts/make_stat_oracles.py
"""
import json
import math

import numpy as np
from statsmodels.stats.diagnostic import acorr_ljungbox, het_arch
from statsmodels.tsa.stattools import acf, adfuller, pacf

rng = np.random.default_rng(20240607)


def adf(x):
    n = len(x)
    maxlag = int(math.floor(12.0 * (n / 100.0) ** 0.25))
    stat, p, used, nobs, crit, ic = adfuller(x, maxlag=maxlag, regression="c", autolag="AIC")
    return {"max_lag": maxlag, "statistic": stat, "p_value": p, "used_lag": used, "nobs": nobs}


def garch11(n, a0, a1, b1):
    out = np.empty(n)
    s2 = a0 / (1 - a1 - b1)
    a_prev = 0.0
    for t in range(n):
        s2 = a0 + a1 * a_prev**2 + b1 * s2
        a_prev = math.sqrt(s2) * rng.standard_normal()
        out[t] = a_prev
    return out


random_walk = np.cumsum(rng.standard_normal(500)) + 50.0
white_noise = rng.standard_normal(500)
ar1 = np.empty(500)
ar1[0] = 0.0
e = rng.standard_normal(500)
for t in range(1, 500):
    ar1[t] = 0.9 * ar1[t - 1] + e[t]
iid = rng.standard_normal(1000)
garch = garch11(2000, 0.1, 0.15, 0.8)
iid2 = rng.standard_normal(2000)


def portmanteau(x, lags):
    r = acorr_ljungbox(x, lags=[lags], boxpierce=True)
    return {
        "lags": lags,
        "bp_stat": float(r["bp_stat"].iloc[0]),
        "bp_pvalue": float(r["bp_pvalue"].iloc[0]),
        "lb_stat": float(r["lb_stat"].iloc[0]),
        "lb_pvalue": float(r["lb_pvalue"].iloc[0]),
    }


def arch_lm(x, lags):
    lm, lmp, _, _ = het_arch(x, nlags=lags)
    return {"lags": lags, "lm": lm, "p_value": lmp}


doc = {
    "series": {
        "random_walk": random_walk.tolist(),
        "white_noise": white_noise.tolist(),
        "ar1_phi09": ar1.tolist(),
        "iid_1000": iid.tolist(),
        "garch11": garch.tolist(),
        "iid_2000": iid2.tolist(),
    },
    "adf": {
        "random_walk": adf(random_walk),
        "white_noise": adf(white_noise),
        "ar1_phi09": adf(ar1),
    },
    "correlogram": {
        "ar1_phi09": {
            "max_lag": 10,
            "acf": acf(ar1, nlags=10, fft=False).tolist(),
            "pacf": pacf(ar1, nlags=10, method="ldb").tolist(),
        }
    },
    "portmanteau": {
        "iid_1000": portmanteau(iid, 10),
        "ar1_phi09": portmanteau(ar1, 10),
    },
    "arch_lm": {
        "garch11": arch_lm(garch, 5),
        "iid_2000": arch_lm(iid2, 5),
    },
}

with open("crates/core/tests/fixtures/stat_oracles.json", "w") as fh:
    json.dump(doc, fh)
print({k: v for k, v in doc["adf"].items()})
print(doc["portmanteau"], doc["arch_lm"])
