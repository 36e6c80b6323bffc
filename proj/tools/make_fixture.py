#!/usr/bin/env python3
"""Generate the synthetic scenario fixtures.

Six instruments over 700 weekdays ending 2022-03-01. RUBCNY and UAHCNY are
independent random walks. Each of the four targets (USD_IDX, NDAQ, WTI, GOLD)
has a random-walk open, high/low at a random spread around it, and

    close = c0 + a*open + b*high + c*low + d1*RUBCNY.close + d2*UAHCNY.close [+ noise]

with (a, b, c) convex so the close stays inside [low, high]. Some dates are
dropped per instrument to exercise the inner join.

Writes, for each variant (exact, noisy):
    fixtures/synthetic_<variant>/data/<SYMBOL>.csv
    fixtures/synthetic_<variant>/config.json
    fixtures/synthetic_<variant>/expected.json   generating weights, sigma and
                                                 numpy lstsq weights per target

Usage: tools/make_fixture.py [--root fixtures]
"""

import argparse
import datetime as dt
import json
import pathlib

import numpy as np

SEED = 20220301
N_DAYS = 700
LAST_DAY = dt.date(2022, 3, 1)

TARGETS = {
    # symbol: (kind, level)
    "USD_IDX": ("currency_index", 95.0),
    "NDAQ": ("equity", 150.0),
    "WTI": ("commodity", 60.0),
    "GOLD": ("commodity", 1500.0),
}
DRIVERS = {
    "RUBCNY": ("fx_pair", 0.088, 0.004),
    "UAHCNY": ("fx_pair", 0.24, 0.003),
}
DROPPED = {"NDAQ": 12, "WTI": 5, "GOLD": 3}
OHL_WEIGHTS = (0.2, 0.45, 0.35)
NOISE_FRACTION = 0.001  # sigma = NOISE_FRACTION * level

WINDOWS = {
    "train": ["2019-05-21", "2021-06-14"],
    "test": ["2021-06-15", "2021-12-31"],
    "correlation_before": ["2022-01-01", "2022-02-01"],
    "correlation_after": ["2022-02-01", "2022-03-01"],
    "source": ["2022-01-03", "2022-01-31"],
    "projection": ["2022-02-01", "2022-03-01"],
}


def fmt(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def weekdays_ending(last: dt.date, n: int) -> list:
    out = []
    d = last
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d -= dt.timedelta(days=1)
    return out[::-1]


def random_walk(rng, start, vol, n):
    steps = rng.normal(0.0, vol, n)
    steps[0] = 0.0
    return start * np.exp(np.cumsum(steps))


def write_series(path: pathlib.Path, dates, o, h, l, c, keep):
    lines = ["date,open,high,low,close"]
    for i, d in enumerate(dates):
        if not keep[i]:
            continue
        assert 0 < l[i] <= o[i] <= h[i] and l[i] <= c[i] <= h[i], (path, d)
        lines.append(",".join([d.isoformat(), fmt(o[i]), fmt(h[i]), fmt(l[i]), fmt(c[i])]))
    path.write_text("\n".join(lines) + "\n")


def build(root: pathlib.Path, variant: str, noisy: bool):
    rng = np.random.default_rng(SEED)
    dates = weekdays_ending(LAST_DAY, N_DAYS)
    n = len(dates)
    out_dir = root / f"synthetic_{variant}"
    data_dir = out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    keep = {s: np.ones(n, dtype=bool) for s in list(TARGETS) + list(DRIVERS)}
    for sym, k in DROPPED.items():
        keep[sym][rng.choice(np.arange(1, n - 1), size=k, replace=False)] = False

    drivers = {}
    for sym, (_, level, vol) in DRIVERS.items():
        close = random_walk(rng, level, vol, n)
        open_ = np.concatenate([[level], close[:-1]]) * np.exp(rng.normal(0, vol / 4, n))
        high = np.maximum(open_, close) * (1 + np.abs(rng.normal(0, 0.002, n)))
        low = np.minimum(open_, close) * (1 - np.abs(rng.normal(0, 0.002, n)))
        drivers[sym] = close
        write_series(data_dir / f"{sym}.csv", dates, open_, high, low, close, keep[sym])

    rub, uah = drivers["RUBCNY"], drivers["UAHCNY"]
    expected = {"seed": SEED, "noisy": noisy, "targets": {}}
    specs = []
    for sym, (_, level) in TARGETS.items():
        open_ = random_walk(rng, level, 0.01, n)
        high = open_ * (1 + rng.uniform(0.008, 0.025, n))
        low = open_ * (1 - rng.uniform(0.008, 0.025, n))
        d1, d2 = 0.05 * level, 0.02 * level
        c0 = -round(d1 * rub.mean() + d2 * uah.mean(), 3)
        a, b, c = OHL_WEIGHTS
        close = c0 + a * open_ + b * high + c * low + d1 * rub + d2 * uah
        sigma = NOISE_FRACTION * level if noisy else 0.0
        if noisy:
            close = close + rng.normal(0.0, sigma, n)
        write_series(data_dir / f"{sym}.csv", dates, open_, high, low, close, keep[sym])
        features = [f"{sym}.open", f"{sym}.high", f"{sym}.low", "RUBCNY.close", "UAHCNY.close"]
        specs.append({"target": f"{sym}.close", "features": features, "include_intercept": True})
        expected["targets"][sym] = {
            "features": features,
            "generating_weights": [c0, a, b, c, d1, d2],
            "sigma": sigma,
        }

    universe = [{"symbol": s, "kind": k} for s, (k, _) in TARGETS.items()]
    universe += [{"symbol": s, "kind": k} for s, (k, _, _) in DRIVERS.items()]
    config = {
        "name": f"synthetic-{variant}",
        "universe": universe,
        "correlation_symbols": ["USD_IDX", "WTI", "GOLD", "RUBCNY", "UAHCNY"],
        "feature_specs": specs,
        "windows": WINDOWS,
        "projection_mode": "date_shifted",
        "provider": {"cache_dir": "data", "rate_limit": 5},
    }
    (out_dir / "config.json").write_text(json.dumps(config, indent=2) + "\n")

    # Independent oracle: numpy least squares on the inner-joined train window.
    common = set(dates)
    for sym in keep:
        common &= {d for d, k in zip(dates, keep[sym]) if k}
    lo, hi = (dt.date.fromisoformat(x) for x in WINDOWS["train"])
    rows = sorted(d for d in common if lo <= d <= hi)
    tables = {}
    for path in data_dir.glob("*.csv"):
        lines = path.read_text().splitlines()[1:]
        tables[path.stem] = {
            dt.date.fromisoformat(p[0]): [float(v) for v in p[1:]]
            for p in (ln.split(",") for ln in lines)
        }
    field = {"open": 0, "high": 1, "low": 2, "close": 3}
    for sym, info in expected["targets"].items():
        cols = [np.ones(len(rows))]
        for key in info["features"]:
            s, f = key.split(".")
            cols.append(np.array([tables[s][d][field[f]] for d in rows]))
        x = np.column_stack(cols)
        y = np.array([tables[sym][d][3] for d in rows])
        w, *_ = np.linalg.lstsq(x, y, rcond=None)
        info["lstsq_weights"] = [float(v) for v in w]
        info["train_rows"] = len(rows)
    (out_dir / "expected.json").write_text(json.dumps(expected, indent=2) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=str(pathlib.Path(__file__).resolve().parent.parent / "fixtures"))
    args = ap.parse_args()
    root = pathlib.Path(args.root)
    build(root, "exact", noisy=False)
    build(root, "noisy", noisy=True)


if __name__ == "__main__":
    main()
