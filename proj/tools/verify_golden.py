#!/usr/bin/env python3
"""Recompute a golden bundle from its fixture with numpy and compare.

Independent of the C++ pipeline: inner join, window slicing, least squares
(numpy.linalg.lstsq), metrics, date-shifted projection and Pearson matrices
are all redone here. Values must agree to a relative 1e-9; manifest digests
must match the files on disk.

Usage: tools/verify_golden.py FIXTURE_DIR GOLDEN_DIR
"""

import csv
import datetime as dt
import hashlib
import json
import pathlib
import sys

import numpy as np

RTOL = 1e-9
FIELDS = {"open": 0, "high": 1, "low": 2, "close": 3}


def load(fixture: pathlib.Path):
    config = json.loads((fixture / "config.json").read_text())
    data_dir = fixture / config["provider"]["cache_dir"]
    tables = {}
    for u in config["universe"]:
        sym = u["symbol"]
        with open(data_dir / f"{sym}.csv") as fh:
            rows = list(csv.reader(fh))[1:]
        tables[sym] = {dt.date.fromisoformat(r[0]): [float(v) for v in r[1:]] for r in rows}
    dates = sorted(set.intersection(*(set(t) for t in tables.values())))
    return config, tables, dates


def window(dates, w):
    lo, hi = (dt.date.fromisoformat(x) for x in w)
    return [d for d in dates if lo <= d <= hi]


def col(tables, key, dates):
    sym, field = key.rsplit(".", 1)
    return np.array([tables[sym][d][FIELDS[field]] for d in dates])


def metrics(y, p):
    e = y - p
    mse = float(np.mean(e * e))
    return {"mse": mse, "rmse": mse ** 0.5, "mae": float(np.mean(np.abs(e))),
            "mape": float(np.mean(np.abs(e) / np.abs(y)) * 100.0), "n": len(y)}


def close(a, b):
    return abs(a - b) <= RTOL * max(1.0, abs(a), abs(b))


def main():
    fixture, golden = (pathlib.Path(p) for p in sys.argv[1:3])
    config, tables, dates = load(fixture)
    w = config["windows"]
    problems = []

    def check(label, a, b):
        if not close(a, b):
            problems.append(f"{label}: golden {b!r} vs numpy {a!r}")

    golden_metrics = {(r["target"], r["window"]): r
                      for r in json.loads((golden / "metrics.json").read_text())}
    train, test = window(dates, w["train"]), window(dates, w["test"])
    source, proj = window(dates, w["source"]), window(dates, w["projection"])
    mode = config.get("projection_mode", "date_shifted")
    for spec in config["feature_specs"]:
        sym = spec["target"].split(".")[0]
        design = lambda ds: np.column_stack(
            [np.ones(len(ds))] + [col(tables, f, ds) for f in spec["features"]])
        wts, *_ = np.linalg.lstsq(design(train), col(tables, spec["target"], train), rcond=None)
        y_test = col(tables, spec["target"], test)
        for k, v in metrics(y_test, design(test) @ wts).items():
            check(f"{sym} test {k}", v, golden_metrics[(sym, "test")][k])
        if mode == "date_shifted":
            shifted = [source[i % len(source)] for i in range(len(proj))]
            cf = design(shifted) @ wts
        else:
            cf = design(proj) @ wts
        realized = col(tables, spec["target"], proj)
        for k, v in metrics(realized, cf).items():
            check(f"{sym} projection {k}", v, golden_metrics[(sym, "projection")][k])
        rows = json.loads((golden / f"counterfactual_{sym}.json").read_text())
        if [r["date"] for r in rows] != [d.isoformat() for d in proj]:
            problems.append(f"{sym}: projection dates differ")
        for i, r in enumerate(rows):
            check(f"{sym} counterfactual[{i}]", cf[i], r["counterfactual"])
            check(f"{sym} realized[{i}]", realized[i], r["realized"])

    keys = [f"{s}.close" for s in config.get("correlation_symbols") or
            [u["symbol"] for u in config["universe"]]]
    for name in ("correlation_before", "correlation_after"):
        ds = window(dates, w[name])
        r = np.corrcoef(np.vstack([col(tables, k, ds) for k in keys]))
        short = "corr_" + name.split("_")[1]
        g = json.loads((golden / f"{short}.json").read_text())
        if g["labels"] != keys:
            problems.append(f"{short}: labels differ")
        values = np.array(g["values"]).reshape(len(keys), len(keys))
        for i in range(len(keys)):
            for j in range(len(keys)):
                check(f"{short}[{i},{j}]", r[i, j], values[i, j])

    manifest = json.loads((golden / "manifest.json").read_text())
    for f in manifest["files"]:
        data = (golden / f["file"]).read_bytes()
        if len(data) != f["bytes"] or hashlib.sha256(data).hexdigest() != f["digest"]:
            problems.append(f"{f['file']}: manifest mismatch")

    for p in problems:
        print(p)
    print(f"verify_golden: {len(problems)} problems")
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main())
