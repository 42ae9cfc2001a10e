#!/usr/bin/env python3
"""Validate every artifact in a wq output directory.

JSON artifacts are checked against docs/schemas; CSV artifacts must carry
the expected header. Any unrecognised file is an error.
"""
import argparse
import json
import pathlib
import sys

from jsonschema import Draft202012Validator, FormatChecker
from referencing import Registry, Resource

JSON_KINDS = [
    (".clean_report.json", "clean_report"),
    (".detrend.json", "detrend"),
    (".fit.json", "fit"),
    (".compare.json", "compare"),
    ("simulated.json", "simulate"),
    (".fft.json", "fft"),
    (".forecast_metrics.json", "forecast_metrics"),
    (".regression.json", "regression"),
    ("attention.json", "attention"),
    ("report.json", "report"),
]

CSV_HEADERS = [
    (".clean.csv", None),  # timestamp + indicator columns
    (".detrend.csv", "timestamp,segment,input,trend,fluctuation,centered"),
    (".pdf.csv", "center,empirical_density,fitted_density"),
    (".compare.csv", "method,rank,q,beta,mu,loglik_per_sample,n_samples,error"),
    ("simulated.csv", "value"),
    (".spectrum.csv", "bin,frequency,period_hours,magnitude"),
    (".features.csv", None),
    (".forecast_metrics.csv", None),
    (".predictions.csv", "timestamp,y,yhat,model,input_len,horizon"),
    ("attention.heatmap.csv", None),
]

PREFIXES = {
    ".clean.csv": "timestamp,",
    ".features.csv": "timestamp,DOO-MGL,",
    ".forecast_metrics.csv": "input_pred,",
    "attention.heatmap.csv": "query\\key,",
}


def kind_of(name, table):
    for suffix, value in table:
        if name.endswith(suffix):
            return suffix, value
    return None, None


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--schemas", required=True, type=pathlib.Path)
    ap.add_argument("artifacts", type=pathlib.Path)
    args = ap.parse_args()

    schemas = {p.name: json.loads(p.read_text()) for p in args.schemas.glob("*.schema.json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(s)) for name, s in schemas.items())
    errors, checked = [], 0
    files = sorted(p for p in args.artifacts.rglob("*") if p.is_file())
    if not files:
        errors.append(f"no artifacts in {args.artifacts}")
    for path in files:
        name = path.name
        if name.endswith(".json"):
            _, kind = kind_of(name, JSON_KINDS)
            if kind is None:
                errors.append(f"{name}: no schema for this artifact")
                continue
            validator = Draft202012Validator(schemas[f"{kind}.schema.json"], registry=registry,
                                             format_checker=FormatChecker())
            try:
                doc = json.loads(path.read_text())
            except json.JSONDecodeError as e:
                errors.append(f"{name}: invalid JSON: {e}")
                continue
            for err in validator.iter_errors(doc):
                loc = "/".join(str(p) for p in err.absolute_path)
                errors.append(f"{name}: {loc}: {err.message}")
        elif name.endswith(".csv"):
            suffix, header = kind_of(name, CSV_HEADERS)
            if suffix is None:
                errors.append(f"{name}: unknown CSV artifact")
                continue
            first = path.read_text().split("\n", 1)[0]
            if header is not None and first != header:
                errors.append(f"{name}: header {first!r}, expected {header!r}")
            elif header is None and not first.startswith(PREFIXES[suffix]):
                errors.append(f"{name}: header {first!r} does not start with {PREFIXES[suffix]!r}")
        else:
            errors.append(f"{name}: unexpected file type")
        checked += 1

    for e in errors:
        print("FAIL", e)
    print(f"{checked} artifacts checked, {len(errors)} problems")
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
