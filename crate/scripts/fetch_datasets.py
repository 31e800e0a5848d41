#!/usr/bin/env python3
"""Fetch the public benchmark datasets into data/ as headered CSV files.

    python3 scripts/fetch_datasets.py [--out data]

Pima diabetes is extracted from the `keel-ds` wheel on PyPI (768 rows, KEEL
copy of the UCI file). Banknote authentication and blood transfusion are
downloaded from the UCI repository when it is reachable; otherwise a notice is
printed and those files are left absent.
"""

import argparse
import csv
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

PIMA_HEADER = [
    "Pregnancies", "Glucose", "BloodPressure", "SkinThickness", "Insulin",
    "BMI", "DiabetesPedigreeFunction", "Age", "Outcome",
]
BANKNOTE_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/00267/data_banknote_authentication.txt"
BANKNOTE_HEADER = ["variance", "skewness", "curtosis", "entropy", "class"]
TRANSFUSION_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/blood-transfusion/transfusion.data"
TRANSFUSION_HEADER = ["recency", "frequency", "monetary", "time", "donated"]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fetch_pima(out):
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "keel-ds==0.2.5", "-d", tmp],
            check=True,
        )
        wheel = next(Path(tmp).glob("keel_ds-*.whl"))
        text = zipfile.ZipFile(wheel).read("keel_ds/data/balanced/raw/pima.dat").decode()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        *features, label = [c.strip() for c in line.split(",")]
        rows.append(features + ["1" if label == "tested_positive" else "0"])
    if len(rows) != 768:
        raise SystemExit(f"unexpected pima row count {len(rows)}")
    write_csv(out / "diabetes.csv", PIMA_HEADER, rows)


def fetch_url(url, out_path, header, parse):
    try:
        with urllib.request.urlopen(url, timeout=20) as r:
            text = r.read().decode()
    except OSError as e:
        print(f"skipped {out_path.name}: {url} unreachable ({e})")
        return
    write_csv(out_path, header, parse(text))


def parse_banknote(text):
    return [line.split(",") for line in text.split() if line]


def parse_transfusion(text):
    reader = csv.reader(io.StringIO(text))
    next(reader)
    return [[c.strip() for c in row] for row in reader if row]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fetch_pima(out)
    fetch_url(BANKNOTE_URL, out / "banknote.csv", BANKNOTE_HEADER, parse_banknote)
    fetch_url(TRANSFUSION_URL, out / "transfusion.csv", TRANSFUSION_HEADER, parse_transfusion)


if __name__ == "__main__":
    main()
