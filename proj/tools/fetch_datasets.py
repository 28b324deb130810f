#!/usr/bin/env python3
# Copyright 2026 The FairForge Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Fetches the public benchmark datasets and writes header-bearing CSVs.

Adult, COMPAS and German Credit are taken from the data files bundled in the
`responsibly` wheel on PyPI. MEPS cannot be redistributed; produce it with
the AIF360 MEPS panel-19 recipe and save it as data/meps.csv.

Usage: tools/fetch_datasets.py [--out data]
"""

import argparse
import csv
import pathlib
import subprocess
import sys
import tempfile
import zipfile

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]

GERMAN_COLUMNS = [
    "status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "present_employment", "installment_rate", "status_sex",
    "other_debtors", "present_residence_since", "property", "age",
    "installment_plans", "housing", "number_of_existing_credits", "job",
    "number_of_people_liable_for", "telephone", "foreign_worker", "credit",
]

COMPAS_COLUMNS = [
    "id", "sex", "age", "age_cat", "race", "juv_fel_count", "juv_misd_count",
    "juv_other_count", "priors_count", "c_charge_degree", "two_year_recid",
]


def fetch_wheel(workdir: pathlib.Path) -> pathlib.Path:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps",
         "responsibly==0.1.2", "-d", str(workdir)],
        check=True, stdout=subprocess.DEVNULL)
    wheels = sorted(workdir.glob("responsibly-*.whl"))
    if not wheels:
        sys.exit("responsibly wheel not found after pip download")
    return wheels[0]


def write_adult(z: zipfile.ZipFile, out: pathlib.Path) -> int:
    rows = []
    for member in ("adult.data", "adult.test"):
        text = z.read(f"responsibly/dataset/adult/{member}").decode()
        for line in text.splitlines():
            if not line.strip() or line.startswith("|"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != len(ADULT_COLUMNS):
                continue
            fields = ["" if f == "?" else f for f in fields]
            fields[-1] = fields[-1].rstrip(".")
            rows.append(fields)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ADULT_COLUMNS)
        w.writerows(rows)
    return len(rows)


def write_german(z: zipfile.ZipFile, out: pathlib.Path) -> int:
    text = z.read("responsibly/dataset/german/german.data").decode()
    rows = [line.split() for line in text.splitlines() if line.strip()]
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GERMAN_COLUMNS)
        w.writerows(rows)
    return len(rows)


def write_compas(z: zipfile.ZipFile, out: pathlib.Path) -> int:
    text = z.read(
        "responsibly/dataset/compas/compas-scores-two-years.csv").decode()
    reader = csv.reader(text.splitlines())
    header = next(reader)
    # The upstream file repeats some column names; keep first occurrences.
    index = {}
    for i, name in enumerate(header):
        index.setdefault(name, i)
    n = 0
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPAS_COLUMNS)
        for row in reader:
            w.writerow([row[index[c]] for c in COMPAS_COLUMNS])
            n += 1
    return n


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data")
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = fetch_wheel(pathlib.Path(tmp))
        with zipfile.ZipFile(wheel) as z:
            print("adult.csv", write_adult(z, out / "adult.csv"))
            print("compas.csv", write_compas(z, out / "compas.csv"))
            print("german.csv", write_german(z, out / "german.csv"))
    if not (out / "meps.csv").exists():
        print("meps.csv not present (see module docstring)")


if __name__ == "__main__":
    main()
