"""Small output helpers shared by the experiment scripts."""
import argparse
import csv
import json
from pathlib import Path


def out_dir_arg(description, default):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out-dir", default=default, help="directory for CSV/JSON results")
    args = ap.parse_args()
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
