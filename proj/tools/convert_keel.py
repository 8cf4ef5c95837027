#!/usr/bin/env python3
"""Convert KEEL .dat / UCI comma files into the header CSV layout the CLI reads.

Duplicate feature rows are dropped (first occurrence kept), since the graph
builder rejects repeated samples.

usage: convert_keel.py INPUT OUTPUT [--label-name class]
"""
import argparse
import csv


def read_rows(path):
    names, rows = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            low = line.lower()
            if low.startswith("@attribute"):
                names.append(line.split()[1])
            elif low.startswith("@"):
                continue
            else:
                rows.append([c.strip() for c in line.split(",")])
    return names, rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--label-name", default="class")
    args = ap.parse_args()

    names, rows = read_rows(args.input)
    width = len(rows[0])
    if len(names) != width:
        names = [f"x{i}" for i in range(width - 1)] + ["class"]
    names[-1] = args.label_name

    seen, kept = set(), []
    for r in rows:
        key = tuple(float(v) for v in r[:-1])
        if key in seen:
            continue
        seen.add(key)
        kept.append(r)

    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        w.writerows(kept)
    print(f"{args.output}: {len(kept)} rows ({len(rows) - len(kept)} duplicates dropped)")


if __name__ == "__main__":
    main()
