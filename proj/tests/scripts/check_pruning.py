#!/usr/bin/env python3
"""Recompute edge survival for exported graph files and compare the flags.

usage: check_pruning.py GRAPH.json [GRAPH.json ...]

Prints one line per file and exits 1 if any flag disagrees.
"""
import bisect
import json
import sys


def threshold(values, zeta):
    if zeta == 0.0:
        return float("-inf")
    xs = sorted(values)
    n = len(xs)
    for v in xs:
        if bisect.bisect_right(xs, v) / n >= zeta:
            return v
    return xs[-1]


def check(path):
    with open(path) as f:
        g = json.load(f)
    zeta = g["zeta"]
    if zeta is None:
        return f"{path}: not pruned", False
    edges = g["edges"]
    cut = threshold([e["relatedness"] for e in edges], zeta)
    bad = [i for i, e in enumerate(edges) if (e["relatedness"] >= cut) != e["surviving"]]
    kept = sum(e["surviving"] for e in edges)
    if bad:
        return f"{path}: {len(bad)} of {len(edges)} flags differ (first edge {bad[0]})", False
    return f"{path}: ok, {kept}/{len(edges)} surviving at zeta {zeta}", True


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    ok = True
    for p in argv[1:]:
        line, good = check(p)
        print(line)
        ok = ok and good
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
