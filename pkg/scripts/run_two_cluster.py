#!/usr/bin/env python3
"""Reproduce the two-cluster classroom structure headlessly.

Runs 18 scripted agents (9 preferring studio tags, 9 preferring outdoor
tags) for 300 steps, writes the export and graph payloads, and reports the
connected components of the similarity graph at a 0.5 threshold.
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from somekone.catalog import load_catalog
from somekone.config import EngineConfig
from somekone.simulate import load_personas, run_simulation, write_outputs

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "somekone" / "fixtures"


def components(nodes, edges):
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    groups = {}
    for n in nodes:
        groups.setdefault(find(n), []).append(n)
    return list(groups.values())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", type=int, default=18)
    parser.add_argument("--steps", type=int, default=300)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--threshold", type=float, default=0.5)
    parser.add_argument("--out", default="out/two_cluster")
    args = parser.parse_args()

    catalog = load_catalog((FIXTURES / "catalog_small.json").read_bytes())
    personas = load_personas(FIXTURES / "two_cluster.json")

    started = time.time()
    session = run_simulation(
        catalog, EngineConfig(seed=args.seed), personas,
        agents=args.agents, steps=args.steps,
    )
    elapsed = time.time() - started
    paths = write_outputs(session, args.out)
    print(f"simulated {len(session.log)} events in {elapsed:.1f}s")
    for name in sorted(paths):
        print(f"  {name}: {paths[name]}")

    graph = json.loads(paths["similarity"].read_text())
    strong = [(e["a"], e["b"]) for e in graph["edges"] if e["w"] >= args.threshold]
    groups = components(graph["nodes"], strong)
    print(f"\ncomponents at similarity >= {args.threshold}: {len(groups)}")
    for group in sorted(groups, key=len, reverse=True):
        nicknames = [session.roster[u] for u in sorted(group)]
        print(f"  {len(group)} users: {', '.join(nicknames)}")


if __name__ == "__main__":
    main()
