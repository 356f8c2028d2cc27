#!/usr/bin/env python3
"""Reference external solver: exhaustive branching search with unit
propagation and pure-literal elimination, lowest-variable-first branching,
false branch explored first. Prints the node count as "nodes: N".

Mirrors the engine's transition semantics so external-vs-internal equality
can be checked end to end on small instances.
"""
import sys


def parse(path):
    clauses = []
    nvars = 0
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line[0] in "c%":
                continue
            if line.startswith("p"):
                nvars = int(line.split()[2])
                continue
            lits = [int(t) for t in line.split()]
            assert lits[-1] == 0
            clauses.append(tuple(lits[:-1]))
    return nvars, clauses


def assign(clauses, lit):
    out = []
    for c in clauses:
        if lit in c:
            continue
        if -lit in c:
            out.append(tuple(x for x in c if x != -lit))
        else:
            out.append(c)
    return out


def simplify(clauses):
    while True:
        changed = False
        # unit propagation to fixpoint, first unit clause in list order
        while True:
            if any(len(c) == 0 for c in clauses):
                return clauses
            unit = next((c[0] for c in clauses if len(c) == 1), None)
            if unit is None:
                break
            clauses = assign(clauses, unit)
            changed = True
        if any(len(c) == 0 for c in clauses):
            return clauses
        # one pure-literal sweep, ascending variable order with recheck
        polarity = {}
        for c in clauses:
            for lit in c:
                polarity[abs(lit)] = polarity.get(abs(lit), 0) | (1 if lit > 0 else 2)
        for var in sorted(v for v, p in polarity.items() if p in (1, 2)):
            pos = any(var in c for c in clauses)
            neg = any(-var in c for c in clauses)
            if pos == neg:
                continue
            clauses = assign(clauses, var if pos else -var)
            changed = True
        if not changed:
            return clauses


def solve(clauses):
    """Returns (nodes, satisfiable); exhaustive on unsatisfiable subtrees."""
    if any(len(c) == 0 for c in clauses):
        return 1, False
    if not clauses:
        return 1, True
    var = min(abs(lit) for c in clauses for lit in c)
    total = 1
    for lit in (-var, var):
        nodes, sat = solve(simplify(assign(clauses, lit)))
        total += nodes
        if sat:
            return total, True
    return total, False


def main():
    sys.setrecursionlimit(100000)
    _, clauses = parse(sys.argv[1])
    nodes, sat = solve(simplify(clauses))
    print("s", "SATISFIABLE" if sat else "UNSATISFIABLE")
    print(f"nodes: {nodes}")


main()
