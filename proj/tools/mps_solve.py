#!/usr/bin/env python3
"""Solve an exported MPS model with scipy's HiGHS bindings.

Reads the free-format MPS dialect written by the linkwave exporter
(OBJSENSE MAX, RANGES on two-sided rows, INTORG/INTEND markers, BV/FX/UP/LO/MI
bounds) and writes a solution file the importer understands:

    # status optimal
    # bound 123.456
    QBAR_I1_T00 1500
    ...
"""

import argparse
import math
import sys

import numpy as np
from scipy import optimize, sparse


def parse_mps(path):
    rows = []            # (name, type) excluding the objective row
    row_index = {}
    obj_name = None
    cols = []            # first-appearance order
    col_index = {}
    entries = []         # (row, col, value)
    obj = {}
    rhs = {}
    ranges = {}
    bounds = {}          # col -> [lo, hi]
    integer = set()
    sense = "MIN"

    section = None
    in_integer = False

    def col_id(name):
        if name not in col_index:
            col_index[name] = len(cols)
            cols.append(name)
            bounds[len(cols) - 1] = [0.0, math.inf]
        return col_index[name]

    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line[0].isspace():
                section = line.split()[0].upper()
                if section == "ENDATA":
                    break
                continue
            tok = line.split()
            if section == "OBJSENSE":
                sense = tok[0].upper()
            elif section == "ROWS":
                rtype, rname = tok[0].upper(), tok[1]
                if rtype == "N":
                    if obj_name is None:
                        obj_name = rname
                else:
                    row_index[rname] = len(rows)
                    rows.append((rname, rtype))
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_integer = tok[2] == "'INTORG'"
                    continue
                c = col_id(tok[0])
                if in_integer:
                    integer.add(c)
                for k in range(1, len(tok) - 1, 2):
                    rname, value = tok[k], float(tok[k + 1])
                    if rname == obj_name:
                        obj[c] = obj.get(c, 0.0) + value
                    else:
                        entries.append((row_index[rname], c, value))
            elif section == "RHS":
                for k in range(1, len(tok) - 1, 2):
                    if tok[k] != obj_name:
                        rhs[row_index[tok[k]]] = float(tok[k + 1])
            elif section == "RANGES":
                for k in range(1, len(tok) - 1, 2):
                    ranges[row_index[tok[k]]] = float(tok[k + 1])
            elif section == "BOUNDS":
                btype = tok[0].upper()
                c = col_id(tok[2])
                if btype == "FX":
                    v = float(tok[3])
                    bounds[c] = [v, v]
                elif btype == "BV":
                    bounds[c] = [0.0, 1.0]
                    integer.add(c)
                elif btype == "UP":
                    bounds[c][1] = float(tok[3])
                elif btype == "LO":
                    bounds[c][0] = float(tok[3])
                elif btype == "MI":
                    bounds[c][0] = -math.inf
                elif btype == "PL":
                    bounds[c][1] = math.inf
                else:
                    raise ValueError(f"unsupported bound type {btype}")

    m, n = len(rows), len(cols)
    lo = np.full(m, -math.inf)
    hi = np.full(m, math.inf)
    for i, (_, rtype) in enumerate(rows):
        b = rhs.get(i, 0.0)
        if rtype == "E":
            lo[i] = hi[i] = b
        elif rtype == "L":
            hi[i] = b
            if i in ranges:
                lo[i] = b - abs(ranges[i])
        elif rtype == "G":
            lo[i] = b
            if i in ranges:
                hi[i] = b + abs(ranges[i])
        else:
            raise ValueError(f"unsupported row type {rtype}")

    if entries:
        ri, ci, vv = zip(*entries)
        a_mat = sparse.csr_matrix((vv, (ri, ci)), shape=(m, n))
    else:
        a_mat = sparse.csr_matrix((m, n))

    c = np.zeros(n)
    for j, v in obj.items():
        c[j] = v
    col_lo = np.array([bounds[j][0] for j in range(n)])
    col_hi = np.array([bounds[j][1] for j in range(n)])
    integrality = np.zeros(n)
    for j in integer:
        integrality[j] = 1
    return {
        "sense": sense, "cols": cols, "c": c, "A": a_mat,
        "row_lo": lo, "row_hi": hi, "col_lo": col_lo, "col_hi": col_hi,
        "integrality": integrality,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("mps", help="input MPS file")
    ap.add_argument("out", help="output solution file")
    ap.add_argument("--time-limit", type=float, default=None, help="seconds")
    ap.add_argument("--gap", type=float, default=1e-6, help="relative MIP gap")
    args = ap.parse_args()

    p = parse_mps(args.mps)
    sign = -1.0 if p["sense"] == "MAX" else 1.0
    options = {"mip_rel_gap": args.gap}
    if args.time_limit:
        options["time_limit"] = args.time_limit

    # The HiGHS build vendored by scipy 1.15 mis-presolves ranged rows on
    # integer models (declares feasible instances infeasible), so hand it
    # each two-sided row as a separate <= and >= pair instead.
    a_mat = p["A"].tocsr()
    lo, hi = p["row_lo"], p["row_hi"]
    two = np.isfinite(lo) & np.isfinite(hi) & (lo < hi)
    if two.any():
        a_mat = sparse.vstack([a_mat, a_mat[two]], format="csr")
        lo = np.concatenate([np.where(two, -np.inf, lo), p["row_lo"][two]])
        hi = np.concatenate([p["row_hi"], np.full(int(two.sum()), np.inf)])

    res = optimize.milp(
        c=sign * p["c"],
        constraints=optimize.LinearConstraint(a_mat, lo, hi),
        bounds=optimize.Bounds(p["col_lo"], p["col_hi"]),
        integrality=p["integrality"],
        options=options,
    )

    with open(args.out, "w") as out:
        if res.status == 2:
            out.write("# status infeasible\n")
            print("infeasible", file=sys.stderr)
            return 0
        if res.x is None:
            out.write("# status unbounded\n")
            print(f"no solution: {res.message}", file=sys.stderr)
            return 1
        status = "optimal" if res.status == 0 else "feasible"
        out.write(f"# status {status}\n")
        bound = getattr(res, "mip_dual_bound", None)
        if bound is not None and math.isfinite(bound):
            out.write(f"# bound {sign * bound:.17g}\n")
        for name, v in zip(p["cols"], res.x):
            out.write(f"{name} {v:.17g}\n")
    print(f"{status}: objective {sign * res.fun:.9g}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
