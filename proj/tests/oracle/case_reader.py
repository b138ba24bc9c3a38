"""Reference MATPOWER case reader, independent of the C++ parser.

Parses mpc.baseMVA / mpc.bus / mpc.gen / mpc.branch / mpc.gencost tables
from a .m case file and converts to per-unit. Used by reference_pf.py and
to freeze expected counts for the parser tests.
"""
import re
import sys


def _table(text, name):
    m = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % name, text, re.S)
    if m is None:
        raise ValueError("missing table %s" % name)
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if not line:
            continue
        rows.append([float(tok) for tok in line.split()])
    return rows


def read_case(path):
    text = open(path).read()
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)\s*;", text).group(1))
    case = {
        "base_mva": base,
        "bus": _table(text, "bus"),
        "gen": _table(text, "gen"),
        "branch": _table(text, "branch"),
        "gencost": _table(text, "gencost"),
    }
    return case


def summary(case):
    in_service = [b for b in case["branch"] if b[10] != 0]
    on_gens = [g for g in case["gen"] if g[7] != 0]
    gen_buses = sorted({int(g[0]) for g in on_gens})
    slack_buses = [int(b[0]) for b in case["bus"] if int(b[1]) == 3]
    n_nonslack_gens = sum(1 for g in on_gens if int(g[0]) not in slack_buses)
    return {
        "n_bus": len(case["bus"]),
        "n_branch": len(in_service),
        "n_gen": len(on_gens),
        "n_gen_buses": len(gen_buses),
        "box_dim": n_nonslack_gens + len(gen_buses),
        "slack_buses": slack_buses,
    }


if __name__ == "__main__":
    case = read_case(sys.argv[1] if len(sys.argv) > 1 else "data/case14.m")
    for k, v in summary(case).items():
        print(k, "=", v)
