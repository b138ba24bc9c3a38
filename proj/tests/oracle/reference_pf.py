"""Reference AC power flow oracle, independent of the C++ implementation.

Textbook Newton-Raphson in polar coordinates with element-wise Jacobian
formulas (Bergen & Vittal style), numpy only. Model class matches the
library: branch tap ratios are ignored, line charging split half per end,
bus shunts in p.u. on baseMVA. Nominal operating point: gen PG from the
case for non-slack generators, generator-bus |V| setpoints from VG, loads
at nominal.

Emits tests/reference_case14.hpp with frozen expected values.
"""
import sys
import numpy as np

from case_reader import read_case, summary


def build(case):
    base = case["base_mva"]
    bus = case["bus"]
    n = len(bus)
    id2ix = {int(b[0]): i for i, b in enumerate(bus)}
    btype = np.array([int(b[1]) for b in bus])
    pd = np.array([b[2] for b in bus]) / base
    qd = np.array([b[3] for b in bus]) / base
    gs = np.array([b[4] for b in bus]) / base
    bs = np.array([b[5] for b in bus]) / base

    Y = np.zeros((n, n), dtype=complex)
    for br in case["branch"]:
        if br[10] == 0:
            continue
        i, j = id2ix[int(br[0])], id2ix[int(br[1])]
        ys = 1.0 / complex(br[2], br[3])
        bc = br[4]
        Y[i, i] += ys + 0.5j * bc
        Y[j, j] += ys + 0.5j * bc
        Y[i, j] -= ys
        Y[j, i] -= ys
    for i in range(n):
        Y[i, i] += complex(gs[i], bs[i])
    return id2ix, btype, pd, qd, Y


def solve(case, tol=1e-8, max_iter=20):
    base = case["base_mva"]
    id2ix, btype, pd, qd, Y = build(case)
    n = len(btype)
    G, B = Y.real, Y.imag

    slack = int(np.where(btype == 3)[0][0])
    pv = [i for i in range(n) if btype[i] == 2]
    pq = [i for i in range(n) if btype[i] == 1]

    pgen = np.zeros(n)
    vset = {}
    for g in case["gen"]:
        if g[7] == 0:
            continue
        i = id2ix[int(g[0])]
        vset[i] = g[5]
        if i != slack:
            pgen[i] += g[1] / base
    p_spec = pgen - pd
    q_spec = -qd

    vm = np.ones(n)
    va = np.zeros(n)
    for i, v in vset.items():
        vm[i] = v

    def calc_pq():
        p = np.zeros(n)
        q = np.zeros(n)
        for i in range(n):
            for k in range(n):
                if G[i, k] == 0.0 and B[i, k] == 0.0:
                    continue
                t = va[i] - va[k]
                p[i] += vm[i] * vm[k] * (G[i, k] * np.cos(t) + B[i, k] * np.sin(t))
                q[i] += vm[i] * vm[k] * (G[i, k] * np.sin(t) - B[i, k] * np.cos(t))
        return p, q

    ang = [i for i in range(n) if i != slack]
    iters = 0
    for it in range(max_iter + 1):
        p, q = calc_pq()
        f = np.concatenate([(p - p_spec)[ang], (q - q_spec)[pq]])
        if np.max(np.abs(f)) <= tol:
            iters = it
            break
        if it == max_iter:
            raise RuntimeError("no convergence")
        m = len(ang)
        J = np.zeros((m + len(pq), m + len(pq)))
        for a, i in enumerate(ang):
            for b, k in enumerate(ang):
                if i == k:
                    J[a, b] = -q[i] - B[i, i] * vm[i] ** 2
                else:
                    t = va[i] - va[k]
                    J[a, b] = vm[i] * vm[k] * (G[i, k] * np.sin(t) - B[i, k] * np.cos(t))
            for b, k in enumerate(pq):
                if i == k:
                    J[a, m + b] = p[i] / vm[i] + G[i, i] * vm[i]
                else:
                    t = va[i] - va[k]
                    J[a, m + b] = vm[i] * (G[i, k] * np.cos(t) + B[i, k] * np.sin(t))
        for a, i in enumerate(pq):
            for b, k in enumerate(ang):
                if i == k:
                    J[m + a, b] = p[i] - G[i, i] * vm[i] ** 2
                else:
                    t = va[i] - va[k]
                    J[m + a, b] = -vm[i] * vm[k] * (G[i, k] * np.cos(t) + B[i, k] * np.sin(t))
            for b, k in enumerate(pq):
                if i == k:
                    J[m + a, m + b] = q[i] / vm[i] - B[i, i] * vm[i]
                else:
                    t = va[i] - va[k]
                    J[m + a, m + b] = vm[i] * (G[i, k] * np.sin(t) - B[i, k] * np.cos(t))
        d = np.linalg.solve(J, -f)
        va[ang] += d[:m]
        vm[pq] += d[m:]

    p, q = calc_pq()
    slack_p = p[slack] + pd[slack]
    slack_q = q[slack] + qd[slack]
    qg = []
    for g in case["gen"]:
        if g[7] == 0:
            continue
        i = id2ix[int(g[0])]
        ngen_at = sum(1 for h in case["gen"] if h[7] != 0 and id2ix[int(h[0])] == i)
        qg.append((q[i] + qd[i]) / ngen_at)

    cost = 0.0
    for g, gc in zip(case["gen"], case["gencost"]):
        if g[7] == 0:
            continue
        i = id2ix[int(g[0])]
        p_pu = slack_p if i == slack else g[1] / base
        c2, c1, c0 = gc[4] * base * base, gc[5] * base, gc[6]
        cost += c2 * p_pu * p_pu + c1 * p_pu + c0

    return dict(vm=vm, va=va, iters=iters, slack_p=slack_p, slack_q=slack_q,
                qg=np.array(qg), cost=cost)


def emit_header(case, sol, out):
    s = summary(case)
    w = open(out, "w")
    w.write("// Frozen reference values for data/case14.m, generated by\n")
    w.write("// tests/oracle/reference_pf.py (independent numpy Newton power flow\n")
    w.write("// with element-wise textbook Jacobian). Do not edit by hand.\n")
    w.write("#pragma once\n\nnamespace refcase14 {\n\n")
    w.write("inline constexpr int n_bus = %d;\n" % s["n_bus"])
    w.write("inline constexpr int n_branch = %d;\n" % s["n_branch"])
    w.write("inline constexpr int n_gen = %d;\n" % s["n_gen"])
    w.write("inline constexpr int box_dim = %d;\n" % s["box_dim"])
    w.write("inline constexpr int newton_iterations = %d;\n\n" % sol["iters"])

    def arr(name, v):
        w.write("inline constexpr double %s[%d] = {\n" % (name, len(v)))
        for x in v:
            w.write("    %.16e,\n" % x)
        w.write("};\n\n")

    arr("vm", sol["vm"])
    arr("va", sol["va"])
    arr("qg", sol["qg"])
    w.write("inline constexpr double slack_p = %.16e;\n" % sol["slack_p"])
    w.write("inline constexpr double slack_q = %.16e;\n" % sol["slack_q"])
    w.write("inline constexpr double cost = %.16e;\n" % sol["cost"])
    w.write("\n}  // namespace refcase14\n")
    w.close()


if __name__ == "__main__":
    path = sys.argv[1] if len(sys.argv) > 1 else "data/case14.m"
    out = sys.argv[2] if len(sys.argv) > 2 else "tests/reference_case14.hpp"
    case = read_case(path)
    sol = solve(case)
    print("iters =", sol["iters"])
    print("vm =", np.array2string(sol["vm"], precision=6))
    print("va(deg) =", np.array2string(np.degrees(sol["va"]), precision=4))
    print("slack_p =", sol["slack_p"], " slack_q =", sol["slack_q"])
    print("qg =", np.array2string(sol["qg"], precision=6))
    print("cost =", sol["cost"])
    emit_header(case, sol, out)
    print("wrote", out)
