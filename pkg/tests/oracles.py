"""Independent scalar-loop oracles used by unit and acceptance tests.

Nothing here may call into the package's numeric paths; everything is
pure-Python loops over floats so the tests have a second opinion.
"""

import math


def brute_force_map(x_a, w_a, x_b, w_b):
    """Quadruple loop: out[i,j] = sum_c (sum_u W_a[c,u] x_a[i,u]) *
    (sum_v W_b[c,v] x_b[j,v])."""
    n_a, n_b, k = len(x_a), len(x_b), len(w_a)
    out = [[0.0] * n_b for _ in range(n_a)]
    for i in range(n_a):
        for j in range(n_b):
            acc = 0.0
            for c in range(k):
                left = sum(w_a[c][u] * x_a[i][u] for u in range(len(x_a[i])))
                right = sum(w_b[c][v] * x_b[j][v] for v in range(len(x_b[j])))
                acc += left * right
            out[i][j] = acc
    return out


def softmax_loop(values):
    biggest = max(values)
    exps = [math.exp(v - biggest) for v in values]
    total = sum(exps)
    return [e / total for e in exps]


def column_mean(matrix):
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    return [sum(matrix[i][j] for i in range(rows)) / rows for j in range(cols)]


def row_mean(matrix):
    return [sum(row) / len(row) for row in matrix]


def fusion_oracle(maps, X_l, X_g, X_p, X_s, X_t, X_q):
    """Full two-stage fusion computed with scalar loops.

    `maps` holds lists-of-lists keyed "lp".."gq"; empty protein levels
    must be absent from `maps`. Returns a dict of every intermediate.
    """
    level_matrix = {"p": X_p, "s": X_s, "t": X_t}
    d = len(X_l[0])

    S = {}
    for level in "pstq":
        local = maps.get("l" + level)
        glob = maps.get("g" + level)
        if local is None or glob is None or not glob[0]:
            continue
        S[level] = [glob[0][j] + col for j, col in enumerate(column_mean(local))]
    S_l = [0.0] * len(X_l)
    S_g = 0.0
    for level in "pstq":
        if level not in S:
            continue
        for i, v in enumerate(row_mean(maps["l" + level])):
            S_l[i] += v
        flat = [v for row in maps["g" + level] for v in row]
        S_g += sum(flat) / len(flat)

    out = {"S": S, "S_l": S_l, "S_g": S_g}
    level_repr = {}
    for level in "pst":
        if level not in S:
            continue
        w = softmax_loop(S[level])
        X = level_matrix[level]
        level_repr[level] = [sum(w[i] * X[i][c] for i in range(len(X)))
                             for c in range(d)]
        out["w_" + level] = w
    if "q" in S:
        s_q = S["q"][0]
        level_repr["q"] = [s_q * X_q[0][c] for c in range(d)]
    out["level_repr"] = level_repr

    present = [level for level in "pstq" if level in S]
    means = [sum(S[level]) / len(S[level]) for level in present]
    w_present = softmax_loop(means)
    w_T = {level: w for level, w in zip(present, w_present)}
    r_T = [sum(w_T[level] * level_repr[level][c] for level in present)
           for c in range(d)]

    w_l = softmax_loop(S_l)
    r_l = [sum(w_l[i] * X_l[i][c] for i in range(len(X_l))) for c in range(d)]
    r_g = list(X_g[0])
    w_D = softmax_loop([sum(S_l) / len(S_l), S_g])
    r_D = [w_D[0] * r_l[c] + w_D[1] * r_g[c] for c in range(d)]

    out.update(w_T=w_T, r_T=r_T, w_l=w_l, r_l=r_l, w_D=w_D, r_D=r_D,
               z=r_D + r_T)
    return out


def auc_concordance(scores, labels):
    """O(P*N) pairwise concordance with ties counted 0.5."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def average_precision_loop(scores, labels):
    """Stable descending sort, precision summed at each positive rank."""
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    hits = 0
    acc = 0.0
    for rank, idx in enumerate(order, start=1):
        if labels[idx] == 1:
            hits += 1
            acc += hits / rank
    return acc / sum(labels)
