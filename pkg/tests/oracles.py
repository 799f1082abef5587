"""Slow, loop-based reference implementations used as test oracles.

Each one is written straight from the textbook definition and shares no
code with the package.
"""
import itertools
import math


def ari_pairs(u, v):
    """Adjusted Rand from the four pair-counting categories, O(N^2)."""
    n = len(u)
    a = b = c = d = 0
    for i, j in itertools.combinations(range(n), 2):
        su, sv = u[i] == u[j], v[i] == v[j]
        if su and sv:
            a += 1
        elif su:
            b += 1
        elif sv:
            c += 1
        else:
            d += 1
    denom = (a + b) * (b + d) + (a + c) * (c + d)
    if denom == 0:
        return 1.0 if b == c == 0 else 0.0
    return 2.0 * (a * d - b * c) / denom


def _groups(x, labels):
    out = {}
    for row, lab in zip(x, labels):
        out.setdefault(lab, []).append(list(row))
    return [out[k] for k in sorted(out)]


def _mean(rows):
    dim = len(rows[0])
    return [sum(r[t] for r in rows) / len(rows) for t in range(dim)]


def _sq(p, q):
    return sum((a - b) ** 2 for a, b in zip(p, q))


def ball_hall(x, labels):
    gs = _groups(x, labels)
    return sum(sum(_sq(r, _mean(g)) for r in g) / len(g) for g in gs) / len(gs)


def calinski_harabasz(x, labels):
    gs = _groups(x, labels)
    n, k = len(x), len(gs)
    mu = _mean([list(r) for r in x])
    w = sum(_sq(r, _mean(g)) for g in gs for r in g)
    b = sum(len(g) * _sq(_mean(g), mu) for g in gs)
    return (b / (k - 1)) / (w / (n - k))


def davies_bouldin(x, labels):
    gs = _groups(x, labels)
    cs = [_mean(g) for g in gs]
    s = [sum(math.sqrt(_sq(r, c)) for r in g) / len(g) for g, c in zip(gs, cs)]
    k = len(gs)
    total = 0.0
    for i in range(k):
        total += max((s[i] + s[j]) / math.sqrt(_sq(cs[i], cs[j])) for j in range(k) if j != i)
    return total / k


def _matmul(a, b):
    return [[sum(a[i][t] * b[t][j] for t in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def _solve(a, b):
    """Gauss-Jordan elimination with partial pivoting, a X = b."""
    n = len(a)
    m = [list(a[i]) + list(b[i]) for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for r in range(n):
            if r != col:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [row[n:] for row in m]


def trace_wib(x, labels, ridge=1e-9):
    gs = _groups(x, labels)
    dim = len(x[0])
    mu = _mean([list(r) for r in x])
    w = [[0.0] * dim for _ in range(dim)]
    b = [[0.0] * dim for _ in range(dim)]
    for g in gs:
        c = _mean(g)
        for r in g:
            for s in range(dim):
                for t in range(dim):
                    w[s][t] += (r[s] - c[s]) * (r[t] - c[t])
        for s in range(dim):
            for t in range(dim):
                b[s][t] += len(g) * (c[s] - mu[s]) * (c[t] - mu[t])
    eps = ridge * sum(w[i][i] for i in range(dim)) / dim
    wr = [[w[s][t] + (eps if s == t else 0.0) for t in range(dim)] for s in range(dim)]
    sol = _solve(wr, b)
    return sum(sol[i][i] for i in range(dim))


def _var_vec(rows):
    c = _mean(rows)
    return [sum((r[t] - c[t]) ** 2 for r in rows) / len(rows) for t in range(len(c))]


def _norm(v):
    return math.sqrt(sum(t * t for t in v))


def _scat(x, gs):
    return sum(_norm(_var_vec(g)) for g in gs) / len(gs) / _norm(_var_vec([list(r) for r in x]))


def sd_index(x, labels, alpha=1.0):
    gs = _groups(x, labels)
    cs = [_mean(g) for g in gs]
    k = len(cs)
    dist = [[math.sqrt(_sq(cs[i], cs[j])) for j in range(k)] for i in range(k)]
    off = [dist[i][j] for i in range(k) for j in range(k) if i != j]
    dis = max(off) / min(off) * sum(1.0 / sum(dist[i][j] for j in range(k) if j != i) for i in range(k))
    return alpha * _scat(x, gs) + dis


def s_dbw(x, labels):
    gs = _groups(x, labels)
    cs = [_mean(g) for g in gs]
    k = len(gs)
    stdev = math.sqrt(sum(_norm(_var_vec(g)) for g in gs)) / k

    def density(point, members):
        return sum(1 for r in members if math.sqrt(_sq(r, point)) <= stdev)

    dens = 0.0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            members = gs[i] + gs[j]
            mid = [(a + b) / 2 for a, b in zip(cs[i], cs[j])]
            top = max(density(cs[i], members), density(cs[j], members))
            if top > 0:
                dens += density(mid, members) / top
    return _scat(x, gs) + dens / (k * (k - 1))


def complete_linkage_heights(d):
    """Naive agglomeration: recompute every cluster-pair diameter at each step."""
    n = len(d)
    clusters = {i: [i] for i in range(n)}
    heights = []
    pairs = []
    nxt = n
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            h = max(d[i][j] for i in clusters[a] for j in clusters[b])
            key = (h, min(a, b), max(a, b))
            if best is None or key < best:
                best = key
        h, a, b = best
        heights.append(h)
        pairs.append((a, b))
        clusters[nxt] = clusters.pop(a) + clusters.pop(b)
        nxt += 1
    return heights, pairs


def set_coefficients(x, y):
    """(jaccard, dice, braun-blanquet) similarities from Python sets."""
    sx = {i for i, v in enumerate(x) if v}
    sy = {i for i, v in enumerate(y) if v}
    a = len(sx & sy)
    b = len(sx - sy)
    c = len(sy - sx)
    if a + b + c == 0:
        return 1.0, 1.0, 1.0
    return a / (a + b + c), 2 * a / (2 * a + b + c), a / max(a + b, a + c)
