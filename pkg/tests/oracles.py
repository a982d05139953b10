"""Brute-force reference implementations used by the tests.

Plain Python loops over lists, sharing no code with the package, so
agreement is meaningful.
"""

from __future__ import annotations

import math


def rows(X):
    return [[int(v) for v in r] for r in X]


def prevalence(X):
    X = rows(X)
    n = len(X)
    return [sum(r[k] for r in X) / n for k in range(len(X[0]))]


def mmd(R, S):
    pr, ps = prevalence(R), prevalence(S)
    return max(abs(a - b) for a, b in zip(pr, ps))


def pct_errors(R, S):
    pr, ps = prevalence(R), prevalence(S)
    rel = [(s - r) / r for r, s in zip(pr, ps) if r > 0]
    rmspe_raw = 100 * math.sqrt(sum(e * e for e in rel) / len(rel))
    mape = 100 * sum(abs(e) for e in rel) / len(rel)
    return rmspe_raw, mape


def pearson(X):
    X = rows(X)
    n, k = len(X), len(X[0])
    means = [sum(r[j] for r in X) / n for j in range(k)]
    C = [[0.0] * k for _ in range(k)]
    for a in range(k):
        for b in range(k):
            if a == b:
                C[a][b] = 1.0
                continue
            sab = sum((r[a] - means[a]) * (r[b] - means[b]) for r in X)
            saa = sum((r[a] - means[a]) ** 2 for r in X)
            sbb = sum((r[b] - means[b]) ** 2 for r in X)
            C[a][b] = 0.0 if saa == 0 or sbb == 0 else sab / math.sqrt(saa * sbb)
    return C


def frobenius_diff(A, B):
    return math.sqrt(sum((a - b) ** 2 for ra, rb in zip(A, B) for a, b in zip(ra, rb)))


def cfd(R, S):
    return frobenius_diff(pearson(R), pearson(S))


def gram(X):
    X = rows(X)
    k = len(X[0])
    return [[sum(r[a] * r[b] for r in X) for b in range(k)] for a in range(k)]


def cofd_raw(R, S):
    return frobenius_diff(gram(R), gram(S))


def hamming(a, b):
    return sum(1 for x, y in zip(a, b) if x != y)


def nearest(q, ref):
    """(distance, index) of the closest row in ref; ties to the lowest index."""
    best_d, best_j = None, None
    for j, r in enumerate(ref):
        d = hamming(q, r)
        if best_d is None or d < best_d:
            best_d, best_j = d, j
    return best_d, best_j


def mir(R, S):
    R, S = rows(R), rows(S)
    d = [math.sqrt(nearest(r, S)[0]) for r in R if any(r)]
    d_sorted = sorted(d)
    n = len(d_sorted)
    med = d_sorted[n // 2] if n % 2 else (d_sorted[n // 2 - 1] + d_sorted[n // 2]) / 2
    return {
        "distances": d,
        "mean": sum(d) / n,
        "median": med,
        "exact": sum(1 for x in d if x == 0) / n,
    }


def hidden_selection(R, n_bal, n_imb):
    prev = prevalence(R)
    cand = [j for j, p in enumerate(prev) if p > 0]
    bal = sorted(cand, key=lambda j: (abs(prev[j] - 0.5), j))[:n_bal]
    imb = [j for j in sorted(cand, key=lambda j: (-abs(prev[j] - 0.5), j)) if j not in bal][:n_imb]
    return bal, imb


def air_f1(R, S, hidden):
    R, S = rows(R), rows(S)
    known = [j for j in range(len(R[0])) if j not in hidden]
    Sk = [[s[j] for j in known] for s in S]
    tp = fp = fn = 0
    for r in R:
        _, m = nearest([r[j] for j in known], Sk)
        for h in hidden:
            p, t = S[m][h], r[h]
            tp += p and t
            fp += p and not t
            fn += t and not p
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def auc_pairs(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def woolf(a, b, c, d):
    """log odds ratio and SE for counts (x1y1, x1y0, x0y1, x0y0)."""
    return math.log(a * d / (b * c)), math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)


def neg_loglik(params, X, y, reg):
    """Penalised negative log-likelihood; params = [intercept, coef...]."""
    total = 0.0
    for xi, yi in zip(X, y):
        eta = params[0] + sum(b * v for b, v in zip(params[1:], xi))
        total += math.log1p(math.exp(-abs(eta))) + max(eta, 0) - yi * eta
    return total + 0.5 * reg * sum(b * b for b in params[1:])
