"""Slow, literal reference implementations used to cross-check the engine.

Everything here is written straight from the defining formulas with plain
loops and explicit sorts: per-feature overlap/range distances combined by
a root of summed squares, grey coefficients anchored at the query's
candidate bounds, inverse-square / rank-weighted cell estimators, and one
full imputation sweep per method. No code is shared with the package
beyond the Dataset container.
"""

import math



def oracle_normalize(values, mask, categorical):
    out = values.copy()
    ranges = {}
    for j in range(values.shape[1]):
        if categorical[j]:
            continue
        obs = values[mask[:, j], j]
        lo, hi = obs.min(), obs.max()
        ranges[j] = (lo, hi)
        for i in range(values.shape[0]):
            if mask[i, j]:
                out[i, j] = 0.0 if hi == lo else (hi - values[i, j]) / (hi - lo)
    return out, ranges


def oracle_initial_impute(values, mask, categorical, n_levels, labels=None, per_class=False):
    out = values.copy()
    n, p = values.shape

    def stats(rows, j):
        obs = [values[i, j] for i in rows if mask[i, j]]
        if not obs:
            return None
        if categorical[j]:
            counts = [0] * n_levels[j]
            for v in obs:
                counts[int(v)] += 1
            return float(counts.index(max(counts)))
        return sum(obs) / len(obs)

    groups = [list(range(n))]
    if per_class:
        groups = [
            [i for i in range(n) if labels[i] == y] for y in sorted(set(labels))
        ]
    for rows in groups:
        for j in range(p):
            val = stats(rows, j)
            if val is None:
                val = stats(range(n), j)
            for i in rows:
                if not mask[i, j]:
                    out[i, j] = val
    return out


def oracle_heom(a, b, categorical, weights=None):
    total = 0.0
    for j in range(len(a)):
        if math.isnan(a[j]) or math.isnan(b[j]):
            d = 1.0
        elif categorical[j]:
            d = 0.0 if a[j] == b[j] else 1.0
        else:
            d = abs(a[j] - b[j])  # unit spans on the normalized scale
        w = 1.0 if weights is None else weights[j]
        total += w * d * d
    return math.sqrt(total)


def oracle_bounds(query, candidates, categorical):
    diffs = []
    for c in candidates:
        for j in range(len(query)):
            if categorical[j] or math.isnan(query[j]) or math.isnan(c[j]):
                continue
            diffs.append(abs(query[j] - c[j]))
    if not diffs:
        return 0.0, 1.0
    return min(diffs), max(diffs)


def oracle_grc(a, b, is_cat, dmin, dmax, rho):
    if math.isnan(a) or math.isnan(b):
        return 0.0
    if is_cat:
        return 1.0 if a == b else 0.0
    den = abs(a - b) + rho * dmax
    if den == 0.0:
        return 1.0
    return (dmin + rho * dmax) / den


def oracle_grg(query, cand, categorical, dmin, dmax, rho, weights=None):
    p = len(query)
    if weights is None:
        return sum(
            oracle_grc(query[j], cand[j], categorical[j], dmin, dmax, rho)
            for j in range(p)
        ) / p
    return sum(
        weights[j] * oracle_grc(query[j], cand[j], categorical[j], dmin, dmax, rho)
        for j in range(p)
    )


def oracle_numeric_estimate(distances, values, weighted, eq11_literal=False):
    if not weighted:
        return sum(values) / len(values)
    zero = [v for d, v in zip(distances, values) if d == 0.0]
    if zero:
        return sum(zero) / len(zero)
    ws = [1.0 / (d * d) for d in distances]
    est = sum(w * v for w, v in zip(ws, values)) / sum(ws)
    if eq11_literal:
        est /= len(values)
    return est


def oracle_categorical_estimate(distances, values, n_levels, weighted):
    k = len(values)
    if weighted and distances[-1] != distances[0]:
        alpha = [
            (distances[-1] - distances[i]) / (distances[-1] - distances[0])
            for i in range(k)
        ]
    else:
        alpha = [1.0] * k
    sums = [0.0] * n_levels
    for a, v in zip(alpha, values):
        sums[int(v)] += a
    best = max(sums)
    tied = [s for s in range(n_levels) if sums[s] == best]
    if int(values[0]) in tied:
        return int(values[0])
    return min(tied)


METHOD_RULES = {
    "iknn": dict(per_class=False, metric="heom", weighted=True, use_weights=False),
    "miknn": dict(per_class=False, metric="heom", weighted=True, use_weights=True),
    "gknn": dict(per_class=True, metric="grey", weighted=False, use_weights=False),
    "fwgknn": dict(per_class=False, metric="grey", weighted=True, use_weights=True),
    "cgknn": dict(per_class=True, metric="grey", weighted=True, use_weights=True),
}


def oracle_one_iteration(dataset, method, k, rho=0.5, weights=None, eq11_literal=False):
    """Initialize and run a single imputation sweep, returning the neighbor
    table {row: [(index, distance), ...]} and the post-sweep matrix."""
    rules = METHOD_RULES[method]
    categorical = [f.is_categorical for f in dataset.schema.features]
    n_levels = [len(f.levels) if f.levels else 0 for f in dataset.schema.features]
    mask = dataset.mask
    n = dataset.n

    norm, _ = oracle_normalize(dataset.values, mask, categorical)
    current = oracle_initial_impute(
        norm, mask, categorical, n_levels, dataset.labels, rules["per_class"]
    )
    lam = weights if rules["use_weights"] else None
    neighbor_table = {}
    # cells update in place, ascending row order: later rows see the
    # refreshed estimates of earlier ones within the same pass
    for r in range(n):
        gaps = [j for j in range(dataset.p) if not mask[r, j]]
        if not gaps:
            continue
        if rules["per_class"]:
            pool = [i for i in range(n) if i != r and dataset.labels[i] == dataset.labels[r]]
            if len(pool) < k:
                pool = [i for i in range(n) if i != r]
        else:
            pool = [i for i in range(n) if i != r]
        query = [
            float("nan") if not mask[r, j] else current[r, j] for j in range(dataset.p)
        ]
        if rules["metric"] == "heom":
            dists = [oracle_heom(query, current[c], categorical, lam) for c in pool]
        else:
            dmin, dmax = oracle_bounds(query, [current[c] for c in pool], categorical)
            dists = [
                1.0 - oracle_grg(query, current[c], categorical, dmin, dmax, rho, lam)
                for c in pool
            ]
        ranked = sorted(zip(pool, dists), key=lambda t: (t[1], t[0]))[:k]
        neighbor_table[r] = ranked
        nd = [d for _, d in ranked]
        for j in gaps:
            nv = [current[i, j] for i, _ in ranked]
            if categorical[j]:
                current[r, j] = float(
                    oracle_categorical_estimate(nd, nv, n_levels[j], rules["weighted"])
                )
            else:
                current[r, j] = oracle_numeric_estimate(
                    nd, nv, rules["weighted"], eq11_literal
                )
    return neighbor_table, current
