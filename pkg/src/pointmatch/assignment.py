"""Exact solvers for rectangular min-cost assignment and maximum bipartite
matching, plus exhaustive brute-force oracles for small instances.

Both solvers share a deterministic tie-break: among optimal solutions, the
one whose (row, col) pair list (sorted by row) is lexicographically smallest
is returned. Optimality ties in the min-cost solver are resolved with an
absolute tolerance of 1e-9.
"""

from __future__ import annotations

import itertools

import numpy as np

from .types import Assignment, BoolMatrix, CostMatrix

TIE_TOL = 1e-9

# factorial enumeration bound for brute_force_min_cost
MAX_BRUTE_MIN_SIDE = 8
# node bound for brute_force_max_matching
MAX_BRUTE_NODES = 16


def _finish(pairs, rows, cols) -> Assignment:
    pairs = tuple(sorted(pairs))
    matched_r = {r for r, _ in pairs}
    matched_c = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=tuple(r for r in range(rows) if r not in matched_r),
        unmatched_cols=tuple(c for c in range(cols) if c not in matched_c),
    )


def _hungarian_square(a: np.ndarray):
    """Shortest-augmenting-path Hungarian method on a square matrix.

    Returns (col_to_row, u, v) where col_to_row[j] is the row matched to
    column j and (u, v) are dual potentials with
    a[i, j] - u[i] - v[j] >= 0 (up to float error) and equality on matched
    edges.
    """
    n = a.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j] = 1-based row matched to col j
    way = np.zeros(n + 1, dtype=np.int64)
    idx = np.arange(1, n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1, :] - u[i0] - v[1:]
            upd = free & (cur < minv[1:])
            if upd.any():
                minv[1:][upd] = cur[upd]
                way[1:][upd] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_to_row = p[1:] - 1
    return col_to_row, u[1:], v[1:]


def _try_augment(row, adj, match_row, match_col, visited, banned):
    for c in adj[row]:
        if visited[c] or banned[c]:
            continue
        visited[c] = True
        nxt = match_col[c]
        if nxt == -1 or _try_augment(nxt, adj, match_row, match_col, visited, banned):
            match_col[c] = row
            match_row[row] = c
            return True
    return False


def _kuhn(adj, n_rows, n_cols):
    """Deterministic maximum matching via augmenting paths (Kuhn)."""
    match_row = [-1] * n_rows
    match_col = [-1] * n_cols
    banned = [False] * n_cols
    for r in range(n_rows):
        if adj[r]:
            _try_augment(r, adj, match_row, match_col, [False] * n_cols, banned)
    return match_row, match_col


def _lex_refine(adj, n_rows, n_cols, match_row, match_col):
    """Rewrite a maximum matching into the lexicographically smallest one.

    Scans rows in order; for each row tries columns in ascending order and
    keeps a candidate only if maximum cardinality stays attainable on the
    remaining subgraph. ``match_row``/``match_col`` must hold a maximum
    matching of the full graph and are consumed destructively.
    """
    used_col = [False] * n_cols
    fixed_row = [False] * n_rows
    pairs = []

    def accept(i, c):
        fixed_row[i] = True
        used_col[c] = True
        match_row[i] = -1
        match_col[c] = -1
        pairs.append((i, c))

    def reaugment(exclude_col, start_row):
        # one augmentation attempt from any free remaining row
        for r in range(start_row, n_rows):
            if fixed_row[r] or match_row[r] != -1 or not adj[r]:
                continue
            banned = used_col.copy()
            banned[exclude_col] = True
            if _try_augment(r, adj, match_row, match_col, [False] * n_cols, banned):
                return True
        return False

    for i in range(n_rows):
        ci = match_row[i]
        chosen = -1
        for c in adj[i]:
            if used_col[c]:
                continue
            if c == ci:
                chosen = c
                break
            r_star = match_col[c]
            if ci == -1:
                # swap: any max matching can be rerouted to cover row i here
                if r_star != -1:
                    match_row[r_star] = -1
                match_col[c] = -1
                chosen = c
                break
            if r_star == -1:
                # column free: dropping (i, ci) keeps maximality
                match_col[ci] = -1
                chosen = c
                break
            # both row i and column c are engaged elsewhere: try to repair
            match_col[ci] = -1
            match_row[i] = -1
            match_col[c] = -1
            match_row[r_star] = -1
            if reaugment(c, i + 1):
                chosen = c
                break
            # restore and keep looking
            match_col[ci] = i
            match_row[i] = ci
            match_col[c] = r_star
            match_row[r_star] = c
        if chosen != -1:
            accept(i, chosen)
        else:
            fixed_row[i] = True  # row stays unmatched
    return pairs


def solve_min_cost(costs: CostMatrix) -> Assignment:
    """Minimum-cost assignment of size min(rows, cols).

    Among equal-cost optima (within 1e-9) returns the lexicographically
    smallest pair list. Empty matrices yield the empty assignment.
    """
    n_rows, n_cols = costs.rows, costs.cols
    k = min(n_rows, n_cols)
    if k == 0:
        return _finish([], n_rows, n_cols)
    n = max(n_rows, n_cols)
    # pad to square with zeros: dummy rows/cols absorb the surplus side
    sq = np.zeros((n, n))
    sq[:n_rows, :n_cols] = costs.values
    col_to_row, u, v = _hungarian_square(sq)
    # admissible edges: reduced cost within tolerance of zero
    rc = sq - u[:, None] - v[None, :]
    adm = rc <= TIE_TOL
    adj = [np.flatnonzero(adm[r]).tolist() for r in range(n)]
    match_row = [-1] * n
    match_col = [-1] * n
    for j, r in enumerate(col_to_row):
        match_row[r] = j
        match_col[j] = int(r)
    pairs = _lex_refine(adj, n, n, match_row, match_col)
    real = [(r, c) for r, c in pairs if r < n_rows and c < n_cols]
    return _finish(real, n_rows, n_cols)


def solve_max_matching(adjacency: BoolMatrix) -> Assignment:
    """Maximum-cardinality matching with the standard lexicographic tie-break."""
    n_rows, n_cols = adjacency.rows, adjacency.cols
    adj = [np.flatnonzero(adjacency.values[r]).tolist() for r in range(n_rows)]
    match_row, match_col = _kuhn(adj, n_rows, n_cols)
    pairs = _lex_refine(adj, n_rows, n_cols, match_row, match_col)
    return _finish(pairs, n_rows, n_cols)


def brute_force_min_cost(costs: CostMatrix) -> Assignment:
    """Oracle: exhaustive enumeration of all injective size-min(rows, cols)
    assignments. Rejects instances with min(rows, cols) > 8."""
    n_rows, n_cols = costs.rows, costs.cols
    k = min(n_rows, n_cols)
    if k > MAX_BRUTE_MIN_SIDE:
        raise ValueError(f"brute force bound exceeded: min side {k} > {MAX_BRUTE_MIN_SIDE}")
    if k == 0:
        return _finish([], n_rows, n_cols)

    transposed = n_rows > n_cols
    a = costs.values.T if transposed else costs.values
    small, large = a.shape
    count = 1
    for t in range(small):
        count *= large - t
    if count > 10_000_000:
        raise ValueError("brute force enumeration too large")

    perms = np.fromiter(
        itertools.chain.from_iterable(itertools.permutations(range(large), small)),
        dtype=np.int64,
        count=count * small,
    ).reshape(count, small)
    totals = a[np.arange(small)[None, :], perms].sum(axis=1)
    best = totals.min()
    ties = np.flatnonzero(totals <= best + TIE_TOL)

    def as_pairs(perm):
        if transposed:
            return sorted((int(p), j) for j, p in enumerate(perm))
        return [(i, int(p)) for i, p in enumerate(perm)]

    if not transposed and len(ties) == 1:
        pairs = as_pairs(perms[ties[0]])
    else:
        pairs = min(as_pairs(perms[t]) for t in ties)
    return _finish(pairs, n_rows, n_cols)


def brute_force_max_matching(adjacency: BoolMatrix) -> Assignment:
    """Oracle: exhaustive search for a maximum matching. Rejects instances
    with rows + cols > 16."""
    n_rows, n_cols = adjacency.rows, adjacency.cols
    if n_rows + n_cols > MAX_BRUTE_NODES:
        raise ValueError(
            f"brute force bound exceeded: {n_rows}+{n_cols} nodes > {MAX_BRUTE_NODES}"
        )
    adj = [np.flatnonzero(adjacency.values[r]).tolist() for r in range(n_rows)]
    memo = {}

    def best_size(i, mask):
        if i == n_rows:
            return 0
        key = (i, mask)
        if key in memo:
            return memo[key]
        best = best_size(i + 1, mask)
        for c in adj[i]:
            bit = 1 << c
            if not mask & bit:
                best = max(best, 1 + best_size(i + 1, mask | bit))
        memo[key] = best
        return best

    # reconstruct lexicographically smallest maximum matching: matching the
    # current row beats leaving it unmatched whenever cardinality permits
    pairs = []
    mask = 0
    for i in range(n_rows):
        target = best_size(i, mask)
        for c in adj[i]:
            bit = 1 << c
            if not mask & bit and 1 + best_size(i + 1, mask | bit) == target:
                pairs.append((i, c))
                mask |= bit
                break
    return _finish(pairs, n_rows, n_cols)
