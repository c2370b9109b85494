"""Pure-Python reference kernels.

Same contract as the compiled ``_ckernels`` module.  Arithmetic is on
Python ints, so there is no overflow ceiling here.
"""
from math import isqrt

MANHATTAN, SQUARED_EUCLIDEAN, CHEBYSHEV = 0, 1, 2
DTW, FRECHET, TWED = 1, 2, 3

# move codes stored by the dynamic programs
START, DIAG, VERT, HORIZ = 0, 1, 2, 3


def local(a, b, kind):
    if kind == MANHATTAN:
        return sum(abs(p - q) for p, q in zip(a, b))
    if kind == SQUARED_EUCLIDEAN:
        return sum((p - q) * (p - q) for p, q in zip(a, b))
    return max(abs(p - q) for p, q in zip(a, b))


def warp(x, y, local_kind, series_kind, lam, band):
    """Run the alignment dynamic program and backtrack the optimal path.

    ``x`` and ``y`` are sequences of integer rows.  ``band < 0`` disables
    the Sakoe-Chiba constraint.  Returns ``(distance, ii, jj)`` with
    0-based index lists of the coupling.
    """
    x = [tuple(int(v) for v in row) for row in x]
    y = [tuple(int(v) for v in row) for row in y]
    n, m = len(x), len(y)
    cost = [[None] * m for _ in range(n)]
    move = [[START] * m for _ in range(n)]
    if series_kind == TWED:
        dx = [0] + [lam + local(x[i], x[i - 1], local_kind) for i in range(1, n)]
        dy = [0] + [lam + local(y[j], y[j - 1], local_kind) for j in range(1, m)]

    for i in range(n):
        if band >= 0:
            lo, hi = max(0, i - band), min(m, i + band + 1)
        else:
            lo, hi = 0, m
        row, prow = cost[i], cost[i - 1] if i else None
        for j in range(lo, hi):
            d = local(x[i], y[j], local_kind)
            if i == 0 and j == 0:
                row[0] = d
                continue
            best, how = None, START
            # candidate order fixes tie-breaking: diagonal, vertical, horizontal
            if i and j and prow[j - 1] is not None:
                p = prow[j - 1]
                if series_kind == DTW:
                    c = p + d
                elif series_kind == FRECHET:
                    c = max(p, d)
                else:
                    c = p + d + local(x[i - 1], y[j - 1], local_kind)
                best, how = c, DIAG
            if i and prow[j] is not None:
                p = prow[j]
                if series_kind == DTW:
                    c = p + d
                elif series_kind == FRECHET:
                    c = max(p, d)
                else:
                    c = p + dx[i]
                if best is None or c < best:
                    best, how = c, VERT
            if j and row[j - 1] is not None:
                p = row[j - 1]
                if series_kind == DTW:
                    c = p + d
                elif series_kind == FRECHET:
                    c = max(p, d)
                else:
                    c = p + dy[j]
                if best is None or c < best:
                    best, how = c, HORIZ
            row[j] = best
            move[i][j] = how

    if cost[n - 1][m - 1] is None:
        raise ValueError("band too narrow to connect the endpoints")
    ii, jj = [n - 1], [m - 1]
    i, j = n - 1, m - 1
    while i or j:
        how = move[i][j]
        if how == DIAG:
            i, j = i - 1, j - 1
        elif how == VERT:
            i -= 1
        else:
            j -= 1
        ii.append(i)
        jj.append(j)
    ii.reverse()
    jj.reverse()
    return cost[n - 1][m - 1], ii, jj


def sweep_three_squares(n, table):
    """Descending sweep over ``s`` looking for ``n - s*s`` in the cache.

    ``table[r]`` is ``a`` when ``r = a*a + b*b`` is cached (``a <= b``) and
    ``-1`` otherwise.  Returns ``(s, a, b)`` on success, or ``(-1, s, 0)``
    when the remainder outgrew the table; the caller resumes from ``s``.
    """
    limit = len(table) - 1
    s = isqrt(n)
    while s >= 0:
        r = n - s * s
        if r > limit:
            return -1, s, 0
        t = isqrt(r)
        if t * t == r:
            return s, t, 0
        a = table[r]
        if a >= 0:
            return s, a, isqrt(r - a * a)
        s -= 1
    return -1, -1, 0
