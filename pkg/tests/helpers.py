"""Shared fixtures for proof tests: random instances and bundle mutation."""
import copy
import random

from zkseries.group import L, commit, scalar_bytes, setup_params

PARAMS = setup_params()
HEX = "0123456789abcdef"


def random_series_points(rng, T, m, top):
    return [[rng.randrange(top + 1) for _ in range(m)] for _ in range(T)]


def leaves(obj, path=()):
    """Every scalar leaf of a JSON-like tree as a path tuple."""
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from leaves(obj[k], path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from leaves(v, path + (i,))
    else:
        yield path


def _get(obj, path):
    for p in path:
        obj = obj[p]
    return obj


def _set(obj, path, value):
    _get(obj, path[:-1])[path[-1]] = value


def mutate_value(v, rng):
    """A value of the same JSON type that differs from ``v``."""
    if isinstance(v, bool):
        return not v
    if isinstance(v, int):
        return v + rng.choice([-2, -1, 1, 2, 1000])
    if isinstance(v, str):
        if len(v) == 64 and rng.random() < 0.5:
            # a well-formed replacement: valid point or canonical scalar
            if rng.random() < 0.5:
                new = commit(PARAMS, rng.randrange(1, L), 0).hex()
            else:
                new = scalar_bytes(rng.randrange(L)).hex()
            if new != v:
                return new
        if not v:
            return "0"
        i = rng.randrange(len(v))
        if v[i] in HEX:
            c = rng.choice([h for h in HEX if h != v[i]])
        else:
            c = "x" if v[i] != "x" else "y"
        return v[:i] + c + v[i + 1:]
    return "junk"


def mutate_bundle_dict(d, rng):
    """Copy of ``d`` with exactly one leaf changed; returns ``(copy, path)``."""
    paths = list(leaves(d))
    path = rng.choice(paths)
    out = copy.deepcopy(d)
    _set(out, path, mutate_value(_get(d, path), rng))
    return out, path
