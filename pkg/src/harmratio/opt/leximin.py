"""Exact leximin by iterated max-min, shared by the branch-and-bound and MILP backends.

A backend supplies ``maxmin(active, floors) -> (value, utilities, handle)``:
maximize the minimum utility over ``active`` agents while the others keep
``utilities >= floors``. An agent that cannot rise above the current minimum
is frozen there (that loses nothing). With indivisible outcomes there may be
no such agent; then each active agent is tried in turn and the sorted
utility vectors of the completions are compared.
"""
from __future__ import annotations

import numpy as np

_TOL = 1e-9


def _key(u):
    return tuple(np.round(np.sort(u), 9))


def leximin_search(maxmin, n: int, steps: int | None = None):
    """Returns ``(handle, utilities, minima)`` of a leximin-optimal outcome.

    ``steps`` stops after that many freezes (``steps=1`` is plain max-min).
    Ties between equally good completions go to the lowest agent index.
    """
    steps = n if steps is None else steps

    def stuck(active, floors, value):
        fl = np.where(active, value, floors)
        for i in np.flatnonzero(active):
            only = np.zeros(n, dtype=bool)
            only[i] = True
            best, _, _ = maxmin(only, fl)
            if best <= value + _TOL:
                return int(i)
        return None

    def rec(active, floors, minima, depth):
        value, u, handle = maxmin(active, floors)
        minima = minima + [value]
        if depth + 1 >= steps or active.sum() <= 1:
            return handle, u, minima
        i = stuck(active, floors, value)
        cands = [i] if i is not None else [int(k) for k in np.flatnonzero(active)]
        best = None
        for k in cands:
            act = active.copy()
            act[k] = False
            fl = floors.copy()
            fl[k] = value
            out = rec(act, fl, minima, depth + 1)
            if best is None or _key(out[1]) > _key(best[1]):
                best = out
        return best

    return rec(np.ones(n, dtype=bool), np.zeros(n), [], 0)
