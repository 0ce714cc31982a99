"""Independent reference implementations used to pin expected values.

Everything here recomputes quantities by definition (direct sums, explicit
enumeration, exact rational vertex search) without touching the library's
own computation paths, so tests compare two genuinely different routes.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def entropy_direct(probs) -> float:
    """-sum p log2 p by plain Python loop."""
    total = 0.0
    for p in np.asarray(probs, dtype=float).ravel():
        if p > 0:
            total -= p * np.log2(p)
    return float(total)


def mi_direct(j, a_sets, b_sets) -> float:
    """I(A;B) as a double sum over the raw joint tensor."""
    names = [n for n, _ in j.axes]
    t = j.tensor
    a_idx = [names.index(n) for n in a_sets]
    b_idx = [names.index(n) for n in b_sets]
    keep = a_idx + b_idx
    other = [i for i in range(t.ndim) if i not in keep]
    pab = t.sum(axis=tuple(other)) if other else t
    order = np.argsort(keep)
    pab = np.transpose(pab, order)  # axes sorted as in the joint
    sorted_keep = sorted(keep)
    a_pos = [sorted_keep.index(i) for i in a_idx]
    b_pos = [sorted_keep.index(i) for i in b_idx]
    pa = pab.sum(axis=tuple(b_pos), keepdims=True)
    pb = pab.sum(axis=tuple(a_pos), keepdims=True)
    total = 0.0
    it = np.nditer(pab, flags=["multi_index"])
    for v in it:
        v = float(v)
        if v > 0:
            idx = it.multi_index
            pa_v = float(pa[tuple(i if k not in b_pos else 0 for k, i in enumerate(idx))])
            pb_v = float(pb[tuple(i if k not in a_pos else 0 for k, i in enumerate(idx))])
            total += v * np.log2(v / (pa_v * pb_v))
    return total


def cmi_direct(j, a_sets, b_sets, c_sets) -> float:
    """I(A;B|C) as sum_c p(c) I(A;B|C=c), each term by double sum."""
    names = [n for n, _ in j.axes]
    t = j.tensor
    a_idx = [names.index(n) for n in a_sets]
    b_idx = [names.index(n) for n in b_sets]
    c_idx = [names.index(n) for n in c_sets]
    keep = sorted(a_idx + b_idx + c_idx)
    other = [i for i in range(t.ndim) if i not in keep]
    m = t.sum(axis=tuple(other)) if other else t
    # reorder to (A..., B..., C...) and flatten groups
    pos = {orig: k for k, orig in enumerate(keep)}
    perm = [pos[i] for i in a_idx] + [pos[i] for i in b_idx] + [pos[i] for i in c_idx]
    m = np.transpose(m, perm)
    ka = int(np.prod([m.shape[k] for k in range(len(a_idx))]))
    kb = int(np.prod([m.shape[len(a_idx) + k] for k in range(len(b_idx))]))
    kc = int(np.prod(m.shape[len(a_idx) + len(b_idx):])) if c_idx else 1
    m = m.reshape(ka, kb, kc)
    total = 0.0
    for c in range(kc):
        slab = m[:, :, c]
        pc = slab.sum()
        if pc <= 0:
            continue
        cond = slab / pc
        pa = cond.sum(axis=1)
        pb = cond.sum(axis=0)
        term = 0.0
        for i in range(ka):
            for k in range(kb):
                v = cond[i, k]
                if v > 0:
                    term += v * np.log2(v / (pa[i] * pb[k]))
        total += pc * term
    return float(total)


def joint_product_direct(ch, aux) -> np.ndarray:
    """Seven-fold loop building the joint as a literal product of factors."""
    ps = ch.p_s.probs
    pu = aux.p_u_given_s.table
    pv = aux.p_v_given_us.table
    px = aux.p_x_given_vs.table
    sizes = ch.sizes
    cu, cv = aux.card_u, aux.card_v
    ns, nx = sizes["S"], sizes["X"]
    ny1, ny2, ny3 = sizes["Y1"], sizes["Y2"], sizes["Y3"]
    out = np.zeros((cu, cv, ns, nx, ny1, ny2, ny3))
    for u, v, s, x, a, b, c in itertools.product(
        range(cu), range(cv), range(ns), range(nx), range(ny1), range(ny2), range(ny3)
    ):
        if ch.model == "multilevel":
            chan = ch.main.table[x, s, a, c] * ch.degrading.table[a, b]
        else:
            chan = ch.main.table[x, s, a, b, c]
        out[u, v, s, x, a, b, c] = (
            ps[s] * pu[s, u] * pv[u, s, v] * px[v, s, x] * chan
        )
    return out


# ---------------------------------------------------------------------------
# exact rational polytope oracles
# ---------------------------------------------------------------------------


def _fr(x) -> Fraction:
    """Fraction from ints, floats, Fractions, or numpy scalars."""
    if isinstance(x, Fraction):
        return x
    if hasattr(x, "item"):
        x = x.item()
    return Fraction(x)


def solve_exact(M, rhs):
    """Gaussian elimination over Fractions; None if singular."""
    d = len(rhs)
    A = [[_fr(M[i][k]) for k in range(d)] + [_fr(rhs[i])] for i in range(d)]
    for col in range(d):
        piv = next((r for r in range(col, d) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        inv = Fraction(1) / A[col][col]
        A[col] = [x * inv for x in A[col]]
        for r in range(d):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [A[r][d] for r in range(d)]


def enumerate_vertices_exact(ineqs, dim):
    """All vertices of {x : a.x <= b} by exact basic-solution enumeration.

    ``ineqs`` is a list of (coefficient list, bound), all rational.  Returns
    a list of Fraction tuples (may be empty). Bounded systems only.
    """
    verts = []
    for rows in itertools.combinations(range(len(ineqs)), dim):
        M = [ineqs[r][0] for r in rows]
        rhs = [ineqs[r][1] for r in rows]
        x = solve_exact(M, rhs)
        if x is None:
            continue
        ok = all(
            sum(_fr(c) * xi for c, xi in zip(coeffs, x)) <= _fr(b)
            for coeffs, b in ineqs
        )
        if ok and tuple(x) not in verts:
            verts.append(tuple(x))
    return verts


def feasible_by_vertex_enumeration(ineqs, eqs, dim, box=Fraction(10**6)):
    """Feasibility oracle: add a large bounding box, convert equalities to
    inequality pairs, and ask whether any vertex exists."""
    rows = [([_fr(x) for x in c], _fr(b)) for c, b in ineqs]
    for c, b in eqs:
        rows.append(([_fr(x) for x in c], _fr(b)))
        rows.append(([-_fr(x) for x in c], -_fr(b)))
    for k in range(dim):
        e = [Fraction(0)] * dim
        e[k] = Fraction(1)
        rows.append((list(e), box))
        rows.append(([-x for x in e], box))
    return len(enumerate_vertices_exact(rows, dim)) > 0


def hull2d_exact(points):
    """Monotone chain over Fraction pairs; returns hull vertices as a set."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return set(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return set(lower[:-1] + upper[:-1])
