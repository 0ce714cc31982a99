"""Search over auxiliary factorizations to trace achievable-region boundaries.

Two routes to the same object:

* :func:`grid_enumerate` -- exhaustive evaluation of every factorization on a
  regular simplex grid; slow but assumption-free, used as the oracle.
* :func:`scalarized_search` / :func:`search_region` -- random-restart
  projected ascent maximizing a weighted rate sum, with the weight vector
  swept over a grid of directions and the results convexified.

Both run through one chunked, vectorized bounds evaluator, so the per-
candidate cost is a few hundred numpy flops rather than a full joint build.
The scalar evaluators in :mod:`bcsi.regions` remain the reference
implementation; tests pin the two paths against each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .probability import ChannelSpec, ValidationError
from .regions import (
    RateBoundsMultilevel,
    RateBoundsTriple,
    RegionPolytope,
    assemble_region,
)

#: refuse grids with more candidate factorizations than this
MAX_GRID_CANDIDATES = 10**7

_AXIS = {"U": 1, "V": 2, "S": 3, "X": 4, "Y1": 5, "Y2": 6, "Y3": 7}


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the randomized boundary search.

    ``step_schedule`` entries are spread evenly across ``iterations``;
    ``lambda_grid`` (one weight vector per boundary direction) defaults to a
    uniform sweep of the nonnegative orthant for the theorem's dimension.
    """

    card_u: int
    card_v: int
    restarts: int = 50
    iterations: int = 60
    step_schedule: tuple[float, ...] = (0.5, 0.2, 0.08, 0.03)
    lambda_grid: tuple[tuple[float, ...], ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.card_u < 1 or self.card_v < 1:
            raise ValidationError("auxiliary cardinalities must be >= 1")
        if self.restarts < 1 or self.iterations < 1:
            raise ValidationError("restarts and iterations must be >= 1")
        if not self.step_schedule or any(s <= 0 for s in self.step_schedule):
            raise ValidationError("step_schedule must be positive reals")
        if self.lambda_grid is not None:
            for lam in self.lambda_grid:
                if any(w < 0 for w in lam) or not any(w > 0 for w in lam):
                    raise ValidationError(
                        "lambda weights must be nonnegative and not all zero"
                    )


def default_cards(ch: ChannelSpec) -> tuple[int, int]:
    """Support-lemma-style default |U| = |V| = |S||X| + 2 (heuristic, no
    optimality claim)."""
    k = ch.sizes["S"] * ch.sizes["X"] + 2
    return k, k


def default_lambda_grid(dim: int, count: int = 9) -> tuple[tuple[float, ...], ...]:
    if dim == 2:
        angles = np.linspace(0.0, np.pi / 2, count)
        return tuple((float(np.cos(a)), float(np.sin(a))) for a in angles)
    dirs = []
    for v in itertools.product((0, 1, 2), repeat=3):
        a = np.array(v, dtype=float)
        if not a.any():
            continue
        a = a / np.linalg.norm(a)
        if not any(np.allclose(a, d, atol=1e-12) for d in dirs):
            dirs.append(a)
    return tuple(tuple(float(x) for x in d) for d in dirs)


class _BatchEvaluator:
    """Evaluate one theorem's bounds for a batch of auxiliary factorizations."""

    def __init__(self, ch: ChannelSpec, theorem: int, card_u: int, card_v: int):
        if theorem not in (1, 2, 3):
            raise ValidationError("theorem must be 1, 2, or 3")
        if theorem == 1 and ch.model != "multilevel":
            raise ValidationError("theorem 1 bounds need a multilevel channel")
        self.ch = ch
        self.theorem = theorem
        self.card_u = card_u
        self.card_v = card_v
        self.dim = 2 if theorem == 1 else 3
        self._path = None

    def joint(self, pu: np.ndarray, pv: np.ndarray, px: np.ndarray) -> np.ndarray:
        ps = self.ch.p_s.probs
        if self.ch.model == "multilevel":
            args = (
                "s,nsu,nusv,nvsx,xsac,ab->nuvsxabc",
                ps, pu, pv, px, self.ch.main.table, self.ch.degrading.table,
            )
        else:
            args = ("s,nsu,nusv,nvsx,xsabc->nuvsxabc", ps, pu, pv, px, self.ch.main.table)
        if self._path is None:
            self._path = np.einsum_path(*args, optimize="optimal")[0]
        return np.einsum(*args, optimize=self._path)

    def __call__(self, pu: np.ndarray, pv: np.ndarray, px: np.ndarray) -> np.ndarray:
        t = self.joint(pu, pv, px)
        all_vars = ("U", "V", "S", "X", "Y1", "Y2", "Y3")
        # marginal tensors keyed by variable set, each stored with its axis
        # order; new marginals reduce from the smallest cached superset
        margs: dict[frozenset, tuple[np.ndarray, tuple[str, ...]]] = {
            frozenset(all_vars): (t, all_vars)
        }

        def marg(names: frozenset) -> tuple[np.ndarray, tuple[str, ...]]:
            if names not in margs:
                parent_key = min(
                    (k for k in margs if names <= k), key=lambda k: margs[k][0].size
                )
                pt, porder = margs[parent_key]
                keep = tuple(i for i, nm in enumerate(porder) if nm in names)
                drop = tuple(
                    i + 1 for i, nm in enumerate(porder) if nm not in names
                )
                margs[names] = (pt.sum(axis=drop), tuple(porder[i] for i in keep))
            return margs[names]

        # shared intermediates: one receiver axis each, everything else kept
        for seed in (("U", "V", "S", "X", "Y1"), ("U", "V", "S", "Y2"), ("U", "V", "S", "Y3")):
            marg(frozenset(seed))

        ecache: dict[frozenset, np.ndarray] = {}

        def ent(*names: str) -> np.ndarray:
            key = frozenset(names)
            if key not in ecache:
                m = marg(key)[0].reshape(t.shape[0], -1)
                logs = np.zeros_like(m)
                np.log2(m, out=logs, where=m > 0)
                ecache[key] = -(m * logs).sum(axis=1)
            return ecache[key]

        def mi(a: tuple[str, ...], b: tuple[str, ...]) -> np.ndarray:
            return ent(*a) + ent(*b) - ent(*a, *b)

        def cmi(a, b, c) -> np.ndarray:
            return ent(*a, *c) + ent(*b, *c) - ent(*a, *b, *c) - ent(*c)

        zero = 0.0
        if self.theorem == 1:
            r0 = np.minimum(
                mi(("U",), ("Y2",)) - mi(("U",), ("S",)),
                mi(("V",), ("Y3",)) - mi(("U", "V"), ("S",)),
            )
            r1 = (
                cmi(("X",), ("Y1",), ("U",))
                - cmi(("V",), ("S",), ("U",))
                - cmi(("X",), ("S",), ("V",))
            )
            sm = (
                mi(("V",), ("Y3",))
                + cmi(("X",), ("Y1",), ("V",))
                - cmi(("X",), ("S",), ("V",))
                - mi(("U", "V"), ("S",))
            )
            out = np.stack([r0, r1, sm], axis=1)
        elif self.theorem == 2:
            out = np.stack(
                [
                    cmi(("X",), ("Y1",), ("V",)) - cmi(("X",), ("S",), ("V",)),
                    cmi(("V",), ("Y2",), ("U",)) - cmi(("V",), ("S",), ("U",)),
                    mi(("U",), ("Y3",)) - mi(("U",), ("S",)),
                ],
                axis=1,
            )
        else:
            out = np.stack(
                [
                    cmi(("X",), ("Y1",), ("V", "S")),
                    cmi(("V",), ("Y2",), ("U", "S")),
                    cmi(("U",), ("Y3",), ("S",)),
                ],
                axis=1,
            )
        return np.maximum(out, zero)


def bounds_record(theorem: int, row: np.ndarray):
    """Convert one evaluator output row into the matching bounds dataclass."""
    if theorem == 1:
        return RateBoundsMultilevel(float(row[0]), float(row[1]), float(row[2]))
    return RateBoundsTriple(float(row[0]), float(row[1]), float(row[2]))


def _simplex_grid(k: int, points_per_axis: int) -> np.ndarray:
    """All grid points with denominator (points_per_axis - 1) on the
    (k-1)-simplex, in lexicographic composition order."""
    g = points_per_axis
    if g < 2:
        raise ValidationError("grid needs at least 2 points per simplex axis")
    denom = g - 1
    pts = []
    for comp in itertools.product(range(denom + 1), repeat=k - 1):
        rest = denom - sum(comp)
        if rest >= 0:
            pts.append(comp + (rest,))
    return np.array(pts, dtype=np.float64) / denom


def grid_count(ch: ChannelSpec, grid_points_per_simplex_axis: int,
               cards: tuple[int, int]) -> int:
    ns, nx = ch.sizes["S"], ch.sizes["X"]
    cu, cv = cards
    m_u = len(_simplex_grid(cu, grid_points_per_simplex_axis))
    m_v = len(_simplex_grid(cv, grid_points_per_simplex_axis))
    m_x = len(_simplex_grid(nx, grid_points_per_simplex_axis))
    return (m_u ** ns) * (m_v ** (cu * ns)) * (m_x ** (cv * ns))


def grid_enumerate(
    ch: ChannelSpec,
    theorem: int,
    grid_points_per_simplex_axis: int,
    cards: tuple[int, int],
    chunk: int = 32768,
) -> np.ndarray:
    """Bounds for every factorization on the regular simplex grid.

    Returns an (N, 3) float array, one row per candidate in deterministic
    mixed-radix order (first kernel row most significant).  Theorem 1 rows
    are (r0_max, r1_max, sum_max); theorems 2 and 3 are (r1, r2, r3).
    """
    cu, cv = cards
    ns, nx = ch.sizes["S"], ch.sizes["X"]
    total = grid_count(ch, grid_points_per_simplex_axis, cards)
    if total > MAX_GRID_CANDIDATES:
        raise ValidationError(
            f"grid would enumerate {total} factorizations, over the "
            f"{MAX_GRID_CANDIDATES} cap"
        )
    pts_u = _simplex_grid(cu, grid_points_per_simplex_axis)
    pts_v = _simplex_grid(cv, grid_points_per_simplex_axis)
    pts_x = _simplex_grid(nx, grid_points_per_simplex_axis)
    row_points = (
        [pts_u] * ns + [pts_v] * (cu * ns) + [pts_x] * (cv * ns)
    )
    counts = np.array([len(p) for p in row_points], dtype=np.int64)
    strides = np.ones(len(counts), dtype=np.int64)
    for r in range(len(counts) - 2, -1, -1):
        strides[r] = strides[r + 1] * counts[r + 1]
    ev = _BatchEvaluator(ch, theorem, cu, cv)
    out = np.empty((total, 3), dtype=np.float64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        b = len(idx)
        row_sel = [(idx // strides[r]) % counts[r] for r in range(len(counts))]
        pu = np.stack([row_points[r][row_sel[r]] for r in range(ns)], axis=1)
        pv = np.stack(
            [row_points[ns + r][row_sel[ns + r]] for r in range(cu * ns)], axis=1
        ).reshape(b, cu, ns, cv)
        px_off = ns + cu * ns
        px = np.stack(
            [row_points[px_off + r][row_sel[px_off + r]] for r in range(cv * ns)],
            axis=1,
        ).reshape(b, cv, ns, nx)
        out[idx[0] : idx[-1] + 1] = ev(pu, pv, px)
    return out


# ---------------------------------------------------------------------------
# projected-ascent search
# ---------------------------------------------------------------------------


def _support_value(theorem: int, rows: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Best weighted rate sum over each row's region polytope."""
    if theorem == 1:
        r0, r1, sm = rows[:, 0], rows[:, 1], rows[:, 2]
        z = np.zeros_like(r0)
        verts = np.stack(
            [
                np.stack([z, z], axis=1),
                np.stack([np.minimum(r0, sm), z], axis=1),
                np.stack([z, np.minimum(r1, sm)], axis=1),
                np.stack([r0, np.clip(sm - r0, 0.0, r1)], axis=1),
                np.stack([np.clip(sm - r1, 0.0, r0), r1], axis=1),
            ],
            axis=1,
        )
        vals = verts @ lam
        return vals.max(axis=1)
    return rows @ lam


def _project_rows(theta) -> list[np.ndarray]:
    """Clip to the nonnegative orthant and renormalize each kernel row."""
    pu, pv, px = theta
    out = []
    for a in (pu, pv, px):
        a = np.clip(a, 0.0, None)
        sums = a.sum(axis=-1, keepdims=True)
        flat = np.broadcast_to(1.0 / a.shape[-1], a.shape)
        a = np.where(sums > 0, a / np.where(sums > 0, sums, 1.0), flat)
        out.append(a)
    return out


def _random_point(rng: np.random.Generator, ns, nx, cu, cv):
    pu = rng.dirichlet(np.ones(cu), size=ns)
    pv = rng.dirichlet(np.ones(cv), size=(cu, ns))
    px = rng.dirichlet(np.ones(nx), size=(cv, ns))
    return [pu, pv, px]


def _scalarized(
    ch: ChannelSpec,
    theorem: int,
    lam: np.ndarray,
    cfg: SearchConfig,
    seed_key: tuple[int, ...],
) -> tuple[np.ndarray, float]:
    ns, nx = ch.sizes["S"], ch.sizes["X"]
    cu, cv = cfg.card_u, cfg.card_v
    ev = _BatchEvaluator(ch, theorem, cu, cv)
    shapes = [(ns, cu), (cu, ns, cv), (cv, ns, nx)]
    sizes = [int(np.prod(s)) for s in shapes]

    def unflatten(vec: np.ndarray):
        parts = np.split(vec, np.cumsum(sizes)[:-1])
        return [p.reshape(s) for p, s in zip(parts, shapes)]

    def evaluate(vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        b = len(vecs)
        pus, pvs, pxs = [], [], []
        for v in vecs:
            pu, pv, px = _project_rows(unflatten(v))
            pus.append(pu)
            pvs.append(pv)
            pxs.append(px)
        rows = ev(np.stack(pus), np.stack(pvs), np.stack(pxs))
        return rows, _support_value(theorem, rows, lam)

    h = 1e-3
    total_p = sum(sizes)
    n_steps = len(cfg.step_schedule)
    best_val = -np.inf
    best_row = np.zeros(3)
    for restart in range(cfg.restarts):
        rng = np.random.default_rng(seed_key + (restart,))
        theta = np.concatenate(
            [a.ravel() for a in _random_point(rng, ns, nx, cu, cv)]
        )
        rows, vals = evaluate(theta[None, :])
        cur_val = float(vals[0])
        cur_row = rows[0]
        for it in range(cfg.iterations):
            step = cfg.step_schedule[min(n_steps - 1, it * n_steps // cfg.iterations)]
            batch = np.repeat(theta[None, :], 2 * total_p, axis=0)
            for p in range(total_p):
                batch[2 * p, p] += h
                batch[2 * p + 1, p] -= h
            _, fvals = evaluate(batch)
            grad = (fvals[0::2] - fvals[1::2]) / (2 * h)
            norm = np.max(np.abs(grad))
            if norm < 1e-14:
                break
            theta = theta + step * grad / norm
            theta = np.concatenate(
                [a.ravel() for a in _project_rows(unflatten(theta))]
            )
            rows, vals = evaluate(theta[None, :])
            if float(vals[0]) > cur_val:
                cur_val = float(vals[0])
                cur_row = rows[0]
        if cur_val > best_val:
            best_val = cur_val
            best_row = cur_row
    return best_row, best_val


def scalarized_search(
    ch: ChannelSpec, theorem: int, lam, cfg: SearchConfig
):
    """Maximize ``lam . rates`` over auxiliary factorizations.

    Random-restart projected ascent with central-difference ascent
    directions on the active objective branch; deterministic given
    ``cfg.seed``.  Returns (bounds, achieved weighted sum).
    """
    lam = np.asarray(lam, dtype=np.float64)
    dim = 2 if theorem == 1 else 3
    if lam.shape != (dim,) or np.any(lam < 0) or not np.any(lam > 0):
        raise ValidationError(
            f"lambda must be a nonnegative, nonzero vector of length {dim}"
        )
    row, val = _scalarized(ch, theorem, lam, cfg, (cfg.seed,))
    return bounds_record(theorem, row), val


def search_region(ch: ChannelSpec, theorem: int, cfg: SearchConfig) -> RegionPolytope:
    """Sweep the weight grid, collect the best bounds per direction, and
    convexify the union (time sharing)."""
    dim = 2 if theorem == 1 else 3
    grid = cfg.lambda_grid or default_lambda_grid(dim)
    best = []
    for li, lam in enumerate(grid):
        lam_arr = np.asarray(lam, dtype=np.float64)
        if lam_arr.shape != (dim,):
            raise ValidationError(f"lambda {lam} has wrong dimension for theorem {theorem}")
        row, _ = _scalarized(ch, theorem, lam_arr, cfg, (cfg.seed, li))
        best.append(bounds_record(theorem, row))
    return assemble_region(best, convexify=True)
