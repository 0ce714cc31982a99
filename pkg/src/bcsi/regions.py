"""Rate-bound evaluation and region polytopes.

Three bound evaluators, one per achievability theorem supported by the
toolkit, all reading a seven-variable joint built by
:func:`bcsi.probability.build_joint`:

* :func:`multilevel_bounds` -- common/private rate pair for the multilevel
  channel with encoder side information (theorem 1 of the CLI).
* :func:`less_noisy_bounds` -- rate triple for the less-noisy channel with
  encoder side information (theorem 2).
* :func:`receiver_si_bounds` -- rate triple when the receivers also see the
  state (theorem 3); equals :func:`less_noisy_bounds` on the state-augmented
  joint.

Evaluated right-hand sides can go negative for poor auxiliary choices; they
are clamped below at zero so every region is a down-set of the nonnegative
orthant containing the origin.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .probability import (
    CHAIN_AUX_TO_OUTPUTS,
    CHAIN_AUX_TO_OUTPUTS_LN,
    CHAIN_DEGRADED,
    JointPmf,
    ValidationError,
    check_markov,
    conditional_mutual_information as cmi,
    mutual_information as mi,
)

#: vertex dedup / feasibility tolerance for polytope construction
GEOM_TOL = 1e-9


@dataclass(frozen=True)
class RateBoundsMultilevel:
    """Pentagon bounds on (R0, R1): R0 <= r0_max, R1 <= r1_max, sum <= sum_max."""

    r0_max: float
    r1_max: float
    sum_max: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r0_max, self.r1_max, self.sum_max])


@dataclass(frozen=True)
class RateBoundsTriple:
    """Box bounds on (R1, R2, R3)."""

    r1_max: float
    r2_max: float
    r3_max: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r1_max, self.r2_max, self.r3_max])


def _require_axes(j: JointPmf) -> None:
    missing = {"U", "V", "S", "X", "Y1", "Y2", "Y3"} - set(j.names)
    if missing:
        raise ValidationError(f"joint is missing axes {sorted(missing)}")


def _require_chain(j: JointPmf, chain, label: str, tol: float = 1e-9) -> None:
    ok, dev = check_markov(j, chain, tol)
    if not ok:
        raise ValidationError(
            f"joint violates the Markov chain {label} (max deviation {dev:.3g})"
        )


def multilevel_bounds(j: JointPmf) -> RateBoundsMultilevel:
    """Common/private rate bounds for the multilevel channel with encoder SI.

    r0_max = max(0, min(I(U;Y2) - I(U;S), I(V;Y3) - I(UV;S)))
    r1_max = max(0, I(X;Y1|U) - I(V;S|U) - I(X;S|V))
    sum_max = max(0, I(V;Y3) + I(X;Y1|V) - I(X;S|V) - I(UV;S))
    """
    _require_axes(j)
    _require_chain(j, CHAIN_AUX_TO_OUTPUTS, "(U,V) -> (X,S) -> (Y1,Y3)")
    _require_chain(j, CHAIN_DEGRADED, "(S,X,Y3) -> Y1 -> Y2")
    i_u_y2 = mi(j, "U", "Y2")
    i_u_s = mi(j, "U", "S")
    i_v_y3 = mi(j, "V", "Y3")
    i_uv_s = mi(j, ("U", "V"), "S")
    i_x_y1_u = cmi(j, "X", "Y1", "U")
    i_v_s_u = cmi(j, "V", "S", "U")
    i_x_s_v = cmi(j, "X", "S", "V")
    i_x_y1_v = cmi(j, "X", "Y1", "V")
    return RateBoundsMultilevel(
        r0_max=max(0.0, min(i_u_y2 - i_u_s, i_v_y3 - i_uv_s)),
        r1_max=max(0.0, i_x_y1_u - i_v_s_u - i_x_s_v),
        sum_max=max(0.0, i_v_y3 + i_x_y1_v - i_x_s_v - i_uv_s),
    )


def less_noisy_bounds(j: JointPmf) -> RateBoundsTriple:
    """Per-receiver rate bounds for the less-noisy channel with encoder SI.

    r1 = max(0, I(X;Y1|V) - I(X;S|V)), r2 = max(0, I(V;Y2|U) - I(V;S|U)),
    r3 = max(0, I(U;Y3) - I(U;S)).
    """
    _require_axes(j)
    _require_chain(j, CHAIN_AUX_TO_OUTPUTS_LN, "(U,V) -> (X,S) -> (Y1,Y2,Y3)")
    return RateBoundsTriple(
        r1_max=max(0.0, cmi(j, "X", "Y1", "V") - cmi(j, "X", "S", "V")),
        r2_max=max(0.0, cmi(j, "V", "Y2", "U") - cmi(j, "V", "S", "U")),
        r3_max=max(0.0, mi(j, "U", "Y3") - mi(j, "U", "S")),
    )


def receiver_si_bounds(j: JointPmf) -> RateBoundsTriple:
    """Capacity-region bounds when the receivers also observe the state.

    r1 = I(X;Y1|V,S), r2 = I(V;Y2|U,S), r3 = I(U;Y3|S); conditional mutual
    informations are nonnegative, so clamping only absorbs float noise.
    """
    _require_axes(j)
    _require_chain(j, CHAIN_AUX_TO_OUTPUTS_LN, "(U,V) -> (X,S) -> (Y1,Y2,Y3)")
    return RateBoundsTriple(
        r1_max=max(0.0, cmi(j, "X", "Y1", ("V", "S"))),
        r2_max=max(0.0, cmi(j, "V", "Y2", ("U", "S"))),
        r3_max=max(0.0, cmi(j, "U", "Y3", "S")),
    )


REFERENCE_REGIONS = ("nair_elgamal", "steinberg", "nair_wang")


def reference_bounds(j: JointPmf, which: str):
    """Independently coded reduction formulas used as corollary oracles.

    * ``nair_elgamal``: the multilevel bounds with every state term dropped
      (requires |S| = 1).
    * ``steinberg``: two-user degraded rectangle r0 = I(U;Y2) - I(U;S),
      r1 = I(X;Y1|U) - I(X;S|U), returned as pentagon bounds whose sum bound
      never binds.
    * ``nair_wang``: the less-noisy triple with state terms dropped
      (requires |S| = 1).
    """
    _require_axes(j)
    ns = dict(j.axes)["S"]
    if which == "nair_elgamal":
        if ns != 1:
            raise ValidationError("nair_elgamal reduction requires |S| = 1")
        r0 = max(0.0, min(mi(j, "U", "Y2"), mi(j, "V", "Y3")))
        r1 = max(0.0, cmi(j, "X", "Y1", "U"))
        sm = max(0.0, mi(j, "V", "Y3") + cmi(j, "X", "Y1", "V"))
        return RateBoundsMultilevel(r0, r1, sm)
    if which == "steinberg":
        r0 = max(0.0, mi(j, "U", "Y2") - mi(j, "U", "S"))
        r1 = max(0.0, cmi(j, "X", "Y1", "U") - cmi(j, "X", "S", "U"))
        return RateBoundsMultilevel(r0, r1, r0 + r1)
    if which == "nair_wang":
        if ns != 1:
            raise ValidationError("nair_wang reduction requires |S| = 1")
        return RateBoundsTriple(
            max(0.0, cmi(j, "X", "Y1", "V")),
            max(0.0, cmi(j, "V", "Y2", "U")),
            max(0.0, mi(j, "U", "Y3")),
        )
    raise ValidationError(f"unknown reference region {which!r}; choose from {REFERENCE_REGIONS}")


# ---------------------------------------------------------------------------
# polytope machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionPolytope:
    """A rate-region polytope in 2 or 3 dimensions.

    ``inequalities`` are (coefficient vector, bound) pairs meaning
    coeffs . r <= bound; nonnegativity is carried explicitly.  ``vertices``
    always include the origin and satisfy every inequality within 1e-9.
    """

    dimension: int
    inequalities: tuple[tuple[tuple[float, ...], float], ...]
    vertices: tuple[tuple[float, ...], ...]

    def contains(self, point, tol: float = GEOM_TOL) -> bool:
        p = np.asarray(point, dtype=np.float64)
        if p.shape != (self.dimension,):
            raise ValidationError(f"point has shape {p.shape}, region is {self.dimension}-D")
        return all(float(np.dot(c, p)) <= b + tol for c, b in self.inequalities)

    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=np.float64).reshape(-1, self.dimension)


def _dedupe_points(pts: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
    if len(pts) == 0:
        return pts
    out: list[np.ndarray] = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    return np.array(out)


def _order_vertices(pts: np.ndarray, dim: int) -> np.ndarray:
    if len(pts) <= 1:
        return pts
    if dim == 2:
        center = pts.mean(axis=0)
        ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
        return pts[np.lexsort((pts[:, 1], pts[:, 0], ang))]
    key = np.lexsort(tuple(pts[:, k] for k in range(dim - 1, -1, -1)))
    return pts[key]


def vertices_from_halfspaces(
    inequalities: list[tuple[np.ndarray, float]], dim: int
) -> np.ndarray:
    """Enumerate vertices of {r : A r <= b} by intersecting constraint subsets.

    Intended for the tiny fixed-dimension systems used here (a handful of
    inequalities in 2 or 3 variables).
    """
    A = np.array([c for c, _ in inequalities], dtype=np.float64)
    b = np.array([v for _, v in inequalities], dtype=np.float64)
    cands = []
    for rows in itertools.combinations(range(len(inequalities)), dim):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + GEOM_TOL):
            cands.append(np.clip(x, 0.0, None) if np.all(x > -GEOM_TOL) else x)
    if not cands:
        return np.zeros((0, dim))
    return _order_vertices(_dedupe_points(np.array(cands)), dim)


def _bounds_inequalities(bounds) -> tuple[int, list[tuple[np.ndarray, float]]]:
    if isinstance(bounds, RateBoundsMultilevel):
        ineqs = [
            (np.array([1.0, 0.0]), bounds.r0_max),
            (np.array([0.0, 1.0]), bounds.r1_max),
            (np.array([1.0, 1.0]), bounds.sum_max),
            (np.array([-1.0, 0.0]), 0.0),
            (np.array([0.0, -1.0]), 0.0),
        ]
        return 2, ineqs
    if isinstance(bounds, RateBoundsTriple):
        ineqs = [
            (np.array([1.0, 0.0, 0.0]), bounds.r1_max),
            (np.array([0.0, 1.0, 0.0]), bounds.r2_max),
            (np.array([0.0, 0.0, 1.0]), bounds.r3_max),
            (np.array([-1.0, 0.0, 0.0]), 0.0),
            (np.array([0.0, -1.0, 0.0]), 0.0),
            (np.array([0.0, 0.0, -1.0]), 0.0),
        ]
        return 3, ineqs
    raise ValidationError(f"unsupported bounds type {type(bounds).__name__}")


def polytope_from_bounds(bounds) -> RegionPolytope:
    """The down-set polytope of one evaluated bounds record."""
    dim, ineqs = _bounds_inequalities(bounds)
    verts = vertices_from_halfspaces(ineqs, dim)
    return RegionPolytope(
        dimension=dim,
        inequalities=tuple((tuple(c), float(v)) for c, v in ineqs),
        vertices=tuple(tuple(float(x) for x in p) for p in verts),
    )


def _hull_2d(pts: np.ndarray) -> tuple[np.ndarray, list[tuple[np.ndarray, float]]]:
    """Monotone-chain hull; returns CCW vertices and outward-facing edges."""
    pts = _dedupe_points(pts)
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    if len(pts) == 1:
        return pts, [
            (np.array([1.0, 0.0]), float(pts[0][0])),
            (np.array([0.0, 1.0]), float(pts[0][1])),
        ]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-15:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-15:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    ineqs = []
    for i in range(len(hull)):
        p, q = hull[i], hull[(i + 1) % len(hull)]
        d = q - p
        n = np.array([d[1], -d[0]])
        scale = np.max(np.abs(n))
        if scale < 1e-15:
            continue
        n = n / scale
        ineqs.append((n, float(np.dot(n, p))))
    return hull, ineqs


def _hull_3d(pts: np.ndarray) -> tuple[np.ndarray, list[tuple[np.ndarray, float]]]:
    from scipy.spatial import ConvexHull

    hull = ConvexHull(pts)
    verts = pts[hull.vertices]
    ineqs = []
    for eq in hull.equations:
        n, off = eq[:-1], eq[-1]
        scale = np.max(np.abs(n))
        if scale < 1e-15:
            continue
        ineqs.append((n / scale, float(-off / scale)))
    return verts, ineqs


def _dedupe_inequalities(
    ineqs: list[tuple[np.ndarray, float]]
) -> list[tuple[np.ndarray, float]]:
    out: list[tuple[np.ndarray, float]] = []
    for c, b in ineqs:
        dup = False
        for c2, b2 in out:
            if np.max(np.abs(c - c2)) <= 1e-9 and abs(b - b2) <= 1e-9:
                dup = True
                break
        if not dup:
            out.append((c, b))
    out.sort(key=lambda ib: (tuple(np.round(ib[0], 12)), round(ib[1], 12)))
    return out


def assemble_region(bounds_list, convexify: bool = True) -> RegionPolytope:
    """Convex hull (time sharing) of the union of per-bounds down-sets.

    With ``convexify=False`` the union's vertex cloud is returned together
    with a bounding-box H-representation, which over-approximates a
    non-convex union; the default matches the standard time-sharing closure.
    """
    bounds_list = list(bounds_list)
    if not bounds_list:
        raise ValidationError("assemble_region: empty bounds list")
    kinds = {type(b) for b in bounds_list}
    if len(kinds) != 1:
        raise ValidationError(f"assemble_region: mixed bounds types {kinds}")
    polys = [polytope_from_bounds(b) for b in bounds_list]
    dim = polys[0].dimension
    pts = np.vstack([p.vertex_array() for p in polys] + [np.zeros((1, dim))])
    pts = np.clip(pts, 0.0, None)
    if not convexify:
        verts = _order_vertices(_dedupe_points(pts), dim)
        top = verts.max(axis=0)
        ineqs = [(np.eye(dim)[k], float(top[k])) for k in range(dim)]
        ineqs += [(-np.eye(dim)[k], 0.0) for k in range(dim)]
        return RegionPolytope(
            dim,
            tuple((tuple(c), b) for c, b in _dedupe_inequalities(ineqs)),
            tuple(tuple(float(x) for x in p) for p in verts),
        )

    # collapse axes along which the cloud is flat, hull the rest, lift back
    span = pts.max(axis=0)
    live = [k for k in range(dim) if span[k] > GEOM_TOL]
    flat = [k for k in range(dim) if span[k] <= GEOM_TOL]
    ineqs: list[tuple[np.ndarray, float]] = []
    if len(live) == 0:
        verts = np.zeros((1, dim))
    elif len(live) == 1:
        verts = np.zeros((2, dim))
        verts[1, live[0]] = span[live[0]]
        c = np.zeros(dim)
        c[live[0]] = 1.0
        ineqs.append((c, float(span[live[0]])))
    else:
        sub = pts[:, live]
        sub_verts, sub_ineqs = _hull_2d(sub) if len(live) == 2 else _hull_3d(sub)
        verts = np.zeros((len(sub_verts), dim))
        verts[:, live] = sub_verts
        for c_sub, b in sub_ineqs:
            c = np.zeros(dim)
            c[live] = c_sub
            ineqs.append((c, b))
    for k in flat:
        c = np.zeros(dim)
        c[k] = 1.0
        ineqs.append((c, 0.0))
    ineqs += [(-np.eye(dim)[k], 0.0) for k in range(dim)]
    verts = _order_vertices(_dedupe_points(np.clip(verts, 0.0, None)), dim)
    return RegionPolytope(
        dim,
        tuple((tuple(c), float(b)) for c, b in _dedupe_inequalities(ineqs)),
        tuple(tuple(float(x) for x in p) for p in verts),
    )
