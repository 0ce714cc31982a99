"""Exact Fourier-Motzkin elimination over symbolic information atoms.

Linear inequality systems here mix rate variables (rational coefficients)
with symbolic constants: mutual-information atoms such as ``MI(U;Y2)`` or
``CMI(X;S|V)``.  All arithmetic is in ``fractions.Fraction``; floats enter
only through :func:`numeric_instantiate`, which substitutes measured atom
values and returns a region polytope.

The two builders encode the proof-side constraint systems of the layered
binning scheme (per-layer decoding budgets plus covering costs), from which
the published rate bounds are re-derived mechanically by eliminating the
bin-rate and split-rate variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .probability import (
    JointPmf,
    ValidationError,
    conditional_mutual_information,
    mutual_information,
)
from .regions import GEOM_TOL, RegionPolytope, vertices_from_halfspaces

#: refuse to let one elimination step grow a system past this many inequalities
MAX_INEQUALITIES = 10**4

Fr = Fraction


@dataclass(frozen=True)
class Atom:
    """A canonical information quantity: MI(left;right) or CMI(left;right|cond).

    Variable groups are sorted internally; the left/right role order is kept
    as written, matching how the quantities appear in the rate bounds.
    """

    left: tuple[str, ...]
    right: tuple[str, ...]
    cond: tuple[str, ...] = ()

    @staticmethod
    def mi(left, right) -> "Atom":
        return Atom(_group(left), _group(right))

    @staticmethod
    def cmi(left, right, cond) -> "Atom":
        return Atom(_group(left), _group(right), _group(cond))

    @property
    def name(self) -> str:
        lhs = ",".join(self.left)
        rhs = ",".join(self.right)
        if self.cond:
            return f"CMI({lhs};{rhs}|{','.join(self.cond)})"
        return f"MI({lhs};{rhs})"

    def __str__(self) -> str:
        return self.name


def _group(v) -> tuple[str, ...]:
    if isinstance(v, str):
        return (v,)
    return tuple(sorted(v))


def evaluate_atom(atom: Atom, j: JointPmf) -> float:
    """Measure one atom on a joint distribution, in bits."""
    if atom.cond:
        return conditional_mutual_information(j, atom.left, atom.right, atom.cond)
    return mutual_information(j, atom.left, atom.right)


# ---------------------------------------------------------------------------
# linear expressions over atoms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearExpr:
    """Rational combination of atoms plus a rational constant."""

    atoms: tuple[tuple[Atom, Fraction], ...] = ()
    const: Fraction = Fr(0)

    @staticmethod
    def of(pairs: Mapping[Atom, Fraction] | Iterable[tuple[Atom, Fraction]] = (),
           const: Fraction = Fr(0)) -> "LinearExpr":
        d: dict[Atom, Fraction] = {}
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        for a, c in items:
            d[a] = d.get(a, Fr(0)) + Fr(c)
        return LinearExpr(
            tuple(sorted(((a, c) for a, c in d.items() if c != 0), key=lambda t: t[0].name)),
            Fr(const),
        )

    def as_dict(self) -> dict[Atom, Fraction]:
        return dict(self.atoms)

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        d = self.as_dict()
        for a, c in other.atoms:
            d[a] = d.get(a, Fr(0)) + c
        return LinearExpr.of(d, self.const + other.const)

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        return self + other.scale(Fr(-1))

    def scale(self, k: Fraction) -> "LinearExpr":
        k = Fr(k)
        return LinearExpr.of({a: c * k for a, c in self.atoms}, self.const * k)

    def is_zero(self) -> bool:
        return not self.atoms and self.const == 0

    def is_nonneg_combination(self) -> bool:
        """True if nonnegativity of all atoms certifies expr >= 0."""
        return self.const >= 0 and all(c >= 0 for _, c in self.atoms)

    def value(self, atom_values: Mapping[str, float]) -> float:
        total = float(self.const)
        for a, c in self.atoms:
            if a.name not in atom_values:
                raise ValidationError(f"no value supplied for atom {a.name}")
            total += float(c) * atom_values[a.name]
        return total

    def render(self) -> str:
        if not self.atoms:
            return str(self.const)
        parts: list[str] = []
        for a, c in self.atoms:
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(("- " if c < 0 else ("+ " if parts else "")) + mag + a.name)
        if self.const != 0:
            parts.append(("- " if self.const < 0 else "+ ") + str(abs(self.const)))
        return " ".join(parts)


def atom_expr(*pairs) -> LinearExpr:
    """Convenience builder: atom_expr((atom, 1), (atom2, -1))."""
    return LinearExpr.of([(a, Fr(c)) for a, c in pairs])


@dataclass(frozen=True)
class Relation:
    """``sum(coeffs . vars) <= expr``; coefficient pairs are name-sorted."""

    coeffs: tuple[tuple[str, Fraction], ...]
    expr: LinearExpr

    @staticmethod
    def of(coeffs: Mapping[str, Fraction], expr: LinearExpr) -> "Relation":
        return Relation(
            tuple(sorted((v, Fr(c)) for v, c in coeffs.items() if c != 0)), expr
        )

    def coeff(self, v: str) -> Fraction:
        return dict(self.coeffs).get(v, Fr(0))

    def vars(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def scaled_plus(self, k1: Fraction, other: "Relation", k2: Fraction) -> "Relation":
        d: dict[str, Fraction] = {v: c * k1 for v, c in self.coeffs}
        for v, c in other.coeffs:
            d[v] = d.get(v, Fr(0)) + c * k2
        return Relation.of(d, self.expr.scale(k1) + other.expr.scale(k2))

    def normalized(self) -> "Relation":
        pivot = next((c for _, c in self.coeffs if c != 0), None)
        if pivot is None:
            pivot = next((c for _, c in self.expr.atoms if c != 0), None)
        if pivot is None:
            pivot = self.expr.const if self.expr.const != 0 else Fr(1)
        k = Fr(1) / abs(pivot)
        return Relation.of(
            {v: c * k for v, c in self.coeffs}, self.expr.scale(k)
        )

    def key(self):
        return (
            tuple((v, str(c)) for v, c in self.coeffs),
            tuple((a.name, str(c)) for a, c in self.expr.atoms),
            str(self.expr.const),
        )

    def render(self, as_inequality: bool = True) -> str:
        op = "<=" if as_inequality else "=="
        if not self.coeffs:
            return f"0 {op} {self.expr.render()}"
        if all(c < 0 for _, c in self.coeffs) and self.expr.is_zero():
            lhs = " + ".join(
                (f"{-c}*{v}" if c != -1 else v) for v, c in self.coeffs
            )
            return f"{lhs} >= 0"
        parts: list[str] = []
        for v, c in self.coeffs:
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(("- " if c < 0 else ("+ " if parts else "")) + mag + v)
        return f"{' '.join(parts)} {op} {self.expr.render()}"


@dataclass(frozen=True)
class RewriteRule:
    """Exact substitution ``lhs -> rhs`` on atom combinations."""

    lhs: LinearExpr
    rhs: LinearExpr


def state_rate_identity() -> RewriteRule:
    """The chain-rule identity folding the two covering costs of the cloud
    and middle layers into one: CMI(V;S|U) + MI(U;S) -> MI(U,V;S)."""
    return RewriteRule(
        atom_expr((Atom.cmi("V", "S", "U"), 1), (Atom.mi("U", "S"), 1)),
        atom_expr((Atom.mi(("U", "V"), "S"), 1)),
    )


@dataclass(frozen=True)
class LinIneqSystem:
    """Rational linear system over named rate variables with atom constants."""

    variables: tuple[str, ...]
    inequalities: tuple[Relation, ...]
    equalities: tuple[Relation, ...] = ()

    def atoms(self) -> tuple[Atom, ...]:
        seen: dict[str, Atom] = {}
        for rel in self.inequalities + self.equalities:
            for a, _ in rel.expr.atoms:
                seen[a.name] = a
        return tuple(seen[k] for k in sorted(seen))

    def render(self) -> str:
        lines = [rel.render(True) for rel in self.inequalities]
        lines += [rel.render(False) for rel in self.equalities]
        return "\n".join(lines)


def _dedupe(rels: Iterable[Relation]) -> tuple[Relation, ...]:
    seen: dict[tuple, Relation] = {}
    for r in rels:
        n = r.normalized()
        seen.setdefault(n.key(), n)
    return tuple(seen.values())


def eliminate_var(sys: LinIneqSystem, v: str) -> LinIneqSystem:
    """Project the solution set onto the remaining variables.

    Uses an equality pivot when one mentions ``v`` (exact Gaussian
    substitution), otherwise the standard pairing of lower and upper bounds.
    Inequalities in which ``v`` is one-sidedly unbounded impose nothing on
    the projection and are dropped.
    """
    if v not in sys.variables:
        raise ValidationError(f"variable {v!r} not in system {sys.variables}")
    new_vars = tuple(x for x in sys.variables if x != v)

    pivot = next((e for e in sys.equalities if e.coeff(v) != 0), None)
    if pivot is not None:
        c = pivot.coeff(v)
        rest = list(sys.equalities)
        rest.remove(pivot)

        def substitute(rel: Relation) -> Relation:
            a = rel.coeff(v)
            if a == 0:
                return rel
            return rel.scaled_plus(Fr(1), pivot, -a / c)

        ineqs = _dedupe(substitute(r) for r in sys.inequalities)
        eqs = _dedupe(substitute(r) for r in rest)
        return LinIneqSystem(new_vars, ineqs, eqs)

    zero, upper, lower = [], [], []
    for rel in sys.inequalities:
        c = rel.coeff(v)
        if c == 0:
            zero.append(rel)
        elif c > 0:
            upper.append(rel)
        else:
            lower.append(rel)
    out = list(zero)
    if upper and lower:
        for up, lo in itertools.product(upper, lower):
            cu, cl = up.coeff(v), lo.coeff(v)
            out.append(up.scaled_plus(-cl, lo, cu))
    ineqs = _dedupe(out)
    if len(ineqs) > MAX_INEQUALITIES:
        raise ValidationError(
            f"elimination of {v!r} produced {len(ineqs)} inequalities, over the cap"
        )
    return LinIneqSystem(new_vars, ineqs, tuple(sys.equalities))


def eliminate_all(sys: LinIneqSystem, vars: Sequence[str]) -> LinIneqSystem:
    for v in vars:
        sys = eliminate_var(sys, v)
    return sys


def _apply_rule(expr: LinearExpr, rule: RewriteRule) -> LinearExpr:
    while True:
        d = expr.as_dict()
        coeffs = [d.get(a, Fr(0)) for a, _ in rule.lhs.atoms]
        if not coeffs or any(c == 0 for c in coeffs):
            return expr
        signs = {1 if c > 0 else -1 for c in coeffs}
        if len(signs) != 1:
            return expr
        sign = signs.pop()
        t = Fr(sign) * min(abs(c) for c in coeffs)
        expr = expr - rule.lhs.scale(t) + rule.rhs.scale(t)


def canonicalize(
    sys: LinIneqSystem, rules: Sequence[RewriteRule] = ()
) -> LinIneqSystem:
    """Rewrite atoms, normalize scalings, and drop redundant inequalities.

    Redundancy removal is deliberately shallow: exact duplicates, positive
    scalings, rows certified trivial or dominated by the nonnegativity of
    individual atoms (every atom is a mutual information, hence >= 0).  No
    general information-inequality reasoning is attempted.
    """
    def rewrite(rel: Relation) -> Relation:
        e = rel.expr
        for rule in rules:
            e = _apply_rule(e, rule)
        return Relation(rel.coeffs, e)

    # comparisons run on fully unfolded expressions so that folded and
    # unfolded spellings of the same quantity stay comparable
    unfold = [RewriteRule(r.rhs, r.lhs) for r in rules]

    def expanded(e: LinearExpr) -> LinearExpr:
        for rule in unfold:
            e = _apply_rule(e, rule)
        return e

    ineqs = list(_dedupe(rewrite(r) for r in sys.inequalities))
    eqs = _dedupe(rewrite(r) for r in sys.equalities)

    # 0 <= (nonnegative combination) says nothing
    ineqs = [
        r
        for r in ineqs
        if not (not r.coeffs and expanded(r.expr).is_nonneg_combination())
    ]
    # same variable part: keep the tighter right-hand side when comparable
    drop: set[int] = set()
    for i, k in itertools.combinations(range(len(ineqs)), 2):
        if i in drop or k in drop:
            continue
        if ineqs[i].coeffs != ineqs[k].coeffs:
            continue
        diff = expanded(ineqs[i].expr) - expanded(ineqs[k].expr)
        if diff.is_nonneg_combination():
            drop.add(i)
        elif diff.scale(Fr(-1)).is_nonneg_combination():
            drop.add(k)
    ineqs = [r for n, r in enumerate(ineqs) if n not in drop]

    def sort_key(rel: Relation):
        signs = [c for _, c in rel.coeffs]
        return (
            0 if signs and all(c > 0 for c in signs) else 1,
            rel.vars(),
            rel.key(),
        )

    return LinIneqSystem(
        sys.variables,
        tuple(sorted(ineqs, key=sort_key)),
        tuple(sorted(eqs, key=sort_key)),
    )


# ---------------------------------------------------------------------------
# the two proof-side systems
# ---------------------------------------------------------------------------

MULTILEVEL_VARS = ("R0", "R1", "R11", "R12", "R0'", "R11'", "R12'")
MULTILEVEL_BIN_VARS = ("R0'", "R11'", "R12'", "R11", "R12")
LESS_NOISY_VARS = ("R1", "R2", "R3", "R1'", "R2'", "R3'")
LESS_NOISY_BIN_VARS = ("R1'", "R2'", "R3'")


def _nonneg(vars: Iterable[str]) -> list[Relation]:
    return [Relation.of({v: Fr(-1)}, LinearExpr()) for v in vars]


def multilevel_proof_system() -> LinIneqSystem:
    """Decoding and covering constraints of the three-layer binning scheme
    for the multilevel channel, with slack terms sent to zero.

    Variables: message rates R0, R1 with the private split R1 = R11 + R12,
    and the per-layer bin rates R0', R11', R12'.  Decoding budgets bound each
    layer group by the channel it must survive; covering bounds force each
    bin rate above the layer's state-correlation cost.  The joint budget for
    the everything-wrong event at the strongest receiver is the full-tuple
    quantity MI(U,V,X;Y1): with state correlation the code layers carry
    information about Y1 beyond X alone, and this is exactly the term that
    collapses to MI(X;Y1) when the layers are state-independent.
    """
    e = atom_expr
    ineqs = [
        Relation.of({"R0": Fr(1), "R0'": Fr(1)}, e((Atom.mi("U", "Y2"), 1))),
        Relation.of({"R12": Fr(1), "R12'": Fr(1)}, e((Atom.cmi("X", "Y1", "V"), 1))),
        Relation.of(
            {"R11": Fr(1), "R11'": Fr(1), "R12": Fr(1), "R12'": Fr(1)},
            e((Atom.cmi("X", "Y1", "U"), 1)),
        ),
        Relation.of(
            {v: Fr(1) for v in ("R0", "R0'", "R11", "R11'", "R12", "R12'")},
            e((Atom.mi(("U", "V", "X"), "Y1"), 1)),
        ),
        Relation.of(
            {v: Fr(1) for v in ("R0", "R0'", "R11", "R11'")},
            e((Atom.mi("V", "Y3"), 1)),
        ),
        Relation.of({"R0'": Fr(-1)}, e((Atom.mi("U", "S"), -1))),
        Relation.of({"R11'": Fr(-1)}, e((Atom.cmi("V", "S", "U"), -1))),
        Relation.of({"R12'": Fr(-1)}, e((Atom.cmi("X", "S", "V"), -1))),
    ]
    ineqs += _nonneg(MULTILEVEL_VARS)
    eqs = [
        Relation.of({"R1": Fr(1), "R11": Fr(-1), "R12": Fr(-1)}, LinearExpr())
    ]
    return LinIneqSystem(MULTILEVEL_VARS, tuple(ineqs), tuple(eqs))


def less_noisy_proof_system() -> LinIneqSystem:
    """Per-layer decoding and covering constraints for the less-noisy scheme.

    Each receiver k decodes its own layer, so every constraint touches
    exactly one bin-rate variable Rk'.
    """
    e = atom_expr
    ineqs = [
        Relation.of({"R3'": Fr(-1)}, e((Atom.mi("U", "S"), -1))),
        Relation.of({"R2'": Fr(-1)}, e((Atom.cmi("V", "S", "U"), -1))),
        Relation.of({"R1'": Fr(-1)}, e((Atom.cmi("X", "S", "V"), -1))),
        Relation.of({"R3": Fr(1), "R3'": Fr(1)}, e((Atom.mi("U", "Y3"), 1))),
        Relation.of({"R2": Fr(1), "R2'": Fr(1)}, e((Atom.cmi("V", "Y2", "U"), 1))),
        Relation.of({"R1": Fr(1), "R1'": Fr(1)}, e((Atom.cmi("X", "Y1", "V"), 1))),
    ]
    ineqs += _nonneg(LESS_NOISY_VARS)
    return LinIneqSystem(LESS_NOISY_VARS, tuple(ineqs))


def derived_system(theorem: int) -> LinIneqSystem:
    """Build, eliminate, and canonicalize the proof system for theorem 1 or 2."""
    if theorem == 1:
        sys = eliminate_all(multilevel_proof_system(), MULTILEVEL_BIN_VARS)
    elif theorem == 2:
        sys = eliminate_all(less_noisy_proof_system(), LESS_NOISY_BIN_VARS)
    else:
        raise ValidationError("derived systems exist for theorems 1 and 2 only")
    return canonicalize(sys, [state_rate_identity()])


# ---------------------------------------------------------------------------
# numeric bridge and pure feasibility
# ---------------------------------------------------------------------------


def atom_values_from_joint(sys: LinIneqSystem, j: JointPmf) -> dict[str, float]:
    """Measure every atom the system mentions on one joint."""
    return {a.name: evaluate_atom(a, j) for a in sys.atoms()}


def numeric_instantiate(
    sys: LinIneqSystem,
    atom_values: Mapping[str, float] | Mapping[Atom, float],
    keep: Sequence[str],
) -> RegionPolytope:
    """Substitute atom values and return the polytope over ``keep``.

    Every variable other than ``keep`` must already be eliminated.  Rows
    with purely nonnegative variable coefficients are floored at zero, so
    the result is a down-set containing the origin, matching the clamping
    convention of the bounds evaluators.
    """
    values: dict[str, float] = {}
    for k, v in atom_values.items():
        values[k.name if isinstance(k, Atom) else str(k)] = float(v)
    keep = tuple(keep)
    if sorted(keep) != sorted(sys.variables):
        raise ValidationError(
            f"keep={keep} does not match remaining variables {sys.variables}; "
            "eliminate the others first"
        )
    if len(keep) not in (2, 3):
        raise ValidationError("polytopes are built in 2 or 3 dimensions")
    rows: list[tuple[np.ndarray, float]] = []
    rels = list(sys.inequalities)
    for eq in sys.equalities:
        rels.append(eq)
        rels.append(Relation.of({v: -c for v, c in eq.coeffs}, eq.expr.scale(Fr(-1))))
    for rel in rels:
        coeffs = np.array([float(rel.coeff(v)) for v in keep])
        rhs = rel.expr.value(values)
        if not rel.coeffs:
            continue  # constant row; the floor below makes it vacuous
        if np.all(coeffs >= 0):
            rhs = max(rhs, 0.0)
        rows.append((coeffs, rhs))
    for k in range(len(keep)):
        e = np.zeros(len(keep))
        e[k] = -1.0
        rows.append((e, 0.0))
    verts = vertices_from_halfspaces(rows, len(keep))
    return RegionPolytope(
        dimension=len(keep),
        inequalities=tuple((tuple(c), float(b)) for c, b in rows),
        vertices=tuple(tuple(float(x) for x in p) for p in verts),
    )


class FeasibilityResult(NamedTuple):
    feasible: bool
    violation: Fraction


def feasibility(sys: LinIneqSystem) -> FeasibilityResult:
    """Exact feasibility of a purely numeric system (no atoms allowed).

    Eliminates every variable; the projection is empty iff a contradictory
    constant row remains.  ``violation`` is the largest contradiction
    magnitude (zero when feasible).
    """
    if sys.atoms():
        raise ValidationError("feasibility requires a fully numeric system")
    for v in list(sys.variables):
        sys = eliminate_var(sys, v)
    worst = Fr(0)
    for rel in sys.inequalities:  # 0 <= const
        if rel.expr.const < -worst:
            worst = -rel.expr.const
    for rel in sys.equalities:  # 0 == const
        if abs(rel.expr.const) > worst:
            worst = abs(rel.expr.const)
    return FeasibilityResult(worst == 0, worst)
