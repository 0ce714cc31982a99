from fractions import Fraction as Fr

import numpy as np
import pytest

from bcsi import fm
from bcsi.fm import (
    Atom,
    LinIneqSystem,
    LinearExpr,
    Relation,
    RewriteRule,
    atom_expr,
    canonicalize,
    derived_system,
    eliminate_all,
    eliminate_var,
    feasibility,
    less_noisy_proof_system,
    multilevel_proof_system,
    numeric_instantiate,
    state_rate_identity,
)
from bcsi.probability import ValidationError
from bcsi.regions import multilevel_bounds, less_noisy_bounds, polytope_from_bounds
from bcsi.sampling import random_less_noisy_joint, random_multilevel_joint

from oracles import enumerate_vertices_exact, feasible_by_vertex_enumeration, hull2d_exact


def const(c) -> LinearExpr:
    return LinearExpr(const=Fr(c))


def numeric_system(variables, rows):
    """rows: (coeff dict, rational bound) meaning coeffs . x <= bound."""
    return LinIneqSystem(
        tuple(variables),
        tuple(Relation.of({v: Fr(c) for v, c in coeffs.items()}, const(b)) for coeffs, b in rows),
    )


class TestEliminateVar:
    def test_hand_projection(self):
        # {x <= 3, x + y <= 5, -x <= 0}: eliminating x leaves y <= 5 and 0 <= 3
        sys = numeric_system(
            ("x", "y"),
            [({"x": 1}, 3), ({"x": 1, "y": 1}, 5), ({"x": -1}, 0)],
        )
        out = eliminate_var(sys, "x")
        assert out.variables == ("y",)
        rows = {(r.coeffs, r.expr.const) for r in out.inequalities}
        assert ((("y", Fr(1)),), Fr(5)) in rows
        # the vacuous constant row survives (normalized to 0 <= 1)
        assert ((), Fr(1)) in rows

    def test_one_sided_variable_drops_its_rows(self):
        # y has only upper bounds: its rows impose nothing on x
        sys = numeric_system(
            ("x", "y"),
            [({"y": 1}, 2), ({"x": 1, "y": 1}, 4), ({"x": 1}, 1)],
        )
        out = eliminate_var(sys, "y")
        assert len(out.inequalities) == 1
        assert out.inequalities[0].coeffs == (("x", Fr(1)),)

    def test_equality_pivot_is_exact_substitution(self):
        sys = LinIneqSystem(
            ("x", "y"),
            (Relation.of({"x": Fr(1)}, const(3)),),
            (Relation.of({"x": Fr(1), "y": Fr(-2)}, const(1)),),  # x - 2y == 1
        )
        out = eliminate_var(sys, "x")
        # x = 1 + 2y, so x <= 3 becomes y <= 1
        assert out.equalities == ()
        [rel] = out.inequalities
        # normalized form of 2y <= 2
        assert rel.coeffs == (("y", Fr(1)),) and rel.expr.const == Fr(1)

    def test_projection_matches_vertex_enumeration_oracle(self):
        rng = np.random.default_rng(19)
        for trial in range(20):
            # random 3-var integer system plus a box to keep it bounded
            m = rng.integers(3, 8)
            rows = []
            for _ in range(m):
                coeffs = rng.integers(-3, 4, size=3)
                if not coeffs.any():
                    continue
                rows.append(([int(x) for x in coeffs], int(rng.integers(-2, 6))))
            box = 5
            for k in range(3):
                e = [0, 0, 0]
                e[k] = 1
                rows.append((list(e), box))
                rows.append(([-v for v in e], box))
            sys = numeric_system(
                ("a", "b", "c"),
                [({"a": r[0], "b": r[1], "c": r[2]}, b) for r, b in rows],
            )
            out = eliminate_var(sys, "c")
            # oracle: project exact 3-D vertices, hull them in 2-D
            verts3 = enumerate_vertices_exact(
                [([Fr(int(x)) for x in r], Fr(int(b))) for r, b in rows], 3
            )
            if not verts3:
                # infeasible original: the projection must be infeasible too
                assert not feasibility(out).feasible
                continue
            projected = hull2d_exact([(v[0], v[1]) for v in verts3])
            two_d_rows = [
                (
                    [rel.coeff("a"), rel.coeff("b")],
                    rel.expr.const,
                )
                for rel in out.inequalities
            ]
            got = set(
                (v[0], v[1])
                for v in enumerate_vertices_exact(
                    [(c, b) for c, b in two_d_rows if any(x != 0 for x in c)], 2
                )
                if all(
                    sum(Fr(c) * x for c, x in zip(coeffs, v)) <= b
                    for coeffs, b in two_d_rows
                )
            )
            assert hull2d_exact(got) == projected, f"trial {trial}"


class TestCanonicalize:
    def test_state_rate_identity_folds(self):
        e = atom_expr(
            (Atom.cmi("V", "S", "U"), -1),
            (Atom.mi("U", "S"), -1),
            (Atom.mi("V", "Y3"), 1),
        )
        sys = LinIneqSystem(("R0",), (Relation.of({"R0": Fr(1)}, e),))
        out = canonicalize(sys, [state_rate_identity()])
        [rel] = out.inequalities
        assert rel.expr.as_dict() == {
            Atom.mi(("U", "V"), "S"): Fr(-1),
            Atom.mi("V", "Y3"): Fr(1),
        }

    def test_duplicates_and_scalings_collapse(self):
        a = Relation.of({"x": Fr(1)}, const(2))
        b = Relation.of({"x": Fr(2)}, const(4))  # 2x <= 4, same halfplane
        sys = LinIneqSystem(("x",), (a, b, a))
        out = canonicalize(sys)
        assert len(out.inequalities) == 1

    def test_atom_dominance_removes_weaker_row(self):
        strong = Relation.of(
            {"R3": Fr(1)},
            atom_expr((Atom.mi("U", "Y3"), 1), (Atom.mi("U", "S"), -1)),
        )
        weak = Relation.of({"R3": Fr(1)}, atom_expr((Atom.mi("U", "Y3"), 1)))
        out = canonicalize(LinIneqSystem(("R3",), (weak, strong)))
        assert out.inequalities == (strong,)


class TestProofSystems:
    def test_multilevel_variables_and_atoms(self):
        sys = multilevel_proof_system()
        assert len(sys.variables) == 7
        # eight distinct information atoms across the budget rows
        assert len(sys.atoms()) == 8

    def test_all_coefficients_unit(self):
        for sys in (multilevel_proof_system(), less_noisy_proof_system()):
            for rel in sys.inequalities + sys.equalities:
                for _, c in rel.coeffs:
                    assert c in (Fr(-1), Fr(0), Fr(1))

    def test_less_noisy_rows_touch_one_bin_variable(self):
        sys = less_noisy_proof_system()
        for rel in sys.inequalities:
            primed = [v for v, _ in rel.coeffs if v.endswith("'")]
            assert len(primed) <= 1

    def test_zero_atoms_give_zero_region(self):
        for theorem, keep in ((1, ("R0", "R1")), (2, ("R1", "R2", "R3"))):
            sys = derived_system(theorem)
            poly = numeric_instantiate(sys, {a.name: 0.0 for a in sys.atoms()}, keep)
            verts = poly.vertex_array()
            assert len(verts) == 1
            assert np.allclose(verts[0], 0.0, atol=1e-12)


class TestDerivedSystems:
    def test_less_noisy_system_is_syntactically_the_published_triple(self):
        sys = derived_system(2)
        uppers = [r for r in sys.inequalities if all(c > 0 for _, c in r.coeffs)]
        expect = {
            Relation.of(
                {"R1": Fr(1)},
                atom_expr((Atom.cmi("X", "Y1", "V"), 1), (Atom.cmi("X", "S", "V"), -1)),
            ),
            Relation.of(
                {"R2": Fr(1)},
                atom_expr((Atom.cmi("V", "Y2", "U"), 1), (Atom.cmi("V", "S", "U"), -1)),
            ),
            Relation.of(
                {"R3": Fr(1)},
                atom_expr((Atom.mi("U", "Y3"), 1), (Atom.mi("U", "S"), -1)),
            ),
        }
        assert set(uppers) == expect

    def test_multilevel_system_contains_published_pentagon_rows(self):
        sys = derived_system(1)
        rows = set(sys.inequalities)
        r0a = Relation.of(
            {"R0": Fr(1)},
            atom_expr((Atom.mi("U", "Y2"), 1), (Atom.mi("U", "S"), -1)),
        )
        r0b = Relation.of(
            {"R0": Fr(1)},
            atom_expr((Atom.mi("V", "Y3"), 1), (Atom.mi(("U", "V"), "S"), -1)),
        )
        r1 = Relation.of(
            {"R1": Fr(1)},
            atom_expr(
                (Atom.cmi("X", "Y1", "U"), 1),
                (Atom.cmi("V", "S", "U"), -1),
                (Atom.cmi("X", "S", "V"), -1),
            ),
        )
        rsum = Relation.of(
            {"R0": Fr(1), "R1": Fr(1)},
            atom_expr(
                (Atom.mi("V", "Y3"), 1),
                (Atom.cmi("X", "Y1", "V"), 1),
                (Atom.cmi("X", "S", "V"), -1),
                (Atom.mi(("U", "V"), "S"), -1),
            ),
        )
        for want in (r0a, r0b, r1, rsum):
            assert want in rows

    def test_numeric_match_multilevel_on_random_joints(self):
        rng = np.random.default_rng(71)
        sys = derived_system(1)
        for _ in range(20):
            j = random_multilevel_joint(rng)
            vals = fm.atom_values_from_joint(sys, j)
            fm_poly = numeric_instantiate(sys, vals, ("R0", "R1"))
            ev_poly = polytope_from_bounds(multilevel_bounds(j))
            # the derived system is never larger than the published pentagon
            for v in fm_poly.vertices:
                assert ev_poly.contains(v, tol=1e-9)

    def test_numeric_match_less_noisy_unrestricted(self):
        rng = np.random.default_rng(73)
        sys = derived_system(2)
        for _ in range(20):
            j = random_less_noisy_joint(rng)
            vals = fm.atom_values_from_joint(sys, j)
            fm_poly = numeric_instantiate(sys, vals, ("R1", "R2", "R3"))
            ev_poly = polytope_from_bounds(less_noisy_bounds(j))
            a = sorted(fm_poly.vertices)
            b = sorted(ev_poly.vertices)
            assert len(a) == len(b)
            assert np.allclose(np.array(a), np.array(b), atol=1e-9)


class TestNumericInstantiate:
    def test_identity_channel_pentagon(self):
        # atoms measured on the noiseless copy-chain joint: r0 = 1, r1 = 0
        sys = derived_system(1)
        vals = {a.name: 0.0 for a in sys.atoms()}
        vals["MI(U;Y2)"] = 1.0
        vals["MI(V;Y3)"] = 1.0
        vals["MI(U,V,X;Y1)"] = 1.0
        poly = numeric_instantiate(sys, vals, ("R0", "R1"))
        assert sorted(poly.vertices) == [(0.0, 0.0), (1.0, 0.0)]

    def test_missing_atom_named(self):
        sys = derived_system(2)
        with pytest.raises(ValidationError, match="no value supplied for atom"):
            numeric_instantiate(sys, {"MI(U;Y3)": 1.0}, ("R1", "R2", "R3"))

    def test_keep_must_match_remaining_variables(self):
        sys = derived_system(1)
        with pytest.raises(ValidationError):
            numeric_instantiate(sys, {a.name: 0.0 for a in sys.atoms()}, ("R0",))


class TestFeasibility:
    def test_contradiction(self):
        sys = numeric_system(("x",), [({"x": -1}, -1), ({"x": 1}, 0)])
        res = feasibility(sys)
        assert not res.feasible
        assert res.violation == Fr(1)

    def test_empty_system_is_feasible(self):
        assert feasibility(LinIneqSystem((), ())).feasible

    def test_atoms_rejected(self):
        sys = LinIneqSystem(
            ("x",),
            (Relation.of({"x": Fr(1)}, atom_expr((Atom.mi("U", "S"), 1))),),
        )
        with pytest.raises(ValidationError):
            feasibility(sys)

    def test_matches_vertex_enumeration_on_random_systems(self):
        rng = np.random.default_rng(83)
        agree = 0
        for _ in range(30):
            dim = int(rng.integers(2, 4))
            names = tuple("xyz"[:dim])
            rows = []
            for _ in range(int(rng.integers(2, 6))):
                coeffs = rng.integers(-2, 3, size=dim)
                if not coeffs.any():
                    continue
                rows.append(([int(x) for x in coeffs], int(rng.integers(-1, 4))))
            sys = numeric_system(
                names,
                [({n: int(r[k]) for k, n in enumerate(names)}, int(b)) for r, b in rows],
            )
            got = feasibility(sys).feasible
            want = feasible_by_vertex_enumeration(
                [([Fr(int(x)) for x in r], Fr(int(b))) for r, b in rows], [], dim
            )
            assert got == want
            agree += 1
        assert agree == 30
