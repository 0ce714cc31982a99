from fractions import Fraction as Fr

import numpy as np
import pytest

from bcsi.ordering import OrderKind, is_degraded, is_less_noisy
from bcsi.probability import ChannelSpec, Kernel, Pmf, ValidationError
from bcsi.sampling import random_channel

from oracles import feasible_by_vertex_enumeration


def xs_kernel(table):
    t = np.asarray(table, dtype=float)
    nx, ns, k = t.shape
    return Kernel(t, (("X", nx), ("S", ns)), (("OUT", k),))


def bsc(p):
    return np.array([[1 - p, p], [p, 1 - p]])


def compose(py, q):
    """z-kernel = y-kernel followed by q(z|y)."""
    return np.einsum("xsy,yz->xsz", py, q)


def degraded_feasible_oracle(py, pz, tol=1e-9) -> bool:
    """Exact rational feasibility via vertex enumeration, state by state."""
    nx, ns, ky = py.shape
    kz = pz.shape[2]
    for s in range(ns):
        dim = ky * kz
        ineqs = []
        eqs = []
        for y in range(ky):
            row = [Fr(0)] * dim
            for z in range(kz):
                row[y * kz + z] = Fr(1)
            eqs.append((row, Fr(1)))
        for i in range(dim):
            e = [Fr(0)] * dim
            e[i] = Fr(-1)
            ineqs.append((e, Fr(0)))
        for x in range(nx):
            for z in range(kz):
                row = [Fr(0)] * dim
                for y in range(ky):
                    row[y * kz + z] = Fr(float(py[x, s, y]))
                target = Fr(float(pz[x, s, z]))
                ineqs.append((row, target + Fr(tol)))
                ineqs.append(([-c for c in row], -(target - Fr(tol))))
        if not feasible_by_vertex_enumeration(ineqs, eqs, dim, box=Fr(2)):
            return False
    return True


class TestIsDegraded:
    def test_explicit_cascade_holds(self):
        rng = np.random.default_rng(3)
        py = rng.dirichlet(np.ones(3), size=(2, 2))
        q = rng.dirichlet(np.ones(2), size=3)
        verdict = is_degraded(xs_kernel(py), xs_kernel(compose(py, q)))
        assert verdict.kind is OrderKind.HOLDS
        assert verdict.witness is None

    def test_identity_composition_holds(self):
        rng = np.random.default_rng(5)
        py = rng.dirichlet(np.ones(2), size=(2, 2))
        verdict = is_degraded(xs_kernel(py), xs_kernel(py))
        assert verdict.kind is OrderKind.HOLDS

    def test_noisier_cannot_produce_cleaner(self):
        ns = 1
        noisy = bsc(0.2)[:, None, :]
        clean = bsc(0.0)[:, None, :]
        verdict = is_degraded(xs_kernel(noisy), xs_kernel(clean))
        assert verdict.kind is OrderKind.VIOLATED
        assert verdict.witness.state == 0
        assert verdict.witness.margin > 1e-6
        # the reverse direction holds: clean -> BSC(0.2) via q = BSC(0.2)
        back = is_degraded(xs_kernel(clean), xs_kernel(noisy))
        assert back.kind is OrderKind.HOLDS

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(7)
        a = rng.dirichlet(np.ones(2), size=(2, 2))
        b = rng.dirichlet(np.ones(2), size=(3, 2))
        with pytest.raises(ValidationError):
            is_degraded(xs_kernel(a), xs_kernel(b))

    def test_agrees_with_vertex_enumeration_oracle(self):
        rng = np.random.default_rng(11)
        hits = {True: 0, False: 0}
        for trial in range(20):
            py = rng.dirichlet(np.ones(2), size=(2, 2))
            if trial % 2 == 0:
                q = rng.dirichlet(np.ones(2), size=2)
                pz = compose(py, q)
            else:
                pz = rng.dirichlet(np.ones(2), size=(2, 2))
            verdict = is_degraded(xs_kernel(py), xs_kernel(pz))
            want = degraded_feasible_oracle(py, pz)
            assert (verdict.kind is OrderKind.HOLDS) == want, f"trial {trial}"
            hits[want] += 1
        assert hits[True] >= 5 and hits[False] >= 5  # both outcomes exercised


def less_noisy_channel(p_y1_flip, p_y2_flip, ns=1):
    """Product less-noisy-model channel with independent receiver flips."""
    y1 = bsc(p_y1_flip)
    y2 = bsc(p_y2_flip)
    y3 = bsc(0.5)
    main = np.einsum("xa,xb,xc->xabc", y1, y2, y3)[:, None, :, :, :].repeat(ns, axis=1)
    return ChannelSpec(
        "less_noisy",
        Pmf(np.full(ns, 1.0 / ns)),
        Kernel(main, (("X", 2), ("S", ns)), (("Y1", 2), ("Y2", 2), ("Y3", 2))),
    )


class TestIsLessNoisy:
    def test_identical_receivers_consistent(self):
        ch = less_noisy_channel(0.1, 0.1)
        verdict = is_less_noisy(ch, ("Y1", "Y2"), samples=300, seed=1)
        assert verdict.kind is OrderKind.CONSISTENT_UP_TO
        assert verdict.samples_checked == 300

    def test_constant_weaker_output_consistent(self):
        main = np.zeros((2, 1, 2, 1, 2))
        for x in range(2):
            main[x, 0, x, 0, x] = 1.0
        ch = ChannelSpec(
            "less_noisy",
            Pmf([1.0]),
            Kernel(main, (("X", 2), ("S", 1)), (("Y1", 2), ("Y2", 1), ("Y3", 2))),
        )
        verdict = is_less_noisy(ch, ("Y1", "Y2"), samples=200, seed=2)
        assert verdict.kind is OrderKind.CONSISTENT_UP_TO

    def test_flip_claimed_stronger_than_identity_is_violated(self):
        # "Y1 less noisy than Y2" is false when Y1 is a BSC(0.3) and Y2 is clean
        ch = less_noisy_channel(0.3, 0.0)
        verdict = is_less_noisy(ch, ("Y1", "Y2"), samples=1000, card_u=2, seed=3)
        assert verdict.kind is OrderKind.VIOLATED
        w = verdict.witness
        assert w.margin > 1e-3
        # recompute the witness's gap directly from its distributions
        p_y1 = ch.receiver_kernel("Y1").table[:, w.state, :]
        p_y2 = ch.receiver_kernel("Y2").table[:, w.state, :]
        weight = w.p_u[:, None] * w.p_x_given_u

        def table_mi(joint):
            def ent(v):
                v = v[v > 0]
                return float(-(v * np.log2(v)).sum())

            return (
                ent(joint.sum(axis=1)) + ent(joint.sum(axis=0)) - ent(joint.ravel())
            )

        gap = table_mi(weight @ p_y1) - table_mi(weight @ p_y2)
        assert gap == pytest.approx(-w.margin, abs=1e-12)

    def test_true_degraded_order_never_violated(self):
        # Y2 = Y1 + extra flip, so Y1 is genuinely less noisy than Y2
        y1 = bsc(0.1)
        main = np.einsum("xa,ab,xc->xabc", y1, bsc(0.15), bsc(0.5))
        ch = ChannelSpec(
            "less_noisy",
            Pmf([1.0]),
            Kernel(
                main[:, None, :, :, :],
                (("X", 2), ("S", 1)),
                (("Y1", 2), ("Y2", 2), ("Y3", 2)),
            ),
        )
        verdict = is_less_noisy(ch, ("Y1", "Y2"), samples=2000, seed=5)
        assert verdict.kind is OrderKind.CONSISTENT_UP_TO

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(13)
        ch = random_channel(rng, "less_noisy")
        a = is_less_noisy(ch, ("Y2", "Y3"), samples=50, seed=9)
        b = is_less_noisy(ch, ("Y2", "Y3"), samples=50, seed=9)
        assert a.kind == b.kind and a.samples_checked == b.samples_checked
        if a.witness is not None:
            assert np.array_equal(a.witness.p_u, b.witness.p_u)

    def test_degraded_implies_less_noisy_consistent(self):
        # build multilevel channels (Y2 degraded from Y1 by construction)
        rng = np.random.default_rng(17)
        for _ in range(3):
            ch = random_channel(rng, "multilevel")
            verdict = is_less_noisy(ch, ("Y1", "Y2"), samples=400, seed=21)
            assert verdict.kind is OrderKind.CONSISTENT_UP_TO

    def test_bad_pair_rejected(self):
        ch = less_noisy_channel(0.1, 0.2)
        with pytest.raises(ValidationError):
            is_less_noisy(ch, ("Y1", "Y1"), samples=10)
