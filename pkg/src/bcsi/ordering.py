"""Channel-ordering checks: degradedness certificates and a less-noisy falsifier.

Degradedness (does a stochastic map turn one receiver's channel into the
other's, state by state?) is a crisp linear feasibility problem and is
decided exactly in rational arithmetic, so ``Holds``/``Violated`` verdicts
are certificates.  The less-noisy order quantifies over every auxiliary
input distribution, which is not finitely enumerable; it is attacked by
randomized falsification with a cardinality cap, and the best a search can
honestly report is ``ConsistentUpTo`` a sample count.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fm import LinearExpr, LinIneqSystem, Relation, feasibility
from .probability import ChannelSpec, Kernel, ValidationError

Fr = Fraction

#: a sampled mutual-information gap below this is treated as a violation
LESS_NOISY_MARGIN = -1e-9


class OrderKind(enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    CONSISTENT_UP_TO = "ConsistentUpTo"


@dataclass(frozen=True)
class OrderWitness:
    """Evidence for a Violated verdict: the state and, for sampled checks,
    the auxiliary distribution pair that exposed the gap."""

    state: int
    margin: float
    p_u: np.ndarray | None = None
    p_x_given_u: np.ndarray | None = None


@dataclass(frozen=True)
class OrderVerdict:
    kind: OrderKind
    witness: OrderWitness | None
    samples_checked: int

    def __post_init__(self):
        if self.kind is OrderKind.VIOLATED and self.witness is None:
            raise ValidationError("Violated verdicts must carry a witness")


def _kernel_xs_table(k: Kernel, what: str) -> np.ndarray:
    names = [n for n, _ in k.input_vars]
    if len(names) != 2:
        raise ValidationError(f"{what} must be a kernel on inputs (x, s), got {names}")
    if len(k.output_vars) != 1:
        raise ValidationError(f"{what} must have a single output axis")
    return k.table


def is_degraded(ch_y: Kernel, ch_z: Kernel, tol: float = 1e-9) -> OrderVerdict:
    """Decide whether the z-channel is a degraded version of the y-channel.

    Holds iff for every state s there is a stochastic map q(z|y) with
    p(z|x,s) = sum_y q(z|y) p(y|x,s).  The search for q is an exact rational
    feasibility problem; ``tol`` is the slack allowed on each matching
    equation, absorbing the float rounding of composed kernels.
    """
    py = _kernel_xs_table(ch_y, "ch_y")
    pz = _kernel_xs_table(ch_z, "ch_z")
    if py.shape[:2] != pz.shape[:2]:
        raise ValidationError(
            f"kernels disagree on the (x, s) input space: {py.shape[:2]} vs {pz.shape[:2]}"
        )
    nx, ns, ky = py.shape
    kz = pz.shape[2]
    tol_fr = Fr(tol)
    for s in range(ns):
        variables = tuple(f"q{y}_{z}" for y in range(ky) for z in range(kz))
        ineqs = [Relation.of({v: Fr(-1)}, LinearExpr()) for v in variables]
        eqs = []
        for y in range(ky):
            eqs.append(
                Relation.of(
                    {f"q{y}_{z}": Fr(1) for z in range(kz)},
                    LinearExpr(const=Fr(1)),
                )
            )
        for x in range(nx):
            for z in range(kz):
                coeffs = {
                    f"q{y}_{z}": Fr(float(py[x, s, y])) for y in range(ky)
                }
                target = Fr(float(pz[x, s, z]))
                ineqs.append(Relation.of(coeffs, LinearExpr(const=target + tol_fr)))
                ineqs.append(
                    Relation.of(
                        {v: -c for v, c in coeffs.items()},
                        LinearExpr(const=-(target - tol_fr)),
                    )
                )
        res = feasibility(LinIneqSystem(variables, tuple(ineqs), tuple(eqs)))
        if not res.feasible:
            return OrderVerdict(
                OrderKind.VIOLATED,
                OrderWitness(state=s, margin=float(res.violation)),
                samples_checked=0,
            )
    return OrderVerdict(OrderKind.HOLDS, None, samples_checked=0)


RECEIVER_PAIRS = {
    ("Y1", "Y2"): ("Y1", "Y2"),
    ("Y2", "Y3"): ("Y2", "Y3"),
    ("Y1", "Y3"): ("Y1", "Y3"),
}


def _table_mi_bits(joint: np.ndarray) -> float:
    def ent(t):
        nz = t[t > 0]
        return float(-(nz * np.log2(nz)).sum())

    return ent(joint.sum(axis=1)) + ent(joint.sum(axis=0)) - ent(joint.reshape(-1))


def is_less_noisy(
    ch: ChannelSpec,
    pair: tuple[str, str],
    samples: int = 10_000,
    card_u: int | None = None,
    seed: int = 0,
) -> OrderVerdict:
    """Randomized falsifier for "``pair[0]`` is less noisy than ``pair[1]``".

    Draws ``samples`` auxiliary pairs (p(u), p(x|u)) per state uniformly from
    the simplex and compares I(U; stronger | S=s) against I(U; weaker | S=s).
    The first gap below -1e-9 yields Violated with the witnessing
    distributions; otherwise the verdict is ConsistentUpTo(samples) -- this
    procedure can refute the order but never prove it.

    Per-sample randomness is derived from (seed, sample index), so batches
    may be evaluated in any order or in parallel.
    """
    if tuple(pair) not in RECEIVER_PAIRS:
        raise ValidationError(f"pair must be one of {sorted(RECEIVER_PAIRS)}")
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    strong, weak = pair
    p_strong = ch.receiver_kernel(strong).table
    p_weak = ch.receiver_kernel(weak).table
    nx, ns = p_strong.shape[:2]
    cu = card_u if card_u is not None else nx + 1
    if cu < 1:
        raise ValidationError("card_u must be >= 1")
    for i in range(samples):
        rng = np.random.default_rng((seed, i))
        for s in range(ns):
            p_u = rng.dirichlet(np.ones(cu))
            p_x_u = rng.dirichlet(np.ones(nx), size=cu)
            weight = p_u[:, None] * p_x_u  # joint p(u, x | s)
            gap = _table_mi_bits(weight @ p_strong[:, s, :]) - _table_mi_bits(
                weight @ p_weak[:, s, :]
            )
            if gap < LESS_NOISY_MARGIN:
                return OrderVerdict(
                    OrderKind.VIOLATED,
                    OrderWitness(state=s, margin=-gap, p_u=p_u, p_x_given_u=p_x_u),
                    samples_checked=i + 1,
                )
    return OrderVerdict(OrderKind.CONSISTENT_UP_TO, None, samples_checked=samples)
