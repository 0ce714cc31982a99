"""Exact construction and measurement of finite joint distributions.

Everything downstream (rate bounds, channel-order checks, the coding
simulator) works on one object: a dense joint probability tensor over the
named variables U, V, S, X, Y1, Y2, Y3.  This module builds that tensor from
a channel description plus a designer-chosen auxiliary factorization, and
measures it: entropy, mutual information, conditional mutual information,
marginalization, Markov-chain validation.

Conventions
-----------
* All logarithms are base 2; every information quantity is in bits.
* 0 * log 0 == 0, and conditional quantities skip zero-probability cells.
* Distributions are accepted if they sum to 1 within ``SUM_TOL`` (1e-9) and
  are renormalized exactly on construction; internal identities then hold to
  ~1e-12.
* All value types are frozen and their arrays are marked read-only, so they
  are safe to share across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: absolute tolerance for user-supplied rows/distributions summing to 1
SUM_TOL = 1e-9

#: refuse to allocate joint tensors with more cells than this
MAX_JOINT_CELLS = 10**8

#: canonical axis order of every full joint built here
JOINT_VARS = ("U", "V", "S", "X", "Y1", "Y2", "Y3")


class ValidationError(ValueError):
    """User-supplied data violates a contract (shape, stochasticity, names)."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _check_prob_entries(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{what}: non-finite entries")
    if np.any(a < 0):
        raise ValidationError(f"{what}: negative entries (min {a.min():.3g})")


@dataclass(frozen=True)
class Pmf:
    """A probability mass function over a finite alphabet.

    Entries must be nonnegative and sum to 1 within ``SUM_TOL``; they are
    renormalized exactly after validation.
    """

    probs: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        _check_prob_entries(p, "Pmf")
        total = p.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"Pmf sums to {total!r}, outside 1 +/- {SUM_TOL}")
        if self.labels is not None and len(self.labels) != p.size:
            raise ValidationError("Pmf labels do not match alphabet size")
        object.__setattr__(self, "probs", _freeze(p / total))

    @property
    def size(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class Kernel:
    """A conditional distribution table p(outputs | inputs).

    ``table`` has one leading axis per input variable and one trailing axis
    per output variable; every row (slice over the output axes) is a valid
    distribution.  Variables are (name, alphabet size) pairs.
    """

    table: np.ndarray
    input_vars: tuple[tuple[str, int], ...]
    output_vars: tuple[tuple[str, int], ...]

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        in_shape = tuple(k for _, k in self.input_vars)
        out_shape = tuple(k for _, k in self.output_vars)
        if t.shape != in_shape + out_shape:
            raise ValidationError(
                f"Kernel table shape {t.shape} does not match "
                f"inputs {in_shape} x outputs {out_shape}"
            )
        _check_prob_entries(t, "Kernel")
        flat = t.reshape(in_shape + (-1,)) if in_shape else t.reshape(1, -1)
        sums = flat.sum(axis=-1)
        bad = np.argwhere(np.abs(sums - 1.0) > SUM_TOL)
        if bad.size:
            idx = tuple(int(i) for i in bad[0])
            names = ",".join(f"{n}={v}" for (n, _), v in zip(self.input_vars, idx))
            raise ValidationError(
                f"Kernel row [{names}] sums to {float(sums[tuple(bad[0])]):.12g}"
            )
        t = t / sums.reshape(in_shape + (1,) * len(out_shape) if in_shape else (1,) * t.ndim)
        object.__setattr__(self, "table", _freeze(t))
        object.__setattr__(self, "input_vars", tuple(self.input_vars))
        object.__setattr__(self, "output_vars", tuple(self.output_vars))

    def row(self, *index: int) -> Pmf:
        """Output distribution for one input index tuple."""
        return Pmf(self.table[tuple(index)].reshape(-1))


@dataclass(frozen=True)
class JointPmf:
    """A dense joint distribution with named axes.

    ``axes`` is an ordered tuple of (variable name, alphabet size); the
    tensor has exactly that shape.  Total mass must be 1 within 1e-12.
    """

    tensor: np.ndarray
    axes: tuple[tuple[str, int], ...]

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=np.float64)
        shape = tuple(k for _, k in self.axes)
        if t.shape != shape:
            raise ValidationError(f"JointPmf tensor shape {t.shape} != declared {shape}")
        if t.size > MAX_JOINT_CELLS:
            raise ValidationError(
                f"joint tensor has {t.size} cells, over the {MAX_JOINT_CELLS} cap"
            )
        _check_prob_entries(t, "JointPmf")
        if abs(t.sum() - 1.0) > 1e-12:
            raise ValidationError(f"JointPmf mass {t.sum()!r} is not 1 within 1e-12")
        names = [n for n, _ in self.axes]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate axis names in {names}")
        object.__setattr__(self, "tensor", _freeze(t))
        object.__setattr__(self, "axes", tuple((n, int(k)) for n, k in self.axes))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.axes)

    def axis_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown variable {name!r}; have {self.names}") from None


def _as_nameset(j: JointPmf, vars: str | Iterable[str], what: str) -> tuple[str, ...]:
    if isinstance(vars, str):
        vars = (vars,)
    names = tuple(vars)
    if not names:
        raise ValidationError(f"{what}: empty variable set")
    seen = set()
    for n in names:
        j.axis_of(n)
        if n in seen:
            raise ValidationError(f"{what}: repeated variable {n!r}")
        seen.add(n)
    return names


def _marginal_tensor(j: JointPmf, keep: Sequence[str]) -> np.ndarray:
    """Marginal over ``keep`` in the joint's own axis order."""
    keep_idx = sorted(j.axis_of(n) for n in keep)
    drop = tuple(i for i in range(len(j.axes)) if i not in keep_idx)
    return j.tensor.sum(axis=drop) if drop else j.tensor


def marginalize(j: JointPmf, keep: str | Iterable[str]) -> JointPmf:
    """Sum out every axis not in ``keep``; axis order follows the parent."""
    names = _as_nameset(j, keep, "marginalize")
    keep_idx = sorted(j.axis_of(n) for n in names)
    t = _marginal_tensor(j, names)
    return JointPmf(t, tuple(j.axes[i] for i in keep_idx))


def entropy(p: Pmf | np.ndarray) -> float:
    """Shannon entropy in bits, with 0 log 0 == 0."""
    a = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=np.float64)
    a = a.reshape(-1)
    nz = a[a > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def _subset_entropy(j: JointPmf, vars: Sequence[str]) -> float:
    return entropy(_marginal_tensor(j, vars))


def mutual_information(
    j: JointPmf, a: str | Iterable[str], b: str | Iterable[str]
) -> float:
    """I(A;B) in bits, computed as H(A) + H(B) - H(A,B)."""
    an = _as_nameset(j, a, "mutual_information")
    bn = _as_nameset(j, b, "mutual_information")
    if set(an) & set(bn):
        raise ValidationError(f"mutual_information: overlapping sets {an} and {bn}")
    return (
        _subset_entropy(j, an)
        + _subset_entropy(j, bn)
        - _subset_entropy(j, an + bn)
    )


def conditional_mutual_information(
    j: JointPmf,
    a: str | Iterable[str],
    b: str | Iterable[str],
    c: str | Iterable[str] = (),
) -> float:
    """I(A;B|C) in bits, as H(A,C) + H(B,C) - H(A,B,C) - H(C).

    With an empty conditioning set this reduces to plain mutual information.
    """
    an = _as_nameset(j, a, "conditional_mutual_information")
    bn = _as_nameset(j, b, "conditional_mutual_information")
    if isinstance(c, str):
        c = (c,)
    cn = tuple(c)
    if not cn:
        return mutual_information(j, an, bn)
    cn = _as_nameset(j, cn, "conditional_mutual_information")
    groups = [set(an), set(bn), set(cn)]
    for i in range(3):
        for k in range(i + 1, 3):
            if groups[i] & groups[k]:
                raise ValidationError(
                    f"conditional_mutual_information: sets overlap: {an}, {bn}, {cn}"
                )
    return (
        _subset_entropy(j, an + cn)
        + _subset_entropy(j, bn + cn)
        - _subset_entropy(j, an + bn + cn)
        - _subset_entropy(j, cn)
    )


@dataclass(frozen=True)
class ChannelSpec:
    """The fixed channel data for either supported channel class.

    * ``model == "multilevel"``: ``main`` is p(y1, y3 | x, s) and
      ``degrading`` is the virtual channel p(y2 | y1).
    * ``model == "less_noisy"``: ``main`` is p(y1, y2, y3 | x, s) and
      ``degrading`` must be absent.
    """

    model: str
    p_s: Pmf
    main: Kernel
    degrading: Kernel | None = None

    def __post_init__(self):
        if self.model not in ("multilevel", "less_noisy"):
            raise ValidationError(f"unknown channel model {self.model!r}")
        in_names = [n for n, _ in self.main.input_vars]
        if in_names != ["X", "S"]:
            raise ValidationError(f"main kernel inputs must be (X, S), got {in_names}")
        out_names = [n for n, _ in self.main.output_vars]
        want = ["Y1", "Y3"] if self.model == "multilevel" else ["Y1", "Y2", "Y3"]
        if out_names != want:
            raise ValidationError(
                f"main kernel outputs must be {want} for {self.model}, got {out_names}"
            )
        if dict(self.main.input_vars)["S"] != self.p_s.size:
            raise ValidationError("p_s size does not match the main kernel's S axis")
        if self.model == "multilevel":
            if self.degrading is None:
                raise ValidationError("multilevel model requires the degrading kernel")
            if [n for n, _ in self.degrading.input_vars] != ["Y1"] or [
                n for n, _ in self.degrading.output_vars
            ] != ["Y2"]:
                raise ValidationError("degrading kernel must map Y1 -> Y2")
            if dict(self.degrading.input_vars)["Y1"] != dict(self.main.output_vars)["Y1"]:
                raise ValidationError("degrading kernel Y1 axis does not match main kernel")
        elif self.degrading is not None:
            raise ValidationError("less_noisy model must not carry a degrading kernel")

    @property
    def sizes(self) -> dict[str, int]:
        d = dict(self.main.input_vars) | dict(self.main.output_vars)
        if self.model == "multilevel":
            d["Y2"] = dict(self.degrading.output_vars)["Y2"]
        return d

    def receiver_kernel(self, receiver: str) -> Kernel:
        """Marginal kernel (x, s) -> Y_k for one receiver."""
        sizes = self.sizes
        if receiver not in ("Y1", "Y2", "Y3"):
            raise ValidationError(f"unknown receiver {receiver!r}")
        t = self.main.table
        if self.model == "multilevel":
            if receiver == "Y1":
                out = t.sum(axis=3)
            elif receiver == "Y3":
                out = t.sum(axis=2)
            else:
                out = np.einsum("xsac,ab->xsb", t, self.degrading.table)
        else:
            axis = {"Y1": (3, 4), "Y2": (2, 4), "Y3": (2, 3)}[receiver]
            out = t.sum(axis=axis)
        return Kernel(
            out,
            input_vars=self.main.input_vars,
            output_vars=((receiver, sizes[receiver]),),
        )


@dataclass(frozen=True)
class AuxFactorization:
    """The designer-chosen factors p(u|s), p(v|u,s), p(x|v,s)."""

    p_u_given_s: Kernel
    p_v_given_us: Kernel
    p_x_given_vs: Kernel
    card_u: int = 0
    card_v: int = 0

    def __post_init__(self):
        cu = dict(self.p_u_given_s.output_vars).get("U")
        cv = dict(self.p_v_given_us.output_vars).get("V")
        if cu is None or cv is None:
            raise ValidationError("auxiliary kernels must output U and V")
        if self.card_u and self.card_u != cu:
            raise ValidationError(f"card_u={self.card_u} but U alphabet is {cu}")
        if self.card_v and self.card_v != cv:
            raise ValidationError(f"card_v={self.card_v} but V alphabet is {cv}")
        object.__setattr__(self, "card_u", cu)
        object.__setattr__(self, "card_v", cv)
        if [n for n, _ in self.p_u_given_s.input_vars] != ["S"]:
            raise ValidationError("p(u|s) must have input (S,)")
        if [n for n, _ in self.p_v_given_us.input_vars] != ["U", "S"]:
            raise ValidationError("p(v|u,s) must have inputs (U, S)")
        if [n for n, _ in self.p_x_given_vs.input_vars] != ["V", "S"]:
            raise ValidationError("p(x|v,s) must have inputs (V, S)")
        if dict(self.p_v_given_us.input_vars)["U"] != cu:
            raise ValidationError("p(v|u,s) U axis does not match p(u|s)")
        if dict(self.p_x_given_vs.input_vars)["V"] != cv:
            raise ValidationError("p(x|v,s) V axis does not match p(v|u,s)")

    @classmethod
    def from_tables(
        cls,
        p_u_given_s: np.ndarray,
        p_v_given_us: np.ndarray,
        p_x_given_vs: np.ndarray,
    ) -> "AuxFactorization":
        """Build from raw arrays indexed [s][u], [u][s][v], [v][s][x]."""
        pu = np.asarray(p_u_given_s, dtype=np.float64)
        pv = np.asarray(p_v_given_us, dtype=np.float64)
        px = np.asarray(p_x_given_vs, dtype=np.float64)
        if pu.ndim != 2 or pv.ndim != 3 or px.ndim != 3:
            raise ValidationError(
                "auxiliary tables must be [s][u], [u][s][v], [v][s][x]"
            )
        ns, cu = pu.shape
        cv = pv.shape[2]
        nx = px.shape[2]
        if pv.shape[:2] != (cu, ns):
            raise ValidationError(f"p(v|u,s) shape {pv.shape} != ({cu},{ns},*)")
        if px.shape[:2] != (cv, ns):
            raise ValidationError(f"p(x|v,s) shape {px.shape} != ({cv},{ns},*)")
        return cls(
            Kernel(pu, (("S", ns),), (("U", cu),)),
            Kernel(pv, (("U", cu), ("S", ns)), (("V", cv),)),
            Kernel(px, (("V", cv), ("S", ns)), (("X", nx),)),
        )


def build_joint(ch: ChannelSpec, aux: AuxFactorization) -> JointPmf:
    """Product joint p(u,v,s,x,y1,y2,y3) of the channel and auxiliary factors.

    The factor chain is p(s) p(u|s) p(v|u,s) p(x|v,s) followed by the channel
    kernel(s); by construction the result satisfies the defining Markov
    chains of each model.
    """
    sizes = ch.sizes
    nx, ns = sizes["X"], sizes["S"]
    if dict(aux.p_u_given_s.input_vars)["S"] != ns:
        raise ValidationError("auxiliary S alphabet does not match the channel")
    if dict(aux.p_x_given_vs.output_vars)["X"] != nx:
        raise ValidationError("auxiliary X alphabet does not match the channel")
    cells = (
        aux.card_u * aux.card_v * ns * nx * sizes["Y1"] * sizes["Y2"] * sizes["Y3"]
    )
    if cells > MAX_JOINT_CELLS:
        raise ValidationError(f"joint would need {cells} cells, over the cap")
    ps = ch.p_s.probs
    pu = aux.p_u_given_s.table
    pv = aux.p_v_given_us.table
    px = aux.p_x_given_vs.table
    if ch.model == "multilevel":
        t = np.einsum(
            "s,su,usv,vsx,xsac,ab->uvsxabc",
            ps, pu, pv, px, ch.main.table, ch.degrading.table,
            optimize=True,
        )
    else:
        t = np.einsum(
            "s,su,usv,vsx,xsabc->uvsxabc", ps, pu, pv, px, ch.main.table,
            optimize=True,
        )
    axes = (
        ("U", aux.card_u),
        ("V", aux.card_v),
        ("S", ns),
        ("X", nx),
        ("Y1", sizes["Y1"]),
        ("Y2", sizes["Y2"]),
        ("Y3", sizes["Y3"]),
    )
    return JointPmf(t, axes)


def check_markov(
    j: JointPmf,
    chain: tuple[Iterable[str], Iterable[str], Iterable[str]],
    tol: float = 1e-12,
) -> tuple[bool, float]:
    """Test the chain A -> B -> C: p(c|a,b) == p(c|b) wherever p(a,b) > 0.

    Returns (holds, max deviation).  Cells with zero mass on the
    conditioning side are skipped.
    """
    a, b, c = (_as_nameset(j, g, "check_markov") for g in chain)
    if (set(a) | set(b)) & set(c) or set(a) & set(b):
        raise ValidationError("check_markov: chain groups must be disjoint")
    m = marginalize(j, a + b + c)
    # move axes into (A..., B..., C...) group order, then flatten each group
    order = [m.axis_of(n) for n in a + b + c]
    t = np.transpose(m.tensor, order)
    ka = int(np.prod([dict(m.axes)[n] for n in a]))
    kb = int(np.prod([dict(m.axes)[n] for n in b]))
    kc = int(np.prod([dict(m.axes)[n] for n in c]))
    t = t.reshape(ka, kb, kc)
    p_ab = t.sum(axis=2)
    p_b_c = t.sum(axis=0)
    p_b = p_b_c.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_abc = t / p_ab[:, :, None]
        cond_bc = p_b_c / p_b[:, None]
    dev = np.abs(cond_abc - cond_bc[None, :, :])
    mask = np.broadcast_to(
        (p_ab[:, :, None] > 0) & (p_b[None, :, None] > 0), dev.shape
    )
    max_dev = float(dev[mask].max()) if mask.any() else 0.0
    return (max_dev <= tol, max_dev)


#: the two structural chains implied by the multilevel factorization
CHAIN_AUX_TO_OUTPUTS = (("U", "V"), ("X", "S"), ("Y1", "Y3"))
CHAIN_DEGRADED = (("S", "X", "Y3"), ("Y1",), ("Y2",))
#: the structural chain of the less-noisy factorization
CHAIN_AUX_TO_OUTPUTS_LN = (("U", "V"), ("X", "S"), ("Y1", "Y2", "Y3"))


def augment_outputs_with_state(j: JointPmf) -> JointPmf:
    """Replace each receiver output Y_k by the pair (Y_k, S).

    The composite axes keep the names Y1, Y2, Y3 with alphabet |Y_k| * |S|
    (index y * |S| + s), so any bounds evaluator runs unchanged on the
    augmented joint.  This models side information revealed to the receivers.
    """
    d = dict(j.axes)
    ns = d["S"]
    sizes = {n: d[n] for n in ("Y1", "Y2", "Y3")}
    order = [j.axis_of(n) for n in JOINT_VARS]
    t = np.transpose(j.tensor, order)
    out = np.zeros(
        (d["U"], d["V"], ns, d["X"], sizes["Y1"] * ns, sizes["Y2"] * ns, sizes["Y3"] * ns)
    )
    for s in range(ns):
        out[:, :, s, :, s::ns, :, :][:, :, :, :, s::ns, :][:, :, :, :, :, s::ns] = t[
            :, :, s, :, :, :, :
        ]
    axes = (
        ("U", d["U"]),
        ("V", d["V"]),
        ("S", ns),
        ("X", d["X"]),
        ("Y1", sizes["Y1"] * ns),
        ("Y2", sizes["Y2"] * ns),
        ("Y3", sizes["Y3"] * ns),
    )
    return JointPmf(out, axes)
