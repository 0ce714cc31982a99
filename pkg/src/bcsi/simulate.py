"""Monte Carlo simulation of the layered binning scheme at desk scale.

The code under test is the achievability construction itself: three nested
random codebooks (cloud, middle, inner), each message bin padded with extra
codewords so the encoder can hunt for one jointly typical with the observed
state sequence, and three typicality decoders, including the indirect
decoder at the weakest receiver that recovers the common message through a
middle-layer codeword without needing that layer's own index to be right.

Everything is exhaustive-search typicality decoding, so blocklengths are
small (n <= 24) and codebook layers are capped.  Robust typicality
(per-cell relative deviation) is used throughout; it is closed under
marginalization, which both keeps zero-probability symbols exact and lets
the decoders prune candidate subtrees without changing their answers.

Naming note: message/bin variables follow the multilevel role order
(cloud, middle, inner).  For the less-noisy model the same layers carry the
per-receiver messages (m3, m2, m1); ``SimConfig.rates`` stays in the user
order (R0, R11, R12) or (R1, R2, R3) and is mapped internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probability import (
    AuxFactorization,
    ChannelSpec,
    JointPmf,
    ValidationError,
    build_joint,
    marginalize,
)

#: blocklength cap; typicality decoding enumerates codebooks exhaustively
MAX_BLOCKLENGTH = 24
#: codewords per layer (messages x bin depth)
MAX_LAYER_WORDS = 10**6
#: total codewords materialized across the nested layers
MAX_TOTAL_WORDS = 10**7


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``rates``/``bin_rates`` are bits per channel use, ordered (R0, R11, R12)
    for the multilevel scheme or (R1, R2, R3) for the less-noisy scheme.
    Layer sizes are 2^(n * rate) rounded to the nearest integer, minimum 1.
    """

    n: int
    rates: tuple[float, float, float]
    bin_rates: tuple[float, float, float]
    eps: float
    trials: int
    codebook_redraws: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.n <= MAX_BLOCKLENGTH):
            raise ValidationError(f"blocklength must be in [1, {MAX_BLOCKLENGTH}]")
        if len(self.rates) != 3 or len(self.bin_rates) != 3:
            raise ValidationError("rates and bin_rates must be triples")
        if any(r < 0 for r in self.rates) or any(r < 0 for r in self.bin_rates):
            raise ValidationError("rates must be nonnegative")
        if self.eps <= 0:
            raise ValidationError("eps must be positive")
        if self.trials < 1 or self.codebook_redraws < 1:
            raise ValidationError("trials and codebook_redraws must be >= 1")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "bin_rates", tuple(float(r) for r in self.bin_rates))

    def layer_rates(self, model: str) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """(message rates, bin rates) in layer order (cloud, middle, inner)."""
        if model == "multilevel":
            return self.rates, self.bin_rates
        r = self.rates
        b = self.bin_rates
        return (r[2], r[1], r[0]), (b[2], b[1], b[0])

    def layer_sizes(self, model: str) -> tuple[tuple[int, int], ...]:
        """((messages, bin depth)) per layer, size caps enforced."""
        rates, bins = self.layer_rates(model)
        out = []
        for rate, bin_rate in zip(rates, bins):
            m = max(1, round(2.0 ** (self.n * rate)))
            d = max(1, round(2.0 ** (self.n * bin_rate)))
            if m * d > MAX_LAYER_WORDS:
                raise ValidationError(
                    f"layer would hold {m * d} codewords, over the {MAX_LAYER_WORDS} cap"
                )
            out.append((m, d))
        (m0, d0), (m1, d1), (m2, d2) = out
        total = m0 * d0 * (1 + m1 * d1 * (1 + m2 * d2))
        if total > MAX_TOTAL_WORDS:
            raise ValidationError(
                f"codebook tree would materialize {total} words, over the "
                f"{MAX_TOTAL_WORDS} cap"
            )
        return tuple(out)


@dataclass(frozen=True)
class Codebook:
    """Nested random codebooks; word index = bin_index * messages + message."""

    model: str
    u_words: np.ndarray  # (N0, n)
    v_words: np.ndarray  # (N0, N1, n)
    x_words: np.ndarray  # (N0, N1, N2, n)
    msg_sizes: tuple[int, int, int]
    bin_sizes: tuple[int, int, int]

    @property
    def n(self) -> int:
        return self.u_words.shape[1]


@dataclass(frozen=True)
class EncodingFailure:
    """No jointly typical codeword in the target bin at this layer
    (0 = cloud, 1 = middle, 2 = inner)."""

    layer: int


@dataclass(frozen=True)
class RedrawStats:
    redraw: int
    trials: int
    encoder_failures: int
    err_y1: int
    err_y2: int
    err_y3: int
    err_any: int

    def rates(self) -> tuple[float, float, float, float, float]:
        t = self.trials
        return (
            self.encoder_failures / t,
            self.err_y1 / t,
            self.err_y2 / t,
            self.err_y3 / t,
            self.err_any / t,
        )


@dataclass(frozen=True)
class SimResult:
    encoder_failure_rate: float
    err_y1: float
    err_y2: float
    err_y3: float
    err_any: float
    trials_run: int
    per_redraw: tuple[RedrawStats, ...]


def _empirical_ok(
    counts: np.ndarray, p_flat: np.ndarray, n: int, eps: float
) -> np.ndarray:
    """Robust typicality test on count matrices: rows of symbol-tuple counts."""
    emp = counts / n
    return np.all(np.abs(emp - p_flat) <= eps * p_flat, axis=-1)


def _rows_typical(
    seqs: list[np.ndarray], sizes: list[int], p_flat: np.ndarray, eps: float
) -> np.ndarray:
    """Vectorized typicality over a batch of candidate rows.

    ``seqs`` are integer arrays broadcastable to a common (..., n) shape, one
    per variable; ``p_flat`` is the flattened reference joint over those
    variables in the same order.
    """
    code = None
    for a, k in zip(seqs, sizes):
        code = a.astype(np.int64) if code is None else code * k + a
    code = np.broadcast_to(code, np.broadcast_shapes(*(np.shape(s) for s in seqs)))
    lead = code.shape[:-1]
    n = code.shape[-1]
    ncells = int(np.prod(sizes))
    flat = code.reshape(-1, n)
    offsets = np.arange(flat.shape[0], dtype=np.int64)[:, None] * ncells
    counts = np.bincount(
        (flat + offsets).ravel(), minlength=flat.shape[0] * ncells
    ).reshape(flat.shape[0], ncells)
    return _empirical_ok(counts, p_flat, n, eps).reshape(lead)


def is_jointly_typical(
    seqs,
    j: JointPmf,
    eps: float,
    vars: tuple[str, ...] | None = None,
) -> bool:
    """Robust joint typicality: every cell's empirical frequency is within
    a relative eps of the reference probability (zero-probability cells must
    not occur).

    ``seqs`` are matched positionally to ``vars`` (default: all axes of the
    joint in order); the reference is the corresponding marginal of ``j``.
    """
    names = tuple(vars) if vars is not None else j.names
    if len(seqs) != len(names):
        raise ValidationError(f"{len(seqs)} sequences for {len(names)} variables")
    m = marginalize(j, names)
    perm = [m.names.index(v) for v in names]
    table = np.transpose(m.tensor, perm)
    arrs = [np.asarray(s, dtype=np.int64) for s in seqs]
    n = arrs[0].shape[-1]
    for a, (name, k) in zip(arrs, zip(names, table.shape)):
        if a.ndim != 1 or a.shape[0] != n:
            raise ValidationError("sequences must be 1-D and of equal length")
        if a.min() < 0 or a.max() >= k:
            raise ValidationError(f"sequence for {name} leaves the alphabet [0, {k})")
    ok = _rows_typical(
        [a[None, :] for a in arrs], list(table.shape), table.reshape(-1), eps
    )
    return bool(ok[0])


def _sample_rows(rng: np.random.Generator, rows: np.ndarray) -> np.ndarray:
    """One categorical draw per row of a (..., k) probability array."""
    cdf = np.cumsum(rows, axis=-1)
    r = rng.random(rows.shape[:-1])
    return np.minimum((r[..., None] > cdf).sum(axis=-1), rows.shape[-1] - 1)


def generate_codebooks(
    cfg: SimConfig, ch: ChannelSpec, aux: AuxFactorization, redraw_index: int = 0
) -> Codebook:
    """Draw the nested codebooks for one redraw, deterministically from
    (seed, redraw_index).

    Cloud words are i.i.d. from the auxiliary-induced marginal p(u); each
    middle word is drawn symbol-by-symbol from p(v|u) along its parent; each
    inner word from p(x|v).
    """
    sizes = cfg.layer_sizes(ch.model)
    (m0, d0), (m1, d1), (m2, d2) = sizes
    n = cfg.n
    # layer marginals from the factor chain p(s) p(u|s) p(v|u,s) p(x|v,s)
    t = np.einsum(
        "s,su,usv,vsx->uvsx",
        ch.p_s.probs,
        aux.p_u_given_s.table,
        aux.p_v_given_us.table,
        aux.p_x_given_vs.table,
    )
    p_u = t.sum(axis=(1, 2, 3))
    p_uv = t.sum(axis=(2, 3))
    p_vx = t.sum(axis=(0, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        p_v_given_u = np.where(p_u[:, None] > 0, p_uv / p_u[:, None], 1.0 / t.shape[1])
        p_v = p_uv.sum(axis=0)
        p_x_given_v = np.where(p_v[:, None] > 0, p_vx / p_v[:, None], 1.0 / t.shape[3])
    rng = np.random.default_rng((cfg.seed, 101, redraw_index))
    n0, n1, n2 = m0 * d0, m1 * d1, m2 * d2
    small = np.uint8 if max(t.shape) < 256 else np.int64
    u_words = _sample_rows(rng, np.broadcast_to(p_u, (n0, n, p_u.size))).astype(small)
    # children are drawn per parent symbol; chunk over parents to bound the
    # temporary probability tensors on large trees
    v_words = np.empty((n0, n1, n), dtype=small)
    chunk = max(1, 2**22 // max(1, n1 * n))
    for lo in range(0, n0, chunk):
        hi = min(lo + chunk, n0)
        rows = p_v_given_u[u_words[lo:hi]][:, None, :, :].repeat(n1, axis=1)
        v_words[lo:hi] = _sample_rows(rng, rows)
    x_words = np.empty((n0, n1, n2, n), dtype=small)
    chunk = max(1, 2**22 // max(1, n1 * n2 * n))
    for lo in range(0, n0, chunk):
        hi = min(lo + chunk, n0)
        rows = p_x_given_v[v_words[lo:hi]][:, :, None, :, :].repeat(n2, axis=2)
        x_words[lo:hi] = _sample_rows(rng, rows)
    return Codebook(
        model=ch.model,
        u_words=u_words,
        v_words=v_words,
        x_words=x_words,
        msg_sizes=(m0, m1, m2),
        bin_sizes=(d0, d1, d2),
    )


class _TypicalityTables:
    """Flattened marginal tables for every tuple the scheme tests."""

    def __init__(self, j: JointPmf):
        self.sizes = dict(j.axes)

        def table(*names: str) -> tuple[list[int], np.ndarray]:
            m = marginalize(j, names)
            perm = [m.names.index(v) for v in names]
            t = np.transpose(m.tensor, perm)
            return [self.sizes[v] for v in names], t.reshape(-1)

        self.us = table("U", "S")
        self.uvs = table("U", "V", "S")
        self.uvxs = table("U", "V", "X", "S")
        self.u_y1 = table("U", "Y1")
        self.uv_y1 = table("U", "V", "Y1")
        self.uvx_y1 = table("U", "V", "X", "Y1")
        self.u_y2 = table("U", "Y2")
        self.uv_y2 = table("U", "V", "Y2")
        self.u_y3 = table("U", "Y3")
        self.uv_y3 = table("U", "V", "Y3")


def gp_encode(
    cb: Codebook,
    s_seq: np.ndarray,
    messages: tuple[int, int, int],
    j: JointPmf,
    eps: float,
):
    """Binning encoder: in each layer's message bin, pick the lowest-index
    codeword jointly typical with the state (and the chosen parents).

    Returns the inner-layer channel input sequence, or
    :class:`EncodingFailure` naming the first layer whose bin holds no
    typical candidate.
    """
    return _encode(cb, _TypicalityTables(j), np.asarray(s_seq), messages, eps)


def _encode(cb: Codebook, tabs: _TypicalityTables, s_seq, messages, eps):
    m0, m1, m2 = messages
    sz = cb.msg_sizes
    if not (0 <= m0 < sz[0] and 0 <= m1 < sz[1] and 0 <= m2 < sz[2]):
        raise ValidationError(f"messages {messages} outside ranges {sz}")
    s_row = s_seq[None, :]
    u_bin = cb.u_words[m0 :: sz[0]]
    ok = _rows_typical([u_bin, s_row], *tabs.us, eps)
    if not ok.any():
        return EncodingFailure(0)
    b0 = int(np.argmax(ok))
    i0 = b0 * sz[0] + m0
    u = cb.u_words[i0]
    v_bin = cb.v_words[i0, m1 :: sz[1]]
    ok = _rows_typical([u[None, :], v_bin, s_row], *tabs.uvs, eps)
    if not ok.any():
        return EncodingFailure(1)
    b1 = int(np.argmax(ok))
    i1 = b1 * sz[1] + m1
    v = cb.v_words[i0, i1]
    x_bin = cb.x_words[i0, i1, m2 :: sz[2]]
    ok = _rows_typical([u[None, :], v[None, :], x_bin, s_row], *tabs.uvxs, eps)
    if not ok.any():
        return EncodingFailure(2)
    b2 = int(np.argmax(ok))
    return cb.x_words[i0, i1, b2 * sz[2] + m2].copy()


def decode(
    cb: Codebook,
    receiver: str,
    y_seq: np.ndarray,
    j: JointPmf,
    eps: float,
):
    """Typicality decoder for one receiver; None signals a failure
    (no candidate message, or more than one).

    Multilevel roles: Y2 scans the cloud layer for its unique common message;
    Y3 decodes the common message indirectly through any typical middle
    word; Y1 needs the unique full message triple.  Less-noisy roles: each
    receiver k returns its own message from layer k, tolerating wrong
    ancestor messages that still produce a typical tuple.
    """
    return _decode(cb, _TypicalityTables(j), receiver, np.asarray(y_seq), eps)


def _decode(cb: Codebook, tabs: _TypicalityTables, receiver: str, y, eps: float):
    if receiver not in ("Y1", "Y2", "Y3"):
        raise ValidationError(f"unknown receiver {receiver!r}")
    m_sz = cb.msg_sizes
    y_row = y[None, :]
    pair_tab = {"Y1": tabs.u_y1, "Y2": tabs.u_y2, "Y3": tabs.u_y3}[receiver]
    u_ok = _rows_typical([cb.u_words, y_row], *pair_tab, eps)

    if (cb.model, receiver) in (("multilevel", "Y2"), ("less_noisy", "Y3")):
        hits = {int(i % m_sz[0]) for i in np.flatnonzero(u_ok)}
        return (hits.pop(),) if len(hits) == 1 else None

    tri_tab = {"Y1": tabs.uv_y1, "Y2": tabs.uv_y2, "Y3": tabs.uv_y3}[receiver]
    if (cb.model, receiver) in (("multilevel", "Y3"), ("less_noisy", "Y2")):
        hits = set()
        for i0 in np.flatnonzero(u_ok):
            ok = _rows_typical(
                [cb.u_words[i0][None, :], cb.v_words[i0], y_row], *tri_tab, eps
            )
            if ok.any():
                if cb.model == "multilevel":
                    hits.add(int(i0 % m_sz[0]))  # common message, middle index free
                else:
                    hits.update(int(i1 % m_sz[1]) for i1 in np.flatnonzero(ok))
        return (hits.pop(),) if len(hits) == 1 else None

    # full decoder at Y1
    hits = set()
    for i0 in np.flatnonzero(u_ok):
        u = cb.u_words[i0][None, :]
        ok1 = _rows_typical([u, cb.v_words[i0], y_row], *tri_tab, eps)
        for i1 in np.flatnonzero(ok1):
            ok2 = _rows_typical(
                [u, cb.v_words[i0, i1][None, :], cb.x_words[i0, i1], y_row],
                *tabs.uvx_y1,
                eps,
            )
            for i2 in np.flatnonzero(ok2):
                if cb.model == "multilevel":
                    hits.add(
                        (int(i0 % m_sz[0]), int(i1 % m_sz[1]), int(i2 % m_sz[2]))
                    )
                else:
                    hits.add((int(i2 % m_sz[2]),))
    return hits.pop() if len(hits) == 1 else None


def _sample_channel(
    rng: np.random.Generator, ch: ChannelSpec, x: np.ndarray, s: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sizes = ch.sizes
    if ch.model == "multilevel":
        rows = ch.main.table[x, s].reshape(len(x), -1)
        flat = _sample_rows(rng, rows)
        y1, y3 = flat // sizes["Y3"], flat % sizes["Y3"]
        y2 = _sample_rows(rng, ch.degrading.table[y1])
        return y1, y2, y3
    rows = ch.main.table[x, s].reshape(len(x), -1)
    flat = _sample_rows(rng, rows)
    y3 = flat % sizes["Y3"]
    rest = flat // sizes["Y3"]
    y2 = rest % sizes["Y2"]
    y1 = rest // sizes["Y2"]
    return y1, y2, y3


def run_trials(cfg: SimConfig, ch: ChannelSpec, aux: AuxFactorization) -> SimResult:
    """Full Monte Carlo: fresh codebooks per redraw, then per trial draw the
    state i.i.d., pick uniform messages, encode, push the inner codeword
    through the channel, and decode at all three receivers.

    Encoding failures count as errors at every receiver.  All randomness is
    derived from (seed, redraw, trial), so results are reproducible and
    schedule-independent.
    """
    j = build_joint(ch, aux)
    tabs = _TypicalityTables(j)
    ns = ch.sizes["S"]
    per_redraw = []
    totals = np.zeros(5, dtype=np.int64)
    for redraw in range(cfg.codebook_redraws):
        cb = generate_codebooks(cfg, ch, aux, redraw)
        m_sz = cb.msg_sizes
        counts = np.zeros(5, dtype=np.int64)  # enc, y1, y2, y3, any
        for trial in range(cfg.trials):
            rng = np.random.default_rng((cfg.seed, 202, redraw, trial))
            s = _sample_rows(rng, np.broadcast_to(ch.p_s.probs, (cfg.n, ns)))
            msgs = tuple(int(rng.integers(m)) for m in m_sz)
            sent = _encode(cb, tabs, s, msgs, cfg.eps)
            if isinstance(sent, EncodingFailure):
                counts += 1
                continue
            y1, y2, y3 = _sample_channel(rng, ch, sent, s)
            if cb.model == "multilevel":
                want = {"Y1": (msgs[0], msgs[1], msgs[2]), "Y2": (msgs[0],), "Y3": (msgs[0],)}
            else:
                want = {"Y1": (msgs[2],), "Y2": (msgs[1],), "Y3": (msgs[0],)}
            errs = []
            for rec, yk in (("Y1", y1), ("Y2", y2), ("Y3", y3)):
                got = _decode(cb, tabs, rec, yk, cfg.eps)
                errs.append(got != want[rec])
            counts[1:4] += np.array(errs, dtype=np.int64)
            counts[4] += int(any(errs))
        per_redraw.append(
            RedrawStats(
                redraw=redraw,
                trials=cfg.trials,
                encoder_failures=int(counts[0]),
                err_y1=int(counts[1]),
                err_y2=int(counts[2]),
                err_y3=int(counts[3]),
                err_any=int(counts[4]),
            )
        )
        totals += counts
    trials_run = cfg.trials * cfg.codebook_redraws
    return SimResult(
        encoder_failure_rate=float(totals[0] / trials_run),
        err_y1=float(totals[1] / trials_run),
        err_y2=float(totals[2] / trials_run),
        err_y3=float(totals[3] / trials_run),
        err_any=float(totals[4] / trials_run),
        trials_run=trials_run,
        per_redraw=tuple(per_redraw),
    )
