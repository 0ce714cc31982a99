"""YAML channel and auxiliary spec files.

One human-writable format carries all inputs; CSV is used only for outputs.
Channel files:

    model: multilevel                # or less_noisy
    alphabets: {X: 2, S: 2, Y1: 2, Y2: 3, Y3: 2}
    p_s: [0.5, 0.5]
    p_main: ...                      # nested [x][s][y1][y3] (multilevel)
                                     # or [x][s][y1][y2][y3] (less_noisy)
    p_y2_given_y1: ...               # nested [y1][y2], multilevel only

Auxiliary files:

    card_u: 2
    card_v: 2
    p_u_given_s: ...                 # [s][u]
    p_v_given_us: ...                # [u][s][v]
    p_x_given_vs: ...                # [v][s][x]

Unknown keys are rejected; every probability row must sum to 1 within 1e-9,
and error messages carry the offending key and row coordinates.
"""

from __future__ import annotations

import numpy as np
import yaml

from .probability import (
    AuxFactorization,
    ChannelSpec,
    Kernel,
    Pmf,
    SUM_TOL,
    ValidationError,
)

CHANNEL_KEYS = {"model", "alphabets", "p_s", "p_main", "p_y2_given_y1"}
AUX_KEYS = {"card_u", "card_v", "p_u_given_s", "p_v_given_us", "p_x_given_vs"}
ALPHABET_NAMES = ("X", "S", "Y1", "Y2", "Y3")


def _load_document(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as e:
        raise ValidationError(f"cannot read {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ValidationError(f"{path}: not well-formed YAML: {e}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be a mapping")
    return doc


def _as_array(doc: dict, key: str, shape: tuple[int, ...], what: str) -> np.ndarray:
    if key not in doc:
        raise ValidationError(f"missing key {key!r}")
    try:
        arr = np.asarray(doc[key], dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError(f"{key}: not a numeric array") from None
    if arr.shape != shape:
        raise ValidationError(f"{key}: shape {arr.shape} does not match {shape} ({what})")
    return arr


def _check_rows(arr: np.ndarray, key: str, row_names: tuple[str, ...]) -> None:
    """Row-wise stochasticity check with coordinates in the message."""
    lead = arr.shape[: len(row_names)]
    rows = arr.reshape(lead + (-1,))
    sums = rows.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > SUM_TOL)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        coord = "".join(f"[{n}={v}]" for n, v in zip(row_names, idx))
        raise ValidationError(
            f"{key}{coord}: row sums to {float(sums[tuple(bad[0])]):.12g}, not 1"
        )
    if np.any(arr < 0):
        raise ValidationError(f"{key}: negative probability entries")


def parse_channel_spec(path: str) -> ChannelSpec:
    """Parse and validate a channel spec file."""
    doc = _load_document(path)
    unknown = set(doc) - CHANNEL_KEYS
    if unknown:
        raise ValidationError(f"{path}: unknown keys {sorted(unknown)}")
    model = doc.get("model")
    if model not in ("multilevel", "less_noisy"):
        raise ValidationError(f"{path}: model must be multilevel or less_noisy, got {model!r}")
    alpha = doc.get("alphabets")
    if not isinstance(alpha, dict) or set(alpha) != set(ALPHABET_NAMES):
        raise ValidationError(f"{path}: alphabets must give sizes for {ALPHABET_NAMES}")
    sizes = {}
    for k in ALPHABET_NAMES:
        v = alpha[k]
        if not isinstance(v, int) or v < 1:
            raise ValidationError(f"{path}: alphabets[{k}] must be a positive integer")
        sizes[k] = v
    nx, ns = sizes["X"], sizes["S"]
    ny1, ny2, ny3 = sizes["Y1"], sizes["Y2"], sizes["Y3"]
    p_s = _as_array(doc, "p_s", (ns,), "p(s)")
    _check_rows(p_s.reshape(1, ns), "p_s", ())
    if model == "multilevel":
        main = _as_array(doc, "p_main", (nx, ns, ny1, ny3), "p(y1,y3|x,s)")
        _check_rows(main, "p_main", ("x", "s"))
        deg = _as_array(doc, "p_y2_given_y1", (ny1, ny2), "p(y2|y1)")
        _check_rows(deg, "p_y2_given_y1", ("y1",))
        return ChannelSpec(
            "multilevel",
            Pmf(p_s),
            Kernel(main, (("X", nx), ("S", ns)), (("Y1", ny1), ("Y3", ny3))),
            Kernel(deg, (("Y1", ny1),), (("Y2", ny2),)),
        )
    if "p_y2_given_y1" in doc:
        raise ValidationError(f"{path}: p_y2_given_y1 is only valid for the multilevel model")
    main = _as_array(doc, "p_main", (nx, ns, ny1, ny2, ny3), "p(y1,y2,y3|x,s)")
    _check_rows(main, "p_main", ("x", "s"))
    return ChannelSpec(
        "less_noisy",
        Pmf(p_s),
        Kernel(main, (("X", nx), ("S", ns)), (("Y1", ny1), ("Y2", ny2), ("Y3", ny3))),
    )


def parse_aux_spec(path: str, ch: ChannelSpec | None = None) -> AuxFactorization:
    """Parse an auxiliary factorization file; cross-check shapes against a
    channel when one is supplied."""
    doc = _load_document(path)
    unknown = set(doc) - AUX_KEYS
    if unknown:
        raise ValidationError(f"{path}: unknown keys {sorted(unknown)}")
    for k in ("card_u", "card_v"):
        if not isinstance(doc.get(k), int) or doc[k] < 1:
            raise ValidationError(f"{path}: {k} must be a positive integer")
    cu, cv = doc["card_u"], doc["card_v"]
    pu = np.asarray(doc.get("p_u_given_s"), dtype=np.float64)
    if pu.ndim != 2 or pu.shape[1] != cu:
        raise ValidationError(f"{path}: p_u_given_s must be [s][u] with u-size {cu}")
    ns = pu.shape[0]
    pv = _as_array(doc, "p_v_given_us", (cu, ns, cv), "p(v|u,s)")
    px_raw = doc.get("p_x_given_vs")
    px = np.asarray(px_raw, dtype=np.float64)
    if px.shape[:2] != (cv, ns) or px.ndim != 3:
        raise ValidationError(f"{path}: p_x_given_vs must be [v][s][x] with v={cv}, s={ns}")
    _check_rows(pu, "p_u_given_s", ("s",))
    _check_rows(pv, "p_v_given_us", ("u", "s"))
    _check_rows(px, "p_x_given_vs", ("v", "s"))
    aux = AuxFactorization.from_tables(pu, pv, px)
    if ch is not None:
        if ch.sizes["S"] != ns:
            raise ValidationError(
                f"{path}: S alphabet {ns} does not match the channel's {ch.sizes['S']}"
            )
        if px.shape[2] != ch.sizes["X"]:
            raise ValidationError(
                f"{path}: X alphabet {px.shape[2]} does not match the channel's {ch.sizes['X']}"
            )
    return aux


def serialize_channel_spec(ch: ChannelSpec) -> str:
    """Channel spec back to YAML; parse(serialize(parse(f))) == parse(f)."""
    sizes = ch.sizes
    doc = {
        "model": ch.model,
        "alphabets": {k: int(sizes[k]) for k in ALPHABET_NAMES},
        "p_s": ch.p_s.probs.tolist(),
        "p_main": ch.main.table.tolist(),
    }
    if ch.model == "multilevel":
        doc["p_y2_given_y1"] = ch.degrading.table.tolist()
    return yaml.safe_dump(doc, sort_keys=True)


def serialize_aux_spec(aux: AuxFactorization) -> str:
    doc = {
        "card_u": int(aux.card_u),
        "card_v": int(aux.card_v),
        "p_u_given_s": aux.p_u_given_s.table.tolist(),
        "p_v_given_us": aux.p_v_given_us.table.tolist(),
        "p_x_given_vs": aux.p_x_given_vs.table.tolist(),
    }
    return yaml.safe_dump(doc, sort_keys=True)
