"""Command-line surface: validate spec files, evaluate and search rate
regions, run the grid oracle, check channel orderings, print the derived
inequality systems, and run the coding simulator.

All output is deterministic given the flags (including seeds).  Exit codes:
0 on success, 2 on validation/usage errors, 1 on internal errors.
"""

from __future__ import annotations

import argparse
import sys

from . import fm
from .ordering import OrderKind, is_degraded, is_less_noisy
from .probability import ValidationError, build_joint
from .regions import (
    RateBoundsMultilevel,
    multilevel_bounds,
    less_noisy_bounds,
    receiver_si_bounds,
    polytope_from_bounds,
)
from .search import SearchConfig, default_cards, grid_enumerate, search_region
from .simulate import SimConfig, run_trials
from .specfile import parse_aux_spec, parse_channel_spec

_BOUND_FNS = {1: multilevel_bounds, 2: less_noisy_bounds, 3: receiver_si_bounds}
_PAIRS = {"y1y2": ("Y1", "Y2"), "y2y3": ("Y2", "Y3"), "y1y3": ("Y1", "Y3")}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _rate_header(theorem: int) -> str:
    return "R0,R1" if theorem == 1 else "R1,R2,R3"


def _write_vertices(out, theorem: int, vertices) -> None:
    out.write(_rate_header(theorem) + "\n")
    for v in vertices:
        out.write(",".join(_fmt(x) for x in v) + "\n")


def _triple(text: str, flag: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"{flag} needs three comma-separated values")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise ValidationError(f"{flag}: non-numeric entry in {text!r}") from None


def cmd_validate(args) -> int:
    import yaml

    with open(args.file, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if isinstance(doc, dict) and "card_u" in doc:
        ch = parse_channel_spec(args.channel) if args.channel else None
        parse_aux_spec(args.file, ch)
        print(f"{args.file}: valid auxiliary spec")
    else:
        parse_channel_spec(args.file)
        print(f"{args.file}: valid channel spec")
    return 0


def cmd_eval_region(args) -> int:
    ch = parse_channel_spec(args.channel)
    aux = parse_aux_spec(args.aux, ch)
    j = build_joint(ch, aux)
    bounds = _BOUND_FNS[args.theorem](j)
    if isinstance(bounds, RateBoundsMultilevel):
        print(f"r0_max {_fmt(bounds.r0_max)}")
        print(f"r1_max {_fmt(bounds.r1_max)}")
        print(f"sum_max {_fmt(bounds.sum_max)}")
    else:
        print(f"r1_max {_fmt(bounds.r1_max)}")
        print(f"r2_max {_fmt(bounds.r2_max)}")
        print(f"r3_max {_fmt(bounds.r3_max)}")
    _write_vertices(sys.stdout, args.theorem, polytope_from_bounds(bounds).vertices)
    return 0


def cmd_search_region(args) -> int:
    ch = parse_channel_spec(args.channel)
    cu, cv = default_cards(ch)
    cfg = SearchConfig(
        card_u=args.card_u or cu,
        card_v=args.card_v or cv,
        restarts=args.restarts,
        iterations=args.iterations,
        seed=args.seed,
    )
    region = search_region(ch, args.theorem, cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        _write_vertices(fh, args.theorem, region.vertices)
    print(f"wrote {len(region.vertices)} vertices to {args.out}")
    return 0


def cmd_grid_oracle(args) -> int:
    ch = parse_channel_spec(args.channel)
    cu, cv = default_cards(ch)
    rows = grid_enumerate(
        ch, args.theorem, args.grid, (args.card_u or cu, args.card_v or cv)
    )
    header = (
        "r0_max,r1_max,sum_max" if args.theorem == 1 else "r1_max,r2_max,r3_max"
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    print(f"wrote {len(rows)} grid rows to {args.out}")
    return 0


def cmd_check_order(args) -> int:
    ch = parse_channel_spec(args.channel)
    strong, weak = _PAIRS[args.pair]
    if args.mode == "degraded":
        verdict = is_degraded(
            ch.receiver_kernel(strong), ch.receiver_kernel(weak), tol=args.tol
        )
    else:
        verdict = is_less_noisy(
            ch, (strong, weak), samples=args.samples, card_u=args.card_u, seed=args.seed
        )
    if verdict.kind is OrderKind.VIOLATED:
        w = verdict.witness
        print(
            f"Violated state={w.state} margin={_fmt(w.margin)} "
            f"samples_checked={verdict.samples_checked}"
        )
    elif verdict.kind is OrderKind.HOLDS:
        print("Holds")
    else:
        print(f"ConsistentUpTo samples={verdict.samples_checked}")
    return 0


def cmd_derive_fm(args) -> int:
    print(fm.derived_system(args.theorem).render())
    return 0


def cmd_simulate(args) -> int:
    ch = parse_channel_spec(args.channel)
    aux = parse_aux_spec(args.aux, ch)
    cfg = SimConfig(
        n=args.n,
        rates=_triple(args.rates, "--rates"),
        bin_rates=_triple(args.bin_rates, "--bin-rates"),
        eps=args.eps,
        trials=args.trials,
        codebook_redraws=args.redraws,
        seed=args.seed,
    )
    result = run_trials(cfg, ch, aux)
    lines = ["redraw,enc_fail,err_y1,err_y2,err_y3"]
    for r in result.per_redraw:
        enc, e1, e2, e3, _ = r.rates()
        lines.append(f"{r.redraw},{_fmt(enc)},{_fmt(e1)},{_fmt(e2)},{_fmt(e3)}")
    lines.append(
        "all,"
        + ",".join(
            _fmt(x)
            for x in (
                result.encoder_failure_rate,
                result.err_y1,
                result.err_y2,
                result.err_y3,
            )
        )
    )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(result.per_redraw) + 1} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bcsi",
        description=(
            "Rate regions, exact Fourier-Motzkin re-derivation, channel-order "
            "checks, and Monte Carlo coding simulation for three-receiver "
            "broadcast channels with transmitter side information."
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("validate", help="validate a channel or auxiliary spec file")
    q.add_argument("file")
    q.add_argument("--channel", help="channel file to cross-check an auxiliary spec")
    q.set_defaults(fn=cmd_validate)

    q = sub.add_parser("eval-region", help="evaluate rate bounds for a fixed auxiliary")
    q.add_argument("--channel", required=True)
    q.add_argument("--aux", required=True)
    q.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    q.set_defaults(fn=cmd_eval_region)

    q = sub.add_parser("search-region", help="trace the region boundary by search")
    q.add_argument("--channel", required=True)
    q.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    q.add_argument("--card-u", type=int, default=0)
    q.add_argument("--card-v", type=int, default=0)
    q.add_argument("--restarts", type=int, default=50)
    q.add_argument("--iterations", type=int, default=60)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_search_region)

    q = sub.add_parser("grid-oracle", help="exhaustive bounds over a simplex grid")
    q.add_argument("--channel", required=True)
    q.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    q.add_argument("--grid", type=int, required=True, help="points per simplex axis")
    q.add_argument("--card-u", type=int, default=0)
    q.add_argument("--card-v", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_grid_oracle)

    q = sub.add_parser("check-order", help="degradedness / less-noisy order checks")
    q.add_argument("--channel", required=True)
    q.add_argument("--pair", choices=sorted(_PAIRS), required=True)
    q.add_argument("--mode", choices=("less-noisy", "degraded"), default="less-noisy")
    q.add_argument("--samples", type=int, default=10_000)
    q.add_argument("--card-u", type=int, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--tol", type=float, default=1e-9)
    q.set_defaults(fn=cmd_check_order)

    q = sub.add_parser("derive-fm", help="print the eliminated inequality system")
    q.add_argument("--theorem", type=int, choices=(1, 2), required=True)
    q.set_defaults(fn=cmd_derive_fm)

    q = sub.add_parser("simulate", help="Monte Carlo simulation of the coding scheme")
    q.add_argument("--channel", required=True)
    q.add_argument("--aux", required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--rates", required=True, help="R0,R11,R12 or R1,R2,R3")
    q.add_argument("--bin-rates", required=True, dest="bin_rates")
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--trials", type=int, required=True)
    q.add_argument("--redraws", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default=None)
    q.set_defaults(fn=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - internal errors
        print(f"internal error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
