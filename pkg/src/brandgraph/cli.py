"""``brandgraph`` command-line driver.

Exit codes: 0 success, 1 data error, 2 I/O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ConfigError, RunConfig, load_config
from .errors import BrandgraphError, DatasetError, MissingFile, StageError
from .graph import build_engagement_graph
from .ingest import dataset_stats, parse_page_dataset
from .layout import LayoutParams, forceatlas2, recent_post_subgraph, render_svg
from .report import analyze_page, compare_pages, write_comparison, write_page_report
from .synth import PRESETS, PlantedSpec, synth_planted, synth_scaled, write_synthetic

EXIT_OK, EXIT_DATA, EXIT_IO, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _color(text: str, code: str) -> str:
    if os.environ.get("BRANDGRAPH_NO_COLOR") is not None or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _fail(message: str) -> None:
    print(_color("error:", "31") + " " + message, file=sys.stderr)


def _kind_weight(text: str) -> tuple[str, float]:
    kind, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KIND=WEIGHT, got {text!r}")
    try:
        return kind.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"weight for {kind!r} is not a number") from None


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--resolution", type=float)
    p.add_argument("--kind-weight", type=_kind_weight, action="append", metavar="KIND=W")
    p.add_argument("--top-k", type=int)
    p.add_argument("--mask", action="store_true", default=None, help="replace user ids by salted hashes")
    p.add_argument("--mask-salt")
    p.add_argument("--lexicon")
    p.add_argument("--layout-posts", type=int, help="posts kept for the layout (0 disables it)")
    p.add_argument("--iterations", type=int, help="ForceAtlas2 iterations")
    p.add_argument("--user-projection", action="store_true", default=None)


def _layout_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scaling", type=float)
    p.add_argument("--gravity", type=float)
    p.add_argument("--linlog", action="store_true", default=None)
    p.add_argument("--approximate", action="store_true", default=None)


def _run_config(args, inputs) -> RunConfig:
    overrides = {
        "inputs": list(inputs),
        "output": args.output,
        "seed": args.seed,
        "resolution": args.resolution,
        "top_k": args.top_k,
        "mask": args.mask,
        "mask_salt": args.mask_salt,
        "lexicon": args.lexicon,
        "layout_posts": args.layout_posts,
        "user_projection": args.user_projection,
        "layout.iterations": args.iterations,
        "layout.scaling": args.scaling,
        "layout.gravity": args.gravity,
        "layout.linlog": args.linlog,
        "layout.approximate": args.approximate,
    }
    if args.kind_weight:
        overrides["kind_weights"] = dict(args.kind_weight)
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="brandgraph", description="Brand-page engagement graph analytics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="parse a dataset directory and report problems")
    p.add_argument("path")

    p = sub.add_parser("analyze", help="run the full analysis on one page")
    p.add_argument("path")
    _add_run_flags(p)
    _layout_flags(p)

    p = sub.add_parser("compare", help="analyse two pages and compare them")
    p.add_argument("path_a")
    p.add_argument("path_b")
    _add_run_flags(p)
    _layout_flags(p)

    p = sub.add_parser("layout", help="ForceAtlas2 drawing of the most recent posts")
    p.add_argument("path")
    p.add_argument("-o", "--output", required=True, help="SVG file")
    p.add_argument("--posts", type=int, default=50)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--positions", help="also write node positions as CSV")
    _layout_flags(p)

    p = sub.add_parser("synth", help="write a synthetic dataset with its ground truth")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--preset", choices=sorted(PRESETS), help="exact-count page instead of a planted partition")
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--posts-per-block", type=int, default=10)
    p.add_argument("--users-per-block", type=int, default=25)
    p.add_argument("--p-in", type=float, default=0.9)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--seed", type=int)
    p.add_argument("--page-id")
    return parser


def _cmd_validate(args) -> int:
    ds = parse_page_dataset(args.path)
    s = dataset_stats(ds)
    print(f"ok {ds.page_id}: {s.n_posts} posts, {s.n_users} users, {s.n_events} events, "
          f"{s.total_engagements} engagements")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    config = _run_config(args, [args.path])
    ds = parse_page_dataset(args.path)
    root = write_page_report(analyze_page(ds, config), config.output)
    print(f"wrote {root}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    config = _run_config(args, [args.path_a, args.path_b])
    a = analyze_page(parse_page_dataset(args.path_a), config)
    b = analyze_page(parse_page_dataset(args.path_b), config)
    for analysis in (a, b):
        write_page_report(analysis, config.output)
    root = write_comparison(compare_pages(a, b), config.output)
    print(f"wrote {root}")
    return EXIT_OK


def _cmd_layout(args) -> int:
    if args.posts < 1:
        raise UsageError("--posts must be at least 1")
    fields = {"iterations": args.iterations, "seed": args.seed, "scaling": args.scaling,
              "gravity": args.gravity, "linlog": args.linlog, "approximate": args.approximate}
    try:
        params = LayoutParams(**{k: v for k, v in fields.items() if v is not None})
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = parse_page_dataset(args.path)
    g = recent_post_subgraph(build_engagement_graph(ds), ds, args.posts)
    result = forceatlas2(g, params)
    render_svg(g, result, path=args.output)
    if args.positions:
        result.write_csv(args.positions)
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.preset:
        spec = PRESETS[args.preset]
        changes = {k: v for k, v in (("seed", args.seed), ("page_id", args.page_id)) if v is not None}
        if changes:
            spec = dataclasses.replace(spec, **changes)
        ds, truth = synth_scaled(spec)
    else:
        spec = PlantedSpec(
            n_blocks=args.blocks,
            posts_per_block=args.posts_per_block,
            users_per_block=args.users_per_block,
            p_in=args.p_in,
            p_out=args.p_out,
            seed=args.seed if args.seed is not None else 0,
            page_id=args.page_id or "planted",
        )
        ds, truth = synth_planted(spec)
    write_synthetic(ds, truth, args.output)
    print(f"wrote {args.output}: {truth.n_posts} posts, {truth.n_users} users, {truth.n_events} events")
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "analyze": _cmd_analyze,
    "compare": _cmd_compare,
    "layout": _cmd_layout,
    "synth": _cmd_synth,
}


def _exit_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _exit_for(exc.cause)
    if isinstance(exc, MissingFile) or isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_DATA


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        _fail(str(exc))
        return EXIT_USAGE
    except ConfigError as exc:
        _fail(f"config: {exc}")
        return EXIT_USAGE
    except DatasetError as exc:
        _fail(f"{type(exc).__name__}: {exc}")
        return _exit_for(exc)
    except (BrandgraphError, ValueError) as exc:
        _fail(str(exc))
        return _exit_for(exc)
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
