"""Extractor command line.

  fnextract extract --framenet DIR --encoder NAME --out FILE [--parser NAME]
  fnextract split   --in FILE --seed N --out-prefix P [--folds 3]

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

from .depparse import get_parser
from .encoders import get_encoder
from .extract import extract, write_stats
from .framenet import FrameNetError
from .split import SplitError, split_and_emit


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="fnextract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ext = sub.add_parser("extract", help="extract argument instances from a FrameNet release")
    p_ext.add_argument("--framenet", required=True, help="path to the fndata-1.7 directory")
    p_ext.add_argument("--encoder", required=True,
                       help="'hash:<dim>', 'hf:<model-or-path>', or a model name")
    p_ext.add_argument("--parser", default="heuristic",
                       help="'heuristic' or 'stanza[:lang]' (default: heuristic)")
    p_ext.add_argument("--out", required=True, help="interchange file to write")

    p_split = sub.add_parser("split", help="frame-disjoint fold split of an interchange file")
    p_split.add_argument("--in", dest="in_path", required=True)
    p_split.add_argument("--seed", type=int, default=7)
    p_split.add_argument("--out-prefix", required=True)
    p_split.add_argument("--folds", type=int, default=3)

    return parser


def _cmd_extract(args) -> int:
    encoder = get_encoder(args.encoder)
    parser_impl = get_parser(args.parser)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    stats = extract(args.framenet, encoder, parser_impl, args.out)
    write_stats(stats, str(args.out) + ".stats.json")
    summary = asdict(stats)
    print(f"wrote {args.out}: "
          f"{summary['n_frames']} frames, {summary['n_fes']} FEs, "
          f"{summary['n_examples']} examples, {summary['n_instances']} instances")
    dropped = {k: v for k, v in summary.items()
               if k.startswith(("skipped", "dropped", "truncated")) and v}
    if dropped:
        print(f"filtered: {dropped}")
    return 0


def _cmd_split(args) -> int:
    paths = split_and_emit(args.in_path, args.seed, args.out_prefix, args.folds)
    print("wrote " + ", ".join(paths))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "extract":
            return _cmd_extract(args)
        if args.command == "split":
            return _cmd_split(args)
        parser.error(f"unknown command {args.command!r}")
    except (FrameNetError, SplitError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
