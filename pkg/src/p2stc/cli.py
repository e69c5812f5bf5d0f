"""Command-line entry point (``p2stc``)."""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .convcode import ConvCode, encode
from .puncturing import apply_puncture, resolve_matrix

log = logging.getLogger("p2stc")


def _read_bits(path: str | None) -> np.ndarray:
    text = sys.stdin.read() if path in (None, "-") else Path(path).read_text()
    chars = [c for c in text if not c.isspace()]
    bad = sorted(set(chars) - {"0", "1"})
    if bad:
        raise ValueError(f"input may contain only 0/1 and whitespace, found {''.join(bad)!r}")
    return np.array([int(c) for c in chars], dtype=np.uint8)


def cmd_encode(args) -> None:
    code = ConvCode.from_octal(args.code)
    bits = _read_bits(args.input)
    coded = encode(code, bits, terminate=not args.no_terminate)
    if args.puncture:
        coded = apply_puncture(coded, resolve_matrix(args.puncture, code.n_outputs))
    print("".join(map(str, coded.tolist())))


def _load(args):
    from .harness.config import ConfigFile

    cfg = ConfigFile.load(args.config)
    workers = args.workers if args.workers is not None else cfg.extras.get("workers", 1)
    return cfg, int(workers)


def _write_points(points, out: str | None, stem: str, what: str = "ber") -> None:
    from .harness.engine import SimResult
    from .harness.output import emit_outputs, results_to_csv

    if out:
        paths = emit_outputs(SimResult(list(points), {"subcommand": stem, "version": __version__}),
                             out, stem, what)
        print(f"wrote {paths['csv']}", file=sys.stderr)
    else:
        sys.stdout.write(results_to_csv(points))


def cmd_simulate(args) -> None:
    from .harness.engine import SimResult, run_scenario
    from .harness.output import emit_outputs

    cfg, workers = _load(args)
    total = SimResult()
    for sc in cfg.scenarios:
        res = run_scenario(sc, workers=workers)
        total.points.extend(res.points)
        total.metadata.setdefault("scenarios", []).append(res.metadata)
    total.metadata["version"] = __version__
    paths = emit_outputs(total, args.out, what=args.what)
    for p in paths.values():
        print(f"wrote {p}", file=sys.stderr)


def _beta_grid(args, cfg) -> list[float]:
    if args.beta_grid:
        return [float(x) for x in args.beta_grid.split(",")]
    return [float(x) for x in cfg.extras.get("beta_grid", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]


def cmd_sweep_beta(args) -> None:
    from .analysis import sweep_beta

    cfg, workers = _load(args)
    grid = _beta_grid(args, cfg)
    points = []
    for sc in cfg.scenarios:
        frames = args.frames or sc.max_frames
        for i, snr in enumerate(sc.eb_n0_db):
            res = sweep_beta(sc, grid, frames, eb_n0_db=snr, workers=workers, point_index=i)
            points.extend(res.points)
            log.info("%s @ %.2f dB: best beta %g", sc.id, snr, res.best_beta)
    _write_points(points, args.out, "sweep")


def cmd_search_patterns(args) -> None:
    from .analysis import search_patterns

    cfg, workers = _load(args)
    sc = cfg.scenarios[0]
    max_delta = args.max_delta if args.max_delta is not None else cfg.extras.get("max_delta", 3)
    period = cfg.extras.get("period", 10)
    grid = _beta_grid(args, cfg)
    ranked = search_patterns(args.ntx, args.zeros, int(max_delta), sc, grid,
                             frames=args.frames or sc.max_frames, period=int(period), workers=workers)
    _write_points([s.as_point() for s in ranked], args.out, "search")


def cmd_bound(args) -> None:
    from .analysis import diversity_bound

    print(diversity_bound(args.L, args.N, Fraction(args.rate)))


def cmd_plot(args) -> None:
    from .harness.output import plot_csv

    out = plot_csv(args.csv, args.out, args.what)
    print(f"wrote {out}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="p2stc", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="encode a bit string with a convolutional code")
    e.add_argument("input", nargs="?", help="file of 0/1 characters (default: stdin)")
    e.add_argument("--code", default="5,7", help="octal generators, e.g. 133,171")
    e.add_argument("--no-terminate", action="store_true", help="omit the K-1 zero tail")
    e.add_argument("--puncture", help="catalog name or rows like 1011/1101")
    e.set_defaults(func=cmd_encode)

    def common(sp, out_required=False):
        sp.add_argument("--config", required=True, help="JSON scenario file")
        sp.add_argument("--workers", type=int, help="worker processes (default 1)")
        sp.add_argument("--out", required=out_required, help="output directory")

    s = sub.add_parser("simulate", help="run scenarios and write CSV/SVG results")
    common(s, out_required=True)
    s.add_argument("--what", choices=("ber", "fer"), default="ber", help="plotted quantity")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("sweep-beta", help="BER versus beta on common random numbers")
    common(b)
    b.add_argument("--beta-grid", help="comma-separated betas")
    b.add_argument("--frames", type=int, help="frames per point (default: max_frames)")
    b.set_defaults(func=cmd_sweep_beta)

    sp = sub.add_parser("search-patterns", help="rank basic puncturing patterns")
    common(sp)
    sp.add_argument("--ntx", type=int, required=True)
    sp.add_argument("--zeros", type=int, required=True)
    sp.add_argument("--max-delta", type=int)
    sp.add_argument("--beta-grid", help="comma-separated betas")
    sp.add_argument("--frames", type=int)
    sp.set_defaults(func=cmd_search_patterns)

    d = sub.add_parser("bound", help="diversity upper bound for block fading")
    d.add_argument("--L", type=int, required=True)
    d.add_argument("--N", type=int, required=True)
    d.add_argument("--rate", required=True, help="rational, e.g. 5/8")
    d.set_defaults(func=cmd_bound)

    pl = sub.add_parser("plot", help="render an SVG from a results CSV")
    pl.add_argument("--csv", required=True)
    pl.add_argument("--out", help="SVG path (default: next to the CSV)")
    pl.add_argument("--what", choices=("ber", "fer"), default="ber")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"p2stc {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
