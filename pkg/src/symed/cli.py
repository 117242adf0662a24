"""Command line interface.

    symed gen          write synthetic series in UCR format
    symed run          one configuration on one file (SymED and ABBA)
    symed sweep        tolerance grid over datasets, CSV output
    symed serve        receiver: listen for a sender, digitize, save state
    symed send         sender: compress a series and stream it to a receiver
    symed reconstruct  rebuild a series from a saved state (symbols or pieces)
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from dataclasses import fields
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import datasets as ds
from . import metrics
from .compressor import CompressorConfig
from .digitizer import OnlineDigitizer, SymbolString
from .errors import DatasetError, SymedError
from .harness import (
    SweepConfig,
    aggregate,
    emit_results,
    evaluate_cell,
    run_experiment,
)
from .reconstructor import reconstruct_from_pieces, reconstruct_from_symbols
from .transport import Listener, SocketChannel, receive_loop, stream_series

log = logging.getLogger("symed")

_SWEEP_KEYS = {f.name for f in fields(SweepConfig)}


def parse_tols(text: str) -> tuple:
    """``"0.1,0.4"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        a, b, step = (float(x) for x in text.split(":"))
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return tuple(round(a + i * step, 10) for i in range(n))
    return tuple(float(x) for x in text.split(",") if x.strip())


def _none_or_int(text: str) -> Optional[int]:
    return None if text.lower() in ("none", "inf", "") else int(text)


_CONVERT = {
    "tol_values": parse_tols,
    "alpha": float,
    "scl": float,
    "k_min": int,
    "k_max": int,
    "len_max": _none_or_int,
    "seed": int,
    "bound_mode": str,
    "first_point_mode": str,
    "threaded": lambda s: str(s).lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path: str) -> Dict[str, object]:
    """Plain ``key = value`` lines; keys are SweepConfig field names (dashes allowed)."""
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_string("[symed]\n" + fh.read())
    out = {}
    for key, value in cp["symed"].items():
        key = key.replace("-", "_")
        if key == "tol":
            key = "tol_values"
        if key not in _CONVERT:
            raise SymedError(f"{path}: unknown config key {key!r}")
        out[key] = _CONVERT[key](value)
    return out


def build_sweep(args, default_tol: Optional[float] = None) -> SweepConfig:
    """Config file first, then explicit flags; ``default_tol`` applies when neither sets one."""
    values: Dict[str, object] = {}
    if default_tol is not None:
        values["tol_values"] = (default_tol,)
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in _SWEEP_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "tol", None) is not None:
        values["tol_values"] = (args.tol,)
    return SweepConfig(**values)


def _add_common(p: argparse.ArgumentParser, sender=True, receiver=True) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    if sender:
        p.add_argument("--alpha", type=float, help="EWMA/EWMV weight (default 0.01)")
        p.add_argument("--len-max", dest="len_max", type=_none_or_int, help="max segment length in points")
        p.add_argument("--bound-mode", dest="bound_mode", choices=("linear", "squared"))
    if receiver:
        p.add_argument("--scl", type=float, help="length weight in clustering; 0 = increments only")
        p.add_argument("--k-min", dest="k_min", type=int)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--seed", type=int, help="seed for randomized k-means initialization")
        p.add_argument("--first-point-mode", dest="first_point_mode", choices=("start", "zero"))


# --------------------------------------------------------------------------
# input helpers


def read_series(path: str, row: Optional[int] = None) -> List[ds.Labeled]:
    """A UCR file (label + values per row) or a single column of values."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if lines and all(len(ln.replace(",", " ").split()) == 1 for ln in lines):
        try:
            return [("0", np.array([float(x.strip(",")) for x in lines]))]
        except ValueError as exc:
            raise DatasetError(f"{path}: non-numeric value ({exc})") from None
    rows = ds.read_ucr(path)
    if row is not None:
        if not 0 <= row < len(rows):
            raise SymedError(f"{path}: row {row} out of range (0..{len(rows) - 1})")
        return [rows[row]]
    return rows


# --------------------------------------------------------------------------
# verbs


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "suite":
        os.makedirs(args.out, exist_ok=True)
        for name, rows in ds.synthetic_suite(args.length, args.seed).items():
            path = os.path.join(args.out, f"{name}_TEST.tsv")
            ds.write_ucr(path, rows)
            print(path)
        return 0
    make = {
        "sine": lambda: ds.sine(args.length, period=rng.uniform(50, 200), amplitude=rng.uniform(1, 5),
                                phase=rng.uniform(0, 6.28), noise=args.noise, rng=rng),
        "piecewise": lambda: ds.piecewise_linear(args.length, rng, noise=args.noise),
        "zigzag": lambda: ds.zigzag(args.length, rng),
        "walk": lambda: ds.random_walk(args.length, rng),
        "ramp": lambda: ds.ramp(args.length, slope=rng.uniform(-1, 1)),
    }[args.kind]
    rows = [(str(i), make()) for i in range(args.count)]
    ds.write_ucr(args.out, rows, "," if args.out.endswith(".csv") else "\t")
    print(args.out)
    return 0


def cmd_run(args) -> int:
    sweep = build_sweep(args, default_tol=0.4)
    name = ds.dataset_name(args.input)
    records = []
    for label, series in read_series(args.input, args.row):
        for tol in sweep.tol_values:
            records.extend(evaluate_cell(name, label, series, tol, sweep))
    for r in records:
        if r.error:
            print(f"{r.dataset} {r.series_id} {r.algo} tol={r.tol}: ERROR {r.error}")
            continue
        print(
            f"{r.dataset} {r.series_id} {r.algo:5s} tol={r.tol:<4g} symbols={r.n_symbols:<5d} "
            f"RE={r.re_symbols:.4g}" + (f" RE_pieces={r.re_pieces:.4g}" if r.re_pieces is not None else "")
            + f" CR={r.cr:.4f} DRR={r.drr:.4f}"
        )
    if args.out:
        emit_results(records, args.out)
    return 0


def cmd_sweep(args) -> int:
    sweep = build_sweep(args)
    data: Dict[str, List[ds.Labeled]] = {}
    if args.synthetic:
        data.update(ds.synthetic_suite(args.synthetic_length, sweep.seed))
    for path in args.data or []:
        spec = ds.DatasetSpec(ds.dataset_name(path), path, args.min_length)
        data[spec.name] = ds.load_dataset(spec)
    if not data:
        raise SymedError("nothing to do: give --data files or --synthetic")
    records = run_experiment(data, sweep, jobs=args.jobs)
    emit_results(records, args.out)
    failed = [r for r in records if r.error]
    re = aggregate(records, "re_symbols")
    rp = aggregate(records, "re_pieces")
    cr = aggregate(records, "cr")
    drr = aggregate(records, "drr")
    print(f"{'tol':>5} {'RE symed':>10} {'RE pieces':>10} {'RE abba':>10} {'CR symed':>9} {'CR abba':>8} "
          f"{'DRR symed':>9} {'DRR abba':>8}")
    for tol in sweep.tol_values:
        def g(d, algo):
            v = d.get((algo, float(tol)))
            return float("nan") if v is None else v
        print(f"{tol:5.2f} {g(re, 'symed'):10.3f} {g(rp, 'symed'):10.3f} {g(re, 'abba'):10.3f} "
              f"{g(cr, 'symed'):9.4f} {g(cr, 'abba'):8.4f} {g(drr, 'symed'):9.4f} {g(drr, 'abba'):8.4f}")
    print(f"wrote {len(records)} records to {args.out}" + (f" ({len(failed)} failed cells)" if failed else ""))
    return 1 if failed else 0


def _dump_state(path: str, dig: OnlineDigitizer) -> None:
    state = {
        "symbols": dig.symbols.text,
        "labels": list(dig.labels),
        "centers": dig.centers.tolist(),
        "pieces": [list(p) for p in dig.pieces],
        "start_value": dig.start_value,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state, fh, indent=1)


def cmd_serve(args) -> int:
    sweep = build_sweep(args)
    dig = OnlineDigitizer(sweep.digitizer(args.tol if args.tol is not None else 0.4))
    listener = Listener(args.listen)
    print(f"listening on {listener.address}", file=sys.stderr, flush=True)
    ch = listener.accept()

    def on_point(value, tick):
        s = dig.receive(value, tick)
        if args.verbose:
            print(f"{tick}\t{value!r}\t{s.text}", flush=True)

    try:
        receive_loop(ch, on_point, dig.start, clock=args.clock, sample_period=args.sample_period)
    finally:
        ch.close()
        listener.close()
    print(dig.symbols.text)
    if args.out:
        _dump_state(args.out, dig)
    return 0


def cmd_send(args) -> int:
    sweep = build_sweep(args)
    [(_, series)] = read_series(args.input, args.row if args.row is not None else 0)
    cfg = CompressorConfig(tol=args.tol if args.tol is not None else 0.4, len_max=sweep.len_max,
                           alpha=sweep.alpha, bound_mode=sweep.bound_mode)
    ch = SocketChannel.connect(args.connect)
    try:
        sender = stream_series(series, ch, cfg, args.stream_id,
                               sample_period=args.sample_period if args.pace else None)
    finally:
        ch.close()
    print(f"sent {sender.points_sent} points for {len(series)} samples "
          f"(CR {metrics.compression_rate('symed', series, pieces=sender.points_sent):.4f})")
    return 0


def cmd_reconstruct(args) -> int:
    with open(args.state, encoding="utf-8") as fh:
        state = json.load(fh)
    start = float(state.get("start_value", 0.0))
    if args.source == "pieces":
        rec = reconstruct_from_pieces(state["pieces"], start)
    else:
        symbols = SymbolString(state["labels"]) if "labels" in state else SymbolString.parse(state["symbols"])
        rec = reconstruct_from_symbols(symbols, state["centers"], start)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for v in rec.values:
            out.write(f"{float(v)!r}\n")
    finally:
        if args.out:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symed", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="write synthetic series")
    p.add_argument("kind", choices=("sine", "piecewise", "zigzag", "walk", "ramp", "suite"))
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file (a directory for 'suite')")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="evaluate one configuration on one file")
    p.add_argument("input")
    p.add_argument("--row", type=int, help="only this row of a UCR file")
    p.add_argument("--tol", type=float, help="error tolerance (default 0.4)")
    _add_common(p)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="tolerance sweep over datasets")
    p.add_argument("--data", nargs="*", help="UCR-format files")
    p.add_argument("--synthetic", action="store_true", help="include the bundled synthetic suite")
    p.add_argument("--synthetic-length", type=int, default=1000)
    p.add_argument("--min-length", type=int, default=1000)
    p.add_argument("--tols", dest="tol_values", type=parse_tols, help="e.g. 0.1:2.0:0.1 or 0.2,0.4")
    p.add_argument("--threaded", action="store_true", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="results.csv")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="receiver side over TCP")
    p.add_argument("--listen", default="127.0.0.1:7878")
    p.add_argument("--tol", type=float)
    p.add_argument("--clock", choices=("logical", "wall"), default="logical")
    p.add_argument("--sample-period", type=float, default=0.01)
    p.add_argument("--out", help="write symbols/centers/pieces as JSON")
    p.add_argument("--verbose", action="store_true", help="print the symbol string after every point")
    _add_common(p, sender=False)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("send", help="sender side over TCP")
    p.add_argument("input")
    p.add_argument("--connect", default="127.0.0.1:7878")
    p.add_argument("--row", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--pace", action="store_true", help="sleep one sample period per sample")
    p.add_argument("--sample-period", type=float, default=0.01)
    _add_common(p, receiver=False)
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("reconstruct", help="rebuild a series from a saved receiver state")
    p.add_argument("state", help="JSON written by 'serve --out'")
    p.add_argument("--from", dest="source", choices=("symbols", "pieces"), default="symbols")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SymedError as exc:
        print(f"symed: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
