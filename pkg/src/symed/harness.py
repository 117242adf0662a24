"""End-to-end pipelines and the tolerance-sweep experiment runner."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import metrics
from .compressor import CompressorConfig, Piece, compress_offline
from .datasets import DatasetSpec, Labeled, load_dataset
from .digitizer import DigitizerConfig, OnlineDigitizer, SymbolString, digitize_offline
from .metrics import LatencyProbe
from .reconstructor import inverse_compress, reconstruct_from_symbols
from .transport import InProcChannel, receive_loop, run_threaded, stream_series

log = logging.getLogger(__name__)

DEFAULT_TOLS = tuple(round(0.1 * i, 1) for i in range(1, 21))

CSV_HEADER = (
    "dataset", "series_id", "algo", "tol", "alpha", "scl", "n_symbols", "re_symbols",
    "re_pieces", "cr", "drr", "lat_sender_ms", "lat_receiver_ms", "total_ms",
)


@dataclass(frozen=True)
class SweepConfig:
    tol_values: Tuple[float, ...] = DEFAULT_TOLS
    alpha: float = 0.01
    scl: float = 1.0
    k_min: int = 3
    k_max: int = 100
    len_max: Optional[int] = None
    seed: int = 0
    bound_mode: str = "linear"
    first_point_mode: str = "start"
    threaded: bool = False

    def compressor(self, tol: float) -> CompressorConfig:
        return CompressorConfig(tol=tol, len_max=self.len_max, alpha=self.alpha, bound_mode=self.bound_mode)

    def digitizer(self, tol: float) -> DigitizerConfig:
        return DigitizerConfig(tol=tol, scl=self.scl, k_min=self.k_min, k_max=self.k_max,
                               seed=self.seed, first_point_mode=self.first_point_mode)


@dataclass
class RunRecord:
    dataset: str
    series_id: str
    algo: str
    tol: float
    alpha: Optional[float]
    scl: float
    n_symbols: Optional[int] = None
    re_symbols: Optional[float] = None
    re_pieces: Optional[float] = None
    cr: Optional[float] = None
    drr: Optional[float] = None
    lat_sender_ms: Optional[float] = None
    lat_receiver_ms: Optional[float] = None
    total_ms: Optional[float] = None
    error: Optional[str] = field(default=None, compare=False)


# --------------------------------------------------------------------------
# pipelines


@dataclass
class SymedResult:
    symbols: SymbolString
    centers: np.ndarray
    pieces: List[Piece]
    start_value: float
    from_pieces: np.ndarray
    from_symbols: np.ndarray
    points_sent: int
    probe: LatencyProbe


class _ReceiverSide:
    """Receiver handlers; keeps an online piece reconstruction alongside the symbols."""

    def __init__(self, config: DigitizerConfig, probe: LatencyProbe):
        self.dig = OnlineDigitizer(config)
        self.probe = probe
        self.recon: List[np.ndarray] = []
        self._end = 0.0

    def on_start(self, value, tick):
        self.dig.start(value, tick)
        self._end = self.dig.start_value
        self.recon = [np.array([self._end])]

    def on_point(self, value, tick):
        with self.probe.section("receiver"):
            self.dig.receive(value, tick)
            p = self.dig.pieces[-1]
            seg = inverse_compress([p], self._end, "fromPieces").values[1:]
            self._end = seg[-1]
            self.recon.append(seg)
        self.probe.count_symbols()


def run_symed(series: Sequence[float], tol: float, sweep: SweepConfig = SweepConfig()) -> SymedResult:
    """Sender and receiver joined by the in-process channel, monolithic or threaded."""
    probe = LatencyProbe()
    rx = _ReceiverSide(sweep.digitizer(tol), probe)
    if sweep.threaded:
        sender = run_threaded(series, sweep.compressor(tol), rx.on_start, rx.on_point)
    else:
        ch = InProcChannel()
        sender = stream_series(series, ch, sweep.compressor(tol))
        receive_loop(ch, rx.on_point, rx.on_start)
    probe.add("sender", sender.compress_seconds)

    dig = rx.dig
    symbols = dig.symbols
    with probe.section("receiver_offline"):
        from_symbols = reconstruct_from_symbols(symbols, dig.centers, dig.start_value).values
    return SymedResult(
        symbols=symbols,
        centers=dig.centers.copy(),
        pieces=list(dig.pieces),
        start_value=dig.start_value,
        from_pieces=np.concatenate(rx.recon) if rx.recon else np.empty(0),
        from_symbols=from_symbols,
        points_sent=sender.points_sent,
        probe=probe,
    )


@dataclass
class AbbaResult:
    symbols: SymbolString
    centers: np.ndarray
    pieces: List[Piece]
    from_symbols: np.ndarray
    from_pieces: np.ndarray
    total_ms: float


def run_abba(series: Sequence[float], tol: float, sweep: SweepConfig = SweepConfig()) -> AbbaResult:
    """Offline baseline: global z-score, batch segmentation, batch clustering, reconstruction."""
    t0 = time.perf_counter()
    ts = np.asarray(series, dtype=np.float64)
    mu, sd = float(ts.mean()), float(ts.std())
    sd = sd if sd > 0 else 1.0
    pieces_z = compress_offline((ts - mu) / sd, tol, sweep.len_max, sweep.bound_mode)
    pieces = [Piece(p.len, p.inc * sd) for p in pieces_z]
    symbols, centers = digitize_offline(pieces, tol, sweep.scl, sweep.k_min, sweep.k_max, sweep.seed)
    from_symbols = reconstruct_from_symbols(symbols, centers, float(ts[0])).values
    total_ms = 1000.0 * (time.perf_counter() - t0)
    from_pieces = inverse_compress(pieces, float(ts[0]), "fromPieces").values
    return AbbaResult(symbols, centers, pieces, from_symbols, from_pieces, total_ms)


def evaluate_cell(dataset: str, series_id: str, series: Sequence[float], tol: float,
                  sweep: SweepConfig) -> List[RunRecord]:
    """One SymED and one ABBA record for a (series, tol) cell; failures are recorded, not raised."""
    ts = np.asarray(series, dtype=np.float64)
    out = []
    base = dict(dataset=dataset, series_id=str(series_id), tol=float(tol), scl=sweep.scl)

    rec = RunRecord(algo="symed", alpha=sweep.alpha, **base)
    try:
        r = run_symed(ts, tol, sweep)
        rec.n_symbols = len(r.symbols)
        rec.re_symbols = metrics.dtw(ts, r.from_symbols)
        rec.re_pieces = metrics.dtw(ts, r.from_pieces)
        rec.cr = metrics.compression_rate("symed", ts, pieces=r.points_sent)
        rec.drr = metrics.dimension_reduction_rate(r.symbols, ts)
        rec.lat_sender_ms = r.probe.per_symbol_ms("sender")
        rec.lat_receiver_ms = r.probe.per_symbol_ms("receiver")
        rec.total_ms = r.probe.total_ms()
    except Exception as exc:  # attach to the cell, keep sweeping
        log.warning("symed failed on %s/%s tol=%s: %s", dataset, series_id, tol, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    out.append(rec)

    rec = RunRecord(algo="abba", alpha=None, **base)
    try:
        a = run_abba(ts, tol, sweep)
        rec.n_symbols = len(a.symbols)
        rec.re_symbols = metrics.dtw(ts, a.from_symbols)
        rec.cr = metrics.compression_rate("abba", ts, symbols=a.symbols, centers=a.centers)
        rec.drr = metrics.dimension_reduction_rate(a.symbols, ts)
        rec.total_ms = a.total_ms
    except Exception as exc:
        log.warning("abba failed on %s/%s tol=%s: %s", dataset, series_id, tol, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    out.append(rec)
    return out


def _cell(args):
    return evaluate_cell(*args)


def run_experiment(datasets: Mapping[str, Sequence[Labeled]], sweep: SweepConfig = SweepConfig(),
                   jobs: int = 1) -> List[RunRecord]:
    """Evaluate every series at every tolerance; results come back in a stable order."""
    cells = [
        (name, label, series, tol, sweep)
        for name, rows in datasets.items()
        for label, series in rows
        for tol in sweep.tol_values
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_cell, cells, chunksize=4))
    else:
        chunks = [_cell(c) for c in cells]
    return sort_records([r for chunk in chunks for r in chunk])


def load_datasets(specs: Iterable[DatasetSpec]) -> Dict[str, List[Labeled]]:
    return {s.name: load_dataset(s) for s in specs}


# --------------------------------------------------------------------------
# aggregation and output


def _natural(s: str):
    try:
        return (0, float(s), "")
    except ValueError:
        return (1, 0.0, s)


def sort_records(records: Iterable[RunRecord]) -> List[RunRecord]:
    return sorted(records, key=lambda r: (r.dataset, _natural(r.series_id), r.algo, r.tol))


def aggregate(records: Iterable[RunRecord], metric: str) -> Dict[Tuple[str, float], float]:
    """Equal-weight mean per (algo, tol): average series within a dataset, then average datasets."""
    per: Dict[Tuple[str, float], Dict[str, List[float]]] = {}
    for r in records:
        v = getattr(r, metric)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            continue
        per.setdefault((r.algo, r.tol), {}).setdefault(r.dataset, []).append(float(v))
    return {
        key: float(np.mean([np.mean(vals) for vals in by_ds.values()]))
        for key, by_ds in sorted(per.items())
    }


def overall(records: Iterable[RunRecord], metric: str, algo: str) -> float:
    """Equal-weight mean of ``metric`` for ``algo`` across datasets and tolerances."""
    agg = aggregate(records, metric)
    vals = [v for (a, _), v in agg.items() if a == algo]
    return float(np.mean(vals)) if vals else math.nan


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_results(records: Iterable[RunRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in sort_records(records):
            w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])


def read_results(path) -> List[RunRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                if v == "":
                    kw[k] = None
                elif k in ("dataset", "series_id", "algo"):
                    kw[k] = v
                elif k == "n_symbols":
                    kw[k] = int(v)
                else:
                    kw[k] = float(v)
            out.append(RunRecord(**kw))
    return out
