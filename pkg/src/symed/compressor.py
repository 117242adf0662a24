"""Piecewise-linear compression of a time series.

`OnlineCompressor` runs on the sender: it grows a raw segment point by
point, standardizes it against the running EWMA/EWMV statistics, and
emits the segment endpoint once the linear-fit error or the length limit
is exceeded. Only that endpoint travels to the receiver.

`compress_offline` is the batch segmentation of the ABBA baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError, StreamCorruptionError
from .normalizer import DEFAULT_ALPHA, NormalizerState

BOUND_MODES = ("linear", "squared")


class Piece(NamedTuple):
    """A linear segment: ``len`` samples long, rising by ``inc``."""

    len: float
    inc: float


class EmittedEndpoint(NamedTuple):
    value: float
    tick: int


@dataclass(frozen=True)
class CompressorConfig:
    tol: float = 0.4
    len_max: Optional[int] = None  # None means unbounded
    alpha: float = DEFAULT_ALPHA
    bound_mode: str = "linear"

    def __post_init__(self):
        if not (self.tol > 0.0) or not math.isfinite(self.tol):
            raise ConfigError(f"tol must be a positive finite number, got {self.tol!r}")
        if self.len_max is not None and self.len_max < 2:
            raise ConfigError(f"len_max must be >= 2, got {self.len_max!r}")
        if self.bound_mode not in BOUND_MODES:
            raise ConfigError(f"bound_mode must be one of {BOUND_MODES}, got {self.bound_mode!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha!r}")


def error_bound(n_points: int, tol: float, bound_mode: str = "linear") -> float:
    """Allowed squared fit error for a segment holding ``n_points`` samples."""
    t = tol * tol if bound_mode == "squared" else tol
    return (n_points - 2) * t


def fit_error(segment: Sequence[float]) -> float:
    """Squared distance between a segment and the chord joining its endpoints.

    The chord is evaluated as a convex combination so both endpoints have an
    exactly zero residual; a two-point segment therefore always scores 0.0.
    """
    s = np.asarray(segment, dtype=np.float64)
    if s.size < 2:
        raise InvalidInputError("fit_error needs at least 2 points")
    m = s.size - 1
    w = np.arange(m + 1, dtype=np.float64) / m
    line = s[0] * (1.0 - w) + s[-1] * w
    r = line - s
    return float(np.dot(r, r))


class OnlineCompressor:
    """Sender-side streaming compressor.

    Feed raw values one at a time with :meth:`feed`. The first value is the
    stream anchor (``start_value``) and is never emitted by ``feed``; each
    later call may return the endpoint of a finished segment together with its
    logical tick (the 0-based index of the sample in the stream).
    """

    def __init__(self, config: CompressorConfig | None = None, **kwargs):
        if config is None:
            config = CompressorConfig(**kwargs)
        elif kwargs:
            raise TypeError("pass either a CompressorConfig or keyword arguments, not both")
        self.config = config
        self.normalizer = NormalizerState(alpha=config.alpha)
        self._buf: List[float] = []
        self._start_tick = 0
        self._next_tick = 0
        self.start_value: Optional[float] = None
        self.last_error = 0.0
        self.last_bound = 0.0

    @property
    def buffer(self) -> List[float]:
        return list(self._buf)

    @property
    def buffer_start_tick(self) -> int:
        return self._start_tick

    @property
    def ticks_seen(self) -> int:
        return self._next_tick

    def feed(self, t: float) -> Optional[EmittedEndpoint]:
        t = float(t)
        if not math.isfinite(t):
            raise StreamCorruptionError(f"non-finite stream value {t!r} at tick {self._next_tick}")
        cfg = self.config
        if self._next_tick == 0:
            self.start_value = t
        self._next_tick += 1
        self._buf.append(t)
        self.normalizer = self.normalizer.update(t)

        n = len(self._buf)
        if n <= 2:
            # a line through <= 2 points is exact and the bound is <= 0
            self.last_error, self.last_bound = 0.0, 0.0
            return None
        seg = self.normalizer.standardize_segment(self._buf)
        err = fit_error(seg)
        bound = error_bound(n, cfg.tol, cfg.bound_mode)
        self.last_error, self.last_bound = err, bound
        if err <= bound and (cfg.len_max is None or n <= cfg.len_max):
            return None

        endpoint = EmittedEndpoint(self._buf[-2], self._start_tick + n - 2)
        self._buf = self._buf[-2:]
        self._start_tick = endpoint.tick
        return endpoint

    def flush(self) -> Optional[EmittedEndpoint]:
        """Emit the last buffered point to close the final, unfinished segment."""
        if len(self._buf) < 2:
            return None
        endpoint = EmittedEndpoint(self._buf[-1], self._start_tick + len(self._buf) - 1)
        self._buf = self._buf[-1:]
        self._start_tick = endpoint.tick
        return endpoint


def compress_stream(
    series: Iterable[float], config: CompressorConfig | None = None, flush: bool = True, **kwargs
) -> Iterator[EmittedEndpoint]:
    """Run an `OnlineCompressor` over a finite series, yielding each endpoint."""
    comp = OnlineCompressor(config, **kwargs)
    for t in series:
        ep = comp.feed(t)
        if ep is not None:
            yield ep
    if flush:
        ep = comp.flush()
        if ep is not None:
            yield ep


def endpoints_to_pieces(start_value: float, endpoints: Iterable[EmittedEndpoint], start_tick: int = 0) -> List[Piece]:
    pieces = []
    prev_v, prev_t = start_value, start_tick
    for v, tick in endpoints:
        pieces.append(Piece(float(tick - prev_t), v - prev_v))
        prev_v, prev_t = v, tick
    return pieces


def compress_offline(
    series: Sequence[float],
    tol: float,
    len_max: Optional[int] = None,
    bound_mode: str = "linear",
) -> List[Piece]:
    """Batch segmentation of a (pre-normalized) series into linear pieces.

    Grows each segment from its start point until adding the next sample
    would push the fit error above ``(n_points - 2) * tol`` or the segment
    beyond ``len_max`` points. Consecutive pieces share endpoints, so the
    lengths sum to ``len(series) - 1``.
    """
    ts = np.asarray(series, dtype=np.float64)
    if ts.ndim != 1 or ts.size < 2:
        raise InvalidInputError("compress_offline needs a 1-D series of at least 2 points")
    if not np.all(np.isfinite(ts)):
        raise StreamCorruptionError("series contains non-finite values")
    CompressorConfig(tol=tol, len_max=len_max, bound_mode=bound_mode)  # validates

    pieces: List[Piece] = []
    start, end = 0, 2
    n = ts.size
    while end < n:
        npts = end - start + 1
        err = fit_error(ts[start : end + 1])
        if err <= error_bound(npts, tol, bound_mode) and (len_max is None or npts <= len_max):
            end += 1
            continue
        pieces.append(Piece(float(end - 1 - start), float(ts[end - 1] - ts[start])))
        start = end - 1
        end = start + 2
    pieces.append(Piece(float(n - 1 - start), float(ts[n - 1] - ts[start])))
    return pieces
