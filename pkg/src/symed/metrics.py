"""Evaluation metrics: DTW reconstruction error, compression and dimension
reduction rates, and per-symbol latency.

Byte accounting follows a fixed convention: one symbol is 1 byte and one
float is 4 bytes, regardless of what the wire actually carries.
"""

from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager
from fractions import Fraction
from typing import Dict, Optional, Sequence

import numba as nb
import numpy as np

from .errors import InvalidInputError

FLOAT_BYTES = 4
SYMBOL_BYTES = 1


@nb.njit(cache=True, nogil=True)
def _dtw_kernel(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.full(m + 1, np.inf)
    cur = np.empty(m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = np.inf
        ai = a[i - 1]
        for j in range(1, m + 1):
            d = ai - b[j - 1]
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = d * d + best
        prev, cur = cur, prev
    return prev[m]


def dtw(a: Sequence[float], b: Sequence[float]) -> float:
    """Full-window DTW with squared local cost; returns the accumulated cost (no square root)."""
    x = np.ascontiguousarray(a, dtype=np.float64).ravel()
    y = np.ascontiguousarray(b, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise InvalidInputError("dtw needs two non-empty sequences")
    return float(_dtw_kernel(x, y))


def _size(x) -> int:
    return int(x) if isinstance(x, (int, np.integer)) else len(x)


def compression_rate(kind: str, series, symbols=None, centers=None, pieces=None) -> float:
    """Transmitted bytes over raw bytes.

    ``abba``:  (8*|C| + |S|) / (4*|T|)  -- centers and symbols are sent
    ``symed``: (8*|P| / 2) / (4*|T|)    -- one float per piece is sent

    Any argument may be a sequence or just its length.
    """
    n = _size(series)
    if n == 0:
        raise InvalidInputError("compression_rate needs a non-empty series")
    raw = FLOAT_BYTES * n
    if kind == "abba":
        if symbols is None or centers is None:
            raise InvalidInputError("abba compression rate needs symbols and centers")
        sent = 2 * FLOAT_BYTES * _size(centers) + SYMBOL_BYTES * _size(symbols)
    elif kind == "symed":
        if pieces is None:
            raise InvalidInputError("symed compression rate needs pieces")
        sent = Fraction(2 * FLOAT_BYTES * _size(pieces), 2)
    else:
        raise InvalidInputError(f"unknown compression kind {kind!r}")
    return float(Fraction(sent) / raw)


def dimension_reduction_rate(symbols, series) -> float:
    n = _size(series)
    if n == 0:
        raise InvalidInputError("dimension_reduction_rate needs a non-empty series")
    return float(Fraction(_size(symbols), n))


class LatencyProbe:
    """Accumulates wall time per named section on a monotonic clock."""

    def __init__(self, clock=time.perf_counter):
        self.clock = clock
        self.seconds: Dict[str, float] = defaultdict(float)
        self.symbols = 0

    @contextmanager
    def section(self, name: str):
        t0 = self.clock()
        try:
            yield
        finally:
            self.seconds[name] += self.clock() - t0

    def add(self, name: str, seconds: float) -> None:
        self.seconds[name] += seconds

    def count_symbols(self, n: int = 1) -> None:
        self.symbols += n

    def per_symbol_ms(self, name: str) -> Optional[float]:
        """Mean milliseconds per produced symbol, or None when nothing was produced."""
        if self.symbols == 0:
            return None
        return 1000.0 * self.seconds.get(name, 0.0) / self.symbols

    def total_ms(self, name: str | None = None) -> float:
        if name is None:
            return 1000.0 * sum(self.seconds.values())
        return 1000.0 * self.seconds.get(name, 0.0)
