"""Rebuild a time series from symbols or from linear pieces.

From symbols: look up each symbol's center, round the center lengths to
whole samples (carrying the rounding error forward), then interpolate the
polygonal chain. From pieces the lookup and rounding steps are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .digitizer import SymbolString, parse_symbols
from .errors import CorruptStateError, InvalidInputError


@dataclass
class ReconstructedSeries:
    values: np.ndarray
    start_value: float
    source_kind: str  # "fromSymbols" | "fromPieces"

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _labels(symbols: Union[SymbolString, str, Sequence[int]]) -> List[int]:
    if isinstance(symbols, SymbolString):
        return list(symbols.labels)
    if isinstance(symbols, str):
        return parse_symbols(symbols)
    return [int(x) for x in symbols]


def inverse_digitize(symbols, centers) -> List[Tuple[float, float]]:
    C = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    out = []
    for i, lab in enumerate(_labels(symbols)):
        if not 0 <= lab < C.shape[0]:
            raise CorruptStateError(f"symbol {i} has label {lab} but only {C.shape[0]} centers exist")
        out.append((float(C[lab, 0]), float(C[lab, 1])))
    return out


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def quantize_lengths(lens: Sequence[float]) -> List[int]:
    """Round lengths to integers >= 1, carrying each rounding error into the next."""
    out = []
    carry = 0.0
    for length in lens:
        if not length > 0:
            raise InvalidInputError(f"piece lengths must be positive, got {length!r}")
        x = length + carry
        q = max(1, _round_half_away(x))
        carry = x - q
        out.append(q)
    return out


def inverse_compress(pieces, start_value: float, source_kind: str = "fromSymbols") -> ReconstructedSeries:
    parts = [np.array([float(start_value)])]
    end = float(start_value)
    for length, inc in pieces:
        m = int(length)
        if m != length or m < 1:
            raise InvalidInputError(f"piece length must be a positive integer, got {length!r}")
        parts.append(end + inc * (np.arange(1, m + 1, dtype=np.float64) / m))
        end = end + inc
        parts[-1][-1] = end
    return ReconstructedSeries(np.concatenate(parts), float(start_value), source_kind)


def reconstruct_from_symbols(symbols, centers, start_value: float) -> ReconstructedSeries:
    approx = inverse_digitize(symbols, centers)
    lens = quantize_lengths([p[0] for p in approx])
    return inverse_compress([(l, p[1]) for l, p in zip(lens, approx)], start_value, "fromSymbols")


def reconstruct_from_pieces(pieces, start_value: float) -> ReconstructedSeries:
    return inverse_compress(pieces, start_value, "fromPieces")
