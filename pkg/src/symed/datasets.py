"""UCR-format dataset loading and bundled synthetic series."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DatasetError

Series = np.ndarray
Labeled = Tuple[str, Series]


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    min_length: int = 1000


def _split(line: str, delim: str | None) -> List[str]:
    return line.split(delim) if delim else line.split()


def _detect_delimiter(line: str) -> str | None:
    if "\t" in line:
        return "\t"
    if "," in line:
        return ","
    return None


def read_ucr(path: str) -> List[Labeled]:
    """Read every row of a UCR-style file: a class label then the series values."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    rows: List[Labeled] = []
    delim = None
    detected = False
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not detected:
            delim, detected = _detect_delimiter(line), True
        cells = [c.strip() for c in _split(line, delim)]
        if len(cells) < 2:
            raise DatasetError(f"{path}:{lineno}: need a label and at least one value")
        try:
            values = np.array([float(c) for c in cells[1:]], dtype=np.float64)
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
        if not np.all(np.isfinite(values)):
            raise DatasetError(f"{path}:{lineno}: row contains NaN or infinite values")
        rows.append((_label_text(cells[0]), values))
    return rows


def _label_text(cell: str) -> str:
    try:
        x = float(cell)
    except ValueError:
        return cell
    return str(int(x)) if x.is_integer() else cell


def first_of_each_class(rows: Sequence[Labeled], min_length: int = 0) -> List[Labeled]:
    """Keep the first series of every class (in order of first appearance) that is long enough."""
    seen = set()
    out = []
    for label, series in rows:
        if label in seen or len(series) < min_length:
            continue
        seen.add(label)
        out.append((label, series))
    return out


def load_dataset(spec: DatasetSpec) -> List[Labeled]:
    rows = read_ucr(spec.path)
    if not rows:
        raise DatasetError(f"{spec.path}: no data rows")
    picked = first_of_each_class(rows, spec.min_length)
    if not picked:
        longest = max(len(s) for _, s in rows)
        raise DatasetError(
            f"{spec.path}: every series is shorter than min_length={spec.min_length} (longest {longest})"
        )
    return picked


def dataset_name(path: str) -> str:
    base = os.path.basename(path)
    for suffix in ("_TEST.tsv", "_TRAIN.tsv", ".tsv", ".csv", ".txt"):
        if base.endswith(suffix):
            return base[: -len(suffix)]
    return base


def write_ucr(path: str, rows: Sequence[Labeled], delimiter: str = "\t") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for label, series in rows:
            fh.write(delimiter.join([str(label)] + [repr(float(v)) for v in series]) + "\n")


# --------------------------------------------------------------------------
# synthetic generators


def ramp(n: int, slope: float = 1.0, intercept: float = 0.0) -> Series:
    return intercept + slope * np.arange(n, dtype=np.float64)


def sine(n: int, period: float = 100.0, amplitude: float = 1.0, phase: float = 0.0,
         noise: float = 0.0, rng: np.random.Generator | None = None) -> Series:
    x = amplitude * np.sin(2 * math.pi * np.arange(n) / period + phase)
    if noise:
        rng = rng if rng is not None else np.random.default_rng(0)
        x = x + rng.normal(0.0, noise, n)
    return x


def piecewise_linear(n: int, rng: np.random.Generator, seg_len: Tuple[int, int] = (20, 80),
                     slope: float = 1.0, noise: float = 0.0, alternate: bool = False) -> Series:
    """Linear pieces joined at integer breakpoints, with optional Gaussian noise.

    Segment lengths are drawn uniformly from ``seg_len`` (inclusive) and slopes
    from ``[-slope, slope]``; with ``alternate`` the slope sign flips at every
    breakpoint and its magnitude stays in ``[slope/2, slope]``.
    """
    out = np.empty(n, dtype=np.float64)
    out[0] = 0.0
    i = 0
    sign = 1.0
    while i < n - 1:
        m = int(rng.integers(seg_len[0], seg_len[1] + 1))
        if alternate:
            s = sign * rng.uniform(slope / 2, slope)
            sign = -sign
        else:
            s = rng.uniform(-slope, slope)
        end = min(i + m, n - 1)
        out[i + 1 : end + 1] = out[i] + s * np.arange(1, end - i + 1)
        i = end
    if noise:
        out = out + rng.normal(0.0, noise, n)
    return out


def zigzag(n: int, rng: np.random.Generator, amplitude: float = 5.0,
           slope: Tuple[float, float] = (1.5, 2.5)) -> Series:
    """Bounded triangle-like wave with integer breakpoints and no noise.

    Each leg heads to a random level in ``[amplitude/2, amplitude]`` on
    alternating sides of zero, so the series stays stationary and every
    breakpoint is a sharp slope reversal.
    """
    out = np.empty(n, dtype=np.float64)
    out[0] = 0.0
    i = 0
    up = True
    while i < n - 1:
        target = rng.uniform(amplitude / 2, amplitude) * (1.0 if up else -1.0)
        up = not up
        m = max(2, int(round(abs(target - out[i]) / rng.uniform(*slope))))
        s = (target - out[i]) / m
        end = min(i + m, n - 1)
        out[i + 1 : end + 1] = out[i] + s * np.arange(1, end - i + 1)
        i = end
    return out


def breakpoints(series: Series) -> List[int]:
    """Indices where the discrete slope changes (exact piecewise-linear data only)."""
    d = np.diff(series)
    return [i + 1 for i in range(len(d) - 1) if not math.isclose(d[i], d[i + 1], rel_tol=1e-9, abs_tol=1e-9)]


def random_walk(n: int, rng: np.random.Generator, step: float = 1.0) -> Series:
    return np.concatenate([[0.0], np.cumsum(rng.normal(0.0, step, n - 1))])


def synthetic_suite(length: int = 1000, seed: int = 0) -> Dict[str, List[Labeled]]:
    """Four small datasets (24 series) standing in for a UCR selection."""
    rng = np.random.default_rng(seed)
    suite: Dict[str, List[Labeled]] = {}
    suite["SynSine"] = [
        (str(c), sine(length, period=rng.uniform(60, 200), amplitude=rng.uniform(1, 5),
                      phase=rng.uniform(0, 2 * math.pi), noise=0.02, rng=rng))
        for c in range(6)
    ]
    suite["SynPiecewise"] = [
        (str(c), piecewise_linear(length, rng, (20, 80), slope=rng.uniform(0.5, 2.0), noise=0.05))
        for c in range(6)
    ]
    suite["SynChirp"] = []
    for c in range(6):
        t = np.arange(length) / length
        f0, f1 = rng.uniform(1, 3), rng.uniform(4, 8)
        x = np.sin(2 * math.pi * (f0 * t + 0.5 * (f1 - f0) * t * t) * rng.uniform(1.5, 2.5))
        suite["SynChirp"].append((str(c), 3.0 * x + rng.normal(0, 0.02, length)))
    suite["SynWalk"] = [(str(c), random_walk(length, rng, step=rng.uniform(0.2, 1.0))) for c in range(6)]
    return suite


def smooth_names() -> Tuple[str, ...]:
    """Datasets in `synthetic_suite` whose series are smooth."""
    return ("SynSine", "SynPiecewise", "SynChirp")
