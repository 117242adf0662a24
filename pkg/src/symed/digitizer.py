"""Receiver-side digitization: linear pieces to symbols.

Arriving endpoints become pieces ``(len, inc)``. After every new piece the
whole piece set is re-clustered with a k-means that is warm-started from the
previous centers, growing the number of clusters until every cluster's
variance is within ``tol**2`` (in standardized piece space) or the alphabet
limit is hit. Each cluster is one symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .compressor import Piece
from .errors import ConfigError, InvalidInputError, ProtocolError

KMEANS_MAX_ITER = 100


# --------------------------------------------------------------------------
# symbols


def label_to_symbol(label: int) -> str:
    if label < 0:
        raise ValueError(f"labels are non-negative, got {label}")
    if label < 26:
        return chr(ord("a") + label)
    if label < 52:
        return chr(ord("A") + label - 26)
    return f"s<{label}>"


def parse_symbols(text: str) -> List[int]:
    """Inverse of the rendering: ``"ab s<60>"``-style text back to labels."""
    labels = []
    i = 0
    while i < len(text):
        ch = text[i]
        if text.startswith("s<", i):
            j = text.index(">", i)
            labels.append(int(text[i + 2 : j]))
            i = j + 1
        elif "a" <= ch <= "z":
            labels.append(ord(ch) - ord("a"))
            i += 1
        elif "A" <= ch <= "Z":
            labels.append(ord(ch) - ord("A") + 26)
            i += 1
        elif ch.isspace():
            i += 1
        else:
            raise InvalidInputError(f"unexpected symbol character {ch!r} at position {i}")
    return labels


class SymbolString:
    """An immutable label sequence with its text rendering."""

    __slots__ = ("labels",)

    def __init__(self, labels: Iterable[int] = ()):
        self.labels: Tuple[int, ...] = tuple(int(x) for x in labels)

    @classmethod
    def parse(cls, text: str) -> "SymbolString":
        return cls(parse_symbols(text))

    @property
    def text(self) -> str:
        return "".join(label_to_symbol(x) for x in self.labels)

    def __str__(self):
        return self.text

    def __repr__(self):
        return f"SymbolString({self.text!r})"

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i):
        return self.labels[i]

    def __eq__(self, other):
        if isinstance(other, SymbolString):
            return self.labels == other.labels
        if isinstance(other, str):
            return self.text == other
        return NotImplemented

    def __hash__(self):
        return hash(self.labels)

    @property
    def alphabet_size(self) -> int:
        return len(set(self.labels))


# --------------------------------------------------------------------------
# standardized piece space


class PieceScaler(NamedTuple):
    """Per-coordinate affine map into the clustering space.

    Coordinates are z-scored with the statistics of the piece set, then the
    length coordinate is multiplied by ``scl``.
    """

    mean: np.ndarray
    std: np.ndarray
    scl: float

    @classmethod
    def fit(cls, pieces: np.ndarray, scl: float) -> "PieceScaler":
        mean = pieces.mean(axis=0)
        std = pieces.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)
        return cls(mean, std, float(scl))

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.scl, 1.0])

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1, 2)
        return (x - self.mean) / self.std * self.weights

    def inverse(self, z: np.ndarray) -> np.ndarray:
        """Map back to piece units; the length coordinate needs ``scl > 0``."""
        z = np.asarray(z, dtype=np.float64).reshape(-1, 2)
        w = self.weights
        out = np.empty_like(z)
        out[:, 1] = z[:, 1] / w[1] * self.std[1] + self.mean[1]
        if self.scl > 0.0:
            out[:, 0] = z[:, 0] / w[0] * self.std[0] + self.mean[0]
        else:
            out[:, 0] = np.nan
        return out


def get_tol_s(tol: float, pieces: np.ndarray | None = None) -> float:
    # pieces are already standardized when clustered, so no data-dependent rescaling
    return tol


def max_cluster_variance(points: np.ndarray, centers: np.ndarray, labels: Sequence[int]) -> float:
    """Largest mean squared distance of a cluster's members to its center.

    Empty clusters are skipped; with no members at all the result is 0.0.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    labels = np.asarray(labels, dtype=np.intp)
    if points.shape[0] == 0:
        return 0.0
    d2 = np.sum((points - centers[labels]) ** 2, axis=1)
    sums = np.bincount(labels, weights=d2, minlength=centers.shape[0])
    counts = np.bincount(labels, minlength=centers.shape[0])
    nonempty = counts > 0
    return float(np.max(sums[nonempty] / counts[nonempty]))


# --------------------------------------------------------------------------
# k-means


def _assign(points: np.ndarray, centers: np.ndarray, prior: np.ndarray | None) -> np.ndarray:
    d = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d, axis=1)
    if prior is not None:
        # on ties keep the previous assignment, so repaired clusters stay put
        ok = (prior >= 0) & (prior < centers.shape[0])
        idx = np.nonzero(ok)[0]
        keep = d[idx, prior[idx]] <= d[idx, labels[idx]]
        labels[idx[keep]] = prior[idx[keep]]
    return labels


def _repair_empty(points: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> None:
    k = centers.shape[0]
    counts = np.bincount(labels, minlength=k)
    for j in np.nonzero(counts == 0)[0]:
        d2 = np.sum((points - centers[labels]) ** 2, axis=1)
        movable = counts[labels] > 1
        if not movable.any():
            break
        d2 = np.where(movable, d2, -1.0)
        i = int(np.argmax(d2))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        centers[j] = points[i]


def kmeans(
    points: np.ndarray,
    init_centers: np.ndarray,
    prior_labels: np.ndarray | None = None,
    max_iter: int = KMEANS_MAX_ITER,
) -> Tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm from the given initial centers.

    Stops when assignments no longer change or after ``max_iter`` rounds.
    A cluster that ends up empty is reseeded at the point farthest from its
    own center (taken from a cluster with more than one member).

    Returns ``(centers, labels)``.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = np.array(init_centers, dtype=np.float64, copy=True).reshape(-1, 2)
    k = centers.shape[0]
    labels = None
    prior = None if prior_labels is None else np.asarray(prior_labels, dtype=np.intp)
    for _ in range(max_iter):
        new = _assign(points, centers, prior if labels is None else labels)
        _repair_empty(points, centers, new)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        nz = counts > 0
        centers[nz] = sums[nz] / counts[nz, None]
    return centers, labels


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        i = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(points[i])
        d2 = np.minimum(d2, np.sum((points - points[i]) ** 2, axis=1))
    return np.array(centers)


def _destandardize(scaler: PieceScaler, pieces: np.ndarray, centers_z: np.ndarray, labels: np.ndarray) -> np.ndarray:
    out = scaler.inverse(centers_z)
    if scaler.scl == 0.0:
        # 1-D clustering on increments: lengths are the member means
        k = centers_z.shape[0]
        counts = np.bincount(labels, minlength=k)
        sums = np.bincount(labels, weights=pieces[:, 0], minlength=k)
        out[:, 0] = np.where(counts > 0, sums / np.maximum(counts, 1), pieces[:, 0].mean())
    return out


def _check_params(tol: float, scl: float, k_min: int, k_max: int) -> None:
    if not (tol > 0.0) or not math.isfinite(tol):
        raise ConfigError(f"tol must be a positive finite number, got {tol!r}")
    if not (scl >= 0.0) or math.isinf(scl):
        raise ConfigError(f"scl must be finite and >= 0, got {scl!r}")
    if k_min < 1 or k_max < k_min:
        raise ConfigError(f"need 1 <= k_min <= k_max, got k_min={k_min}, k_max={k_max}")


def _as_pieces(pieces) -> np.ndarray:
    arr = np.asarray(pieces, dtype=np.float64).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise InvalidInputError("need at least one piece")
    return arr


# --------------------------------------------------------------------------
# online digitization


def digitize(
    pieces,
    centers,
    tol: float,
    scl: float = 1.0,
    k_min: int = 3,
    k_max: int = 100,
    rng: np.random.Generator | None = None,
    prior_labels: Sequence[int] | None = None,
) -> Tuple[SymbolString, np.ndarray]:
    """One online digitization step over all pieces received so far.

    ``centers`` are the previous call's centers (piece units). While fewer
    than ``k_min`` centers exist, every piece is its own cluster. Otherwise
    k-means is warm-started from the old centers with ``k = len(centers)``;
    if some cluster variance still exceeds ``tol**2`` one more center is
    added at the newest piece, and any further increase restarts from a
    random seeding. Old centers keep their labels; new ones get fresh labels.

    ``prior_labels`` (the previous labels of the older pieces) only break
    distance ties in favour of the existing assignment.

    Returns the symbol string for every piece and the new centers.
    """
    _check_params(tol, scl, k_min, k_max)
    P = _as_pieces(pieces)
    C = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    n = P.shape[0]

    if C.shape[0] < k_min:
        return SymbolString(range(n)), P.copy()

    rng = rng if rng is not None else np.random.default_rng(0)
    scaler = PieceScaler.fit(P, scl)
    Pz = scaler.transform(P)
    Cz_old = scaler.transform(C)
    bound = get_tol_s(tol, P) ** 2

    prior = None
    if prior_labels is not None:
        prior = np.full(n, -1, dtype=np.intp)
        pl = np.asarray(prior_labels, dtype=np.intp)[:n]
        prior[: pl.size] = pl

    k_o = C.shape[0]
    k = min(k_o, k_max, n) - 1
    err = math.inf
    Cz, L = Cz_old, None
    while k < k_max and k < n and err > bound:
        k += 1
        if k <= k_o:
            init = Cz_old[:k]
            Cz, L = kmeans(Pz, init, prior)
        elif k == k_o + 1:
            init = np.vstack([Cz_old, Pz[-1]])
            Cz, L = kmeans(Pz, init, prior)
        else:
            idx = rng.choice(n, size=k, replace=False)
            Cz, L = kmeans(Pz, Pz[idx])
            Cz, L = _match_identities(Cz, L, Cz_old)
        err = max_cluster_variance(Pz, Cz, L)

    return SymbolString(L), _destandardize(scaler, P, Cz, L)


def _match_identities(centers: np.ndarray, labels: np.ndarray, old: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Relabel a freshly seeded clustering so old centers keep their labels."""
    k = centers.shape[0]
    cost = np.sum((centers[:, None, :] - old[None, :, :]) ** 2, axis=2)
    rows, cols = linear_sum_assignment(cost)
    new_id = np.empty(k, dtype=np.intp)
    new_id[rows] = cols
    rest = np.setdiff1d(np.arange(k), rows)
    new_id[rest] = np.arange(old.shape[0], old.shape[0] + rest.size)
    out = np.empty_like(centers)
    out[new_id] = centers
    return out, new_id[labels]


# --------------------------------------------------------------------------
# offline baseline


def digitize_offline(
    pieces,
    tol: float,
    scl: float = 1.0,
    k_min: int = 3,
    k_max: int = 100,
    seed: int = 0,
) -> Tuple[SymbolString, np.ndarray]:
    """Batch digitization: the smallest k in ``[k_min, k_max]`` that meets the bound.

    With fewer pieces than ``k_min`` each piece gets its own symbol.
    Labels are renumbered in order of first appearance.
    """
    _check_params(tol, scl, k_min, k_max)
    P = _as_pieces(pieces)
    n = P.shape[0]
    if n <= k_min:
        return SymbolString(range(n)), P.copy()

    scaler = PieceScaler.fit(P, scl)
    Pz = scaler.transform(P)
    bound = get_tol_s(tol, P) ** 2
    rng = np.random.default_rng(seed)
    k_hi = min(k_max, n)
    for k in range(k_min, k_hi + 1):
        Cz, L = kmeans(Pz, _kmeans_pp_init(Pz, k, rng))
        if max_cluster_variance(Pz, Cz, L) <= bound:
            break

    C = _destandardize(scaler, P, Cz, L)
    order = list(dict.fromkeys(L.tolist()))
    order += [j for j in range(C.shape[0]) if j not in set(order)]
    remap = np.empty(C.shape[0], dtype=np.intp)
    remap[order] = np.arange(C.shape[0])
    return SymbolString(remap[L]), C[order]


# --------------------------------------------------------------------------
# receiver state


class LabelChange(NamedTuple):
    piece_index: int
    old_label: int
    new_label: int


@dataclass
class DigitizerConfig:
    tol: float = 0.4
    scl: float = 1.0
    k_min: int = 3
    k_max: int = 100
    seed: int = 0
    first_point_mode: str = "start"  # "start": anchor on t0; "zero": t_{-1} = 0

    def __post_init__(self):
        _check_params(self.tol, self.scl, self.k_min, self.k_max)
        if self.first_point_mode not in ("start", "zero"):
            raise ConfigError(f"first_point_mode must be 'start' or 'zero', got {self.first_point_mode!r}")


@dataclass
class DigitizerState:
    config: DigitizerConfig = field(default_factory=DigitizerConfig)
    pieces: List[Piece] = field(default_factory=list)
    centers: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    labels: List[int] = field(default_factory=list)
    last_value: Optional[float] = None
    last_tick: int = 0
    start_value: float = 0.0


class OnlineDigitizer:
    """Receiver loop body: turns (value, tick) pairs into an evolving symbol string."""

    def __init__(self, config: DigitizerConfig | None = None, **kwargs):
        if config is None:
            config = DigitizerConfig(**kwargs)
        self.state = DigitizerState(config=config)
        self.rng = np.random.default_rng(config.seed)
        self.events: List[LabelChange] = []
        self._P = np.empty((64, 2))
        if config.first_point_mode == "zero":
            self.state.last_value = 0.0

    @property
    def config(self) -> DigitizerConfig:
        return self.state.config

    @property
    def pieces(self) -> List[Piece]:
        return self.state.pieces

    @property
    def centers(self) -> np.ndarray:
        return self.state.centers

    @property
    def labels(self) -> List[int]:
        return self.state.labels

    @property
    def symbols(self) -> SymbolString:
        return SymbolString(self.state.labels)

    @property
    def start_value(self) -> float:
        return self.state.start_value

    def start(self, value: float, tick: int = 0) -> None:
        """Anchor the piece chain on the stream's first value."""
        st = self.state
        if st.pieces:
            raise ProtocolError("start() after pieces were received")
        st.last_tick = int(tick)
        if self.config.first_point_mode == "start":
            st.last_value = float(value)
            st.start_value = float(value)
        else:
            st.last_value = 0.0
            st.start_value = 0.0

    def receive(self, value: float, tick: int) -> SymbolString:
        st = self.state
        if st.last_value is None:
            raise ProtocolError("receive() before start()")
        tick = int(tick)
        if tick <= st.last_tick:
            raise ProtocolError(f"tick {tick} does not advance past {st.last_tick}")
        piece = Piece(float(tick - st.last_tick), float(value) - st.last_value)
        n = len(st.pieces)
        if n == self._P.shape[0]:
            self._P = np.vstack([self._P, np.empty_like(self._P)])
        self._P[n] = piece
        st.pieces.append(piece)

        cfg = self.config
        symbols, centers = digitize(
            self._P[: n + 1], st.centers, cfg.tol, cfg.scl, cfg.k_min, cfg.k_max,
            rng=self.rng, prior_labels=st.labels,
        )
        new = list(symbols.labels)
        for i, (a, b) in enumerate(zip(st.labels, new)):
            if a != b:
                self.events.append(LabelChange(i, a, b))
        st.labels = new
        st.centers = centers
        st.last_value = float(value)
        st.last_tick = tick
        return symbols


def receive(state: DigitizerState, value: float, tick: int, rng: np.random.Generator | None = None):
    """Functional form of :meth:`OnlineDigitizer.receive`; returns ``(symbols, new_state)``."""
    d = OnlineDigitizer(state.config)
    d.state = DigitizerState(
        config=state.config,
        pieces=list(state.pieces),
        centers=state.centers.copy(),
        labels=list(state.labels),
        last_value=state.last_value,
        last_tick=state.last_tick,
        start_value=state.start_value,
    )
    if rng is not None:
        d.rng = rng
    if state.pieces:
        d._P = np.asarray(state.pieces, dtype=np.float64).reshape(-1, 2)
    symbols = d.receive(value, tick)
    return symbols, d.state
