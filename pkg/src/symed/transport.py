"""Sender-to-receiver transport.

Every message is a fixed 20-byte little-endian frame::

    offset  size  field
    0       1     magic (0x53, 'S')
    1       1     kind  (1 START, 2 POINT, 3 END)
    2       2     stream id (uint16)
    4       8     tick (uint64, logical sample index)
    12      8     value (float64)

START carries the stream's first value, each POINT one segment endpoint,
END closes the stream. Frames travel over an in-process queue or a TCP
byte stream.
"""

from __future__ import annotations

import enum
import math
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Tuple

from .compressor import CompressorConfig, EmittedEndpoint, OnlineCompressor
from .errors import ConfigError, FramingError, ProtocolError

MAGIC = 0x53
FRAME_SIZE = 20
_FMT = struct.Struct("<BBHQd")
assert _FMT.size == FRAME_SIZE


class Kind(enum.IntEnum):
    START = 1
    POINT = 2
    END = 3


@dataclass(frozen=True)
class Frame:
    kind: Kind
    stream_id: int = 0
    tick: int = 0
    value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not 0 <= self.stream_id <= 0xFFFF:
            raise FramingError(f"stream id {self.stream_id} out of uint16 range")
        if not 0 <= self.tick <= 0xFFFFFFFFFFFFFFFF:
            raise FramingError(f"tick {self.tick} out of uint64 range")


def encode_frame(f: Frame) -> bytes:
    return _FMT.pack(MAGIC, int(f.kind), f.stream_id, f.tick, f.value)


def decode_frame(data: bytes) -> Frame:
    if len(data) != FRAME_SIZE:
        raise FramingError(f"frame must be {FRAME_SIZE} bytes, got {len(data)}")
    magic, kind, sid, tick, value = _FMT.unpack(data)
    if magic != MAGIC:
        raise FramingError(f"bad magic byte 0x{magic:02x}")
    if kind not in (1, 2, 3):
        raise FramingError(f"unknown frame kind {kind}")
    return Frame(Kind(kind), sid, tick, value)


# --------------------------------------------------------------------------
# channels


@dataclass(frozen=True)
class ChannelConfig:
    mode: str = "inproc"  # "inproc" | "socket"
    address: Optional[str] = None  # "host:port" in socket mode
    clock: str = "logical"  # "logical" | "wall"
    sample_period: float = 0.01  # seconds per sample, wall clock only

    def __post_init__(self):
        if self.mode not in ("inproc", "socket"):
            raise ConfigError(f"unknown channel mode {self.mode!r}")
        if self.clock not in ("logical", "wall"):
            raise ConfigError(f"unknown clock {self.clock!r}")
        if self.mode == "inproc" and self.clock != "logical":
            raise ConfigError("the in-process channel only supports the logical clock")
        if self.mode == "socket" and not self.address:
            raise ConfigError("socket mode needs an address")
        if not self.sample_period > 0:
            raise ConfigError("sample_period must be positive")


class InProcChannel:
    """Single-producer single-consumer queue of encoded frames."""

    def __init__(self, maxsize: int = 0):
        self._q: queue.Queue = queue.Queue(maxsize)

    def send_bytes(self, data: bytes) -> None:
        self._q.put(data)

    def recv_bytes(self, timeout: Optional[float] = None) -> Optional[bytes]:
        return self._q.get(timeout=timeout)

    def close(self) -> None:
        pass


def parse_address(address: str) -> Tuple[str, int]:
    host, _, port = address.rpartition(":")
    if not port.isdigit():
        raise ConfigError(f"address must look like host:port, got {address!r}")
    return host or "127.0.0.1", int(port)


class SocketChannel:
    """Frames over a connected TCP socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    @classmethod
    def connect(cls, address: str, timeout: float = 10.0) -> "SocketChannel":
        sock = socket.create_connection(parse_address(address), timeout=timeout)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.settimeout(None)
        return cls(sock)

    def send_bytes(self, data: bytes) -> None:
        self.sock.sendall(data)

    def recv_bytes(self, timeout: Optional[float] = None) -> Optional[bytes]:
        buf = bytearray()
        while len(buf) < FRAME_SIZE:
            chunk = self.sock.recv(FRAME_SIZE - len(buf))
            if not chunk:
                if buf:
                    raise FramingError(f"connection closed mid-frame after {len(buf)} bytes")
                return None
            buf.extend(chunk)
        return bytes(buf)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class Listener:
    def __init__(self, address: str):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind(parse_address(address))
        self.sock.listen(1)

    @property
    def address(self) -> str:
        host, port = self.sock.getsockname()[:2]
        return f"{host}:{port}"

    def accept(self) -> SocketChannel:
        conn, _ = self.sock.accept()
        return SocketChannel(conn)

    def close(self) -> None:
        self.sock.close()


# --------------------------------------------------------------------------
# sender / receiver


class Sender:
    """Feeds raw samples through an `OnlineCompressor` and ships the endpoints."""

    def __init__(self, channel, config: CompressorConfig | None = None, stream_id: int = 0,
                 flush_on_close: bool = True):
        self.channel = channel
        self.compressor = OnlineCompressor(config)
        self.stream_id = stream_id
        self.flush_on_close = flush_on_close
        self.points_sent = 0
        self.compress_seconds = 0.0

    def _send(self, kind: Kind, tick: int, value: float) -> None:
        self.channel.send_bytes(encode_frame(Frame(kind, self.stream_id, tick, value)))

    def push(self, t: float) -> Optional[EmittedEndpoint]:
        first = self.compressor.ticks_seen == 0
        t0 = time.perf_counter()
        ep = self.compressor.feed(t)
        self.compress_seconds += time.perf_counter() - t0
        if first:
            self._send(Kind.START, 0, self.compressor.start_value)
        if ep is not None:
            self.send(ep)
        return ep

    def send(self, endpoint: EmittedEndpoint) -> None:
        self._send(Kind.POINT, endpoint.tick, endpoint.value)
        self.points_sent += 1

    def close(self) -> None:
        if self.flush_on_close:
            t0 = time.perf_counter()
            ep = self.compressor.flush()
            self.compress_seconds += time.perf_counter() - t0
            if ep is not None:
                self.send(ep)
        last = max(self.compressor.ticks_seen - 1, 0)
        self._send(Kind.END, last, 0.0)


class WallClockTicker:
    """Infers logical ticks from arrival times: ``tick += round(dt / sample_period)``."""

    def __init__(self, sample_period: float, clock: Callable[[], float] = time.monotonic):
        self.sample_period = sample_period
        self.clock = clock
        self.last_tick = 0
        self._last_arrival: Optional[float] = None

    def start(self, tick: int = 0) -> int:
        self._last_arrival = self.clock()
        self.last_tick = tick
        return tick

    def tick(self) -> int:
        now = self.clock()
        if self._last_arrival is None:
            raise ProtocolError("wall-clock ticker used before start")
        steps = max(1, int(math.floor((now - self._last_arrival) / self.sample_period + 0.5)))
        self._last_arrival = now
        self.last_tick += steps
        return self.last_tick


def iter_frames(channel, timeout: Optional[float] = None) -> Iterator[Frame]:
    while True:
        data = channel.recv_bytes(timeout)
        if data is None:
            return
        yield decode_frame(data)


def receive_loop(
    channel,
    on_point: Callable[[float, int], object],
    on_start: Callable[[float, int], object] | None = None,
    clock: str = "logical",
    sample_period: float = 0.01,
    timeout: Optional[float] = None,
    ticker: WallClockTicker | None = None,
) -> int:
    """Drain frames from ``channel`` until END, calling the handlers in order.

    Returns the number of POINT frames handled. Raises `ProtocolError` for a
    missing START, a repeated START, non-increasing ticks, or a stream that
    ends without END.
    """
    started = False
    last_tick = -1
    n = 0
    if clock == "wall" and ticker is None:
        ticker = WallClockTicker(sample_period)
    for f in iter_frames(channel, timeout):
        if f.kind is Kind.START:
            if started:
                raise ProtocolError("duplicate START frame")
            started = True
            last_tick = f.tick
            if ticker is not None:
                ticker.start(f.tick)
            if on_start is not None:
                on_start(f.value, f.tick)
        elif not started:
            raise ProtocolError(f"{f.kind.name} frame before START")
        elif f.kind is Kind.POINT:
            tick = ticker.tick() if ticker is not None else f.tick
            if tick <= last_tick:
                raise ProtocolError(f"tick {tick} does not advance past {last_tick}")
            last_tick = tick
            on_point(f.value, tick)
            n += 1
        else:
            return n
    raise ProtocolError("stream closed without END frame")


def stream_series(series: Iterable[float], channel, config: CompressorConfig | None = None,
                  stream_id: int = 0, sample_period: Optional[float] = None) -> Sender:
    """Push a whole series through a `Sender`, optionally paced in real time."""
    sender = Sender(channel, config, stream_id)
    for t in series:
        sender.push(t)
        if sample_period:
            time.sleep(sample_period)
    sender.close()
    return sender


def run_threaded(series, compressor_config: CompressorConfig, on_start, on_point) -> Sender:
    """Sender and receiver on separate threads joined by an `InProcChannel`."""
    ch = InProcChannel()
    box = {}

    def produce():
        try:
            box["sender"] = stream_series(series, ch, compressor_config)
        except BaseException as exc:  # surface sender failures to the caller
            box["error"] = exc
            ch.send_bytes(encode_frame(Frame(Kind.END)))

    th = threading.Thread(target=produce, name="symed-sender")
    th.start()
    try:
        receive_loop(ch, on_point, on_start)
    except ProtocolError:
        th.join()
        if "error" in box:
            raise box["error"]
        raise
    th.join()
    if "error" in box:
        raise box["error"]
    return box["sender"]
