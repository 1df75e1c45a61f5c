"""Live two-size UDP probing against a dumb echo reflector.

Each probe datagram carries an 8-byte big-endian serial and an 8-byte
big-endian monotonic send timestamp (nanoseconds), zero-padded to the
probe size.  The reflector echoes datagrams byte-for-byte; echoes are
matched to probes by serial alone and timed entirely by this host's
monotonic clock, so the reflector needs no synchronized time.

Delays measured this way are round trips.  Size-difference estimation
cancels the reverse path only if it is symmetric and uncongested;
results carry a caveat saying so.
"""

from __future__ import annotations

import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from .errors import BindFailure, ClockError, Unreachable
from .model import (
    MAX_UNFRAGMENTED_PAYLOAD,
    Delay,
    DelaySample,
    Direction,
    PacketSize,
    ProbePair,
)

HEADER = struct.Struct(">QQ")  # serial, monotonic send time in ns
MIN_PROBE_BYTES = HEADER.size
RECV_POLL_S = 0.05

RTT_CAVEAT = (
    "delays are round trips timed by the sender's monotonic clock; the "
    "estimate attributes the size effect to the forward path, which holds "
    "only if the reverse path is symmetric and uncongested"
)


@dataclass(frozen=True)
class ProbeConfig:
    """Target and shape of one probing session."""

    host: str
    port: int
    w1: PacketSize = PacketSize(100)
    w2: PacketSize = PacketSize(1100)
    count: int = 100
    spacing_s: float = 0.1
    timeout_s: float = 2.0

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port must be in [1, 65535], got {self.port}")
        if self.w1.bytes < MIN_PROBE_BYTES:
            raise ValueError(f"w1 must fit the {MIN_PROBE_BYTES}-byte probe header")
        if self.w1.bytes >= self.w2.bytes:
            raise ValueError(f"w1 must be smaller than w2, got {self.w1.bytes} >= {self.w2.bytes}")
        if self.w2.bytes > MAX_UNFRAGMENTED_PAYLOAD:
            raise ValueError(
                f"w2 must stay within one unfragmented packet "
                f"({MAX_UNFRAGMENTED_PAYLOAD} bytes), got {self.w2.bytes}"
            )
        if self.count < 0:
            raise ValueError(f"count must be >= 0, got {self.count}")
        if self.spacing_s <= 0 or self.timeout_s <= 0:
            raise ValueError("spacing_s and timeout_s must be > 0")


@dataclass
class ProbeResult:
    """Paired round-trip samples plus loss accounting."""

    pairs: list[ProbePair]
    sent: int
    received: int
    lost_pairs: int
    unknown_serials: int
    send_monotonic_ns: list[int] = field(default_factory=list)
    caveat: str = RTT_CAVEAT


class Reflector:
    """UDP echo server; reflects every datagram back to its sender."""

    def __init__(self, host: str = "0.0.0.0", port: int = 0):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            self._sock.bind((host, port))
        except OSError as exc:
            self._sock.close()
            raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
        self._sock.settimeout(RECV_POLL_S)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()

    def serve_forever(self) -> None:
        """Echo until :meth:`stop` is called (or the thread is killed)."""
        while not self._stop.is_set():
            try:
                data, addr = self._sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                self._sock.sendto(data, addr)
            except OSError:
                continue

    def start(self) -> "Reflector":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2 * RECV_POLL_S + 1.0)
        self._sock.close()

    def __enter__(self) -> "Reflector":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def _build_probe(serial: int, size: int, now_ns: int) -> bytes:
    return HEADER.pack(serial, now_ns) + b"\x00" * (size - HEADER.size)


def probe(cfg: ProbeConfig) -> ProbeResult:
    """Send ``cfg.count`` interleaved small/large probes and time echoes.

    Packets alternate w1, w2, w1, w2, ... with ``cfg.spacing_s`` between
    sends; serials increase strictly.  A pair is dropped (and counted
    lost) when either echo is missing after ``cfg.timeout_s``; echoes
    with unknown serials are discarded and counted.
    """
    if cfg.count == 0:
        return ProbeResult(pairs=[], sent=0, received=0, lost_pairs=0, unknown_serials=0)

    try:
        target = (socket.gethostbyname(cfg.host), cfg.port)
    except OSError as exc:
        raise Unreachable(f"cannot resolve {cfg.host!r}: {exc}") from exc

    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.settimeout(RECV_POLL_S)

    send_ns: dict[int, int] = {}
    sent_wall: dict[int, float] = {}
    rtt_ns: dict[int, int] = {}
    unknown = 0
    clock_error: list[str] = []
    lock = threading.Lock()
    done = threading.Event()

    def receiver() -> None:
        nonlocal unknown
        while not done.is_set():
            try:
                data, _addr = sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            now = time.monotonic_ns()
            if len(data) < HEADER.size:
                with lock:
                    unknown += 1
                continue
            serial, _ = HEADER.unpack_from(data)
            with lock:
                started = send_ns.get(serial)
                if started is None or serial in rtt_ns:
                    unknown += 1
                    continue
                if now < started:
                    clock_error.append(f"echo for serial {serial} arrived {started - now} ns before its send")
                    done.set()
                    return
                rtt_ns[serial] = now - started

    thread = threading.Thread(target=receiver, daemon=True)
    thread.start()

    sizes = (cfg.w1.bytes, cfg.w2.bytes)
    send_times: list[int] = []
    serial = 0
    try:
        next_send = time.monotonic()
        for _pair_idx in range(cfg.count):
            for size in sizes:
                delay = next_send - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                serial += 1
                now = time.monotonic_ns()
                packet = _build_probe(serial, size, now)
                with lock:
                    send_ns[serial] = now
                    sent_wall[serial] = time.time()
                sock.sendto(packet, target)
                send_times.append(now)
                next_send += cfg.spacing_s
        # linger for stragglers
        deadline = time.monotonic() + cfg.timeout_s
        while time.monotonic() < deadline and not done.is_set():
            with lock:
                if len(rtt_ns) == serial:
                    break
            time.sleep(RECV_POLL_S / 5)
    finally:
        done.set()
        thread.join(timeout=2 * RECV_POLL_S + 1.0)
        sock.close()

    if clock_error:
        raise ClockError(clock_error[0])
    if not rtt_ns:
        raise Unreachable(f"no echoes from {cfg.host}:{cfg.port} after {serial} probes")

    pairs = []
    lost = 0
    for pair_idx in range(cfg.count):
        s_small, s_large = 2 * pair_idx + 1, 2 * pair_idx + 2
        if s_small not in rtt_ns or s_large not in rtt_ns:
            lost += 1
            continue
        pairs.append(
            ProbePair(
                small=DelaySample(
                    packet_size=cfg.w1,
                    delay=Delay(rtt_ns[s_small] / 1e9),
                    serial=s_small,
                    sent_at=sent_wall[s_small],
                    direction=Direction.FORWARD,
                ),
                large=DelaySample(
                    packet_size=cfg.w2,
                    delay=Delay(rtt_ns[s_large] / 1e9),
                    serial=s_large,
                    sent_at=sent_wall[s_large],
                    direction=Direction.FORWARD,
                ),
            )
        )
    return ProbeResult(
        pairs=pairs,
        sent=serial,
        received=len(rtt_ns),
        lost_pairs=lost,
        unknown_serials=unknown,
        send_monotonic_ns=send_times,
    )
