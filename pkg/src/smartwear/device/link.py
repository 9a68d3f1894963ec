"""Streaming a session over TCP and recording it on the other end.

The simulated device is the connecting side: :func:`stream_session` pushes
frames to a listening recorder, one session per connection.  A
:class:`RecordServer` accepts any number of concurrent device connections and
decodes each on its own thread, so one slow or broken link never stalls the
others.
"""
from __future__ import annotations

import json
import math
import os
import queue
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..sensorsim import CHANNELS, SensorModel
from .protocol import Frame, FrameParser, encode_frame
from .readout import AdcConfig, DividerConfig, codes_to_signals, strain_to_codes

BATCH = 13


class TransportError(ConnectionError):
    def __init__(self, message, frames_sent=0):
        super().__init__(message)
        self.frames_sent = frames_sent


@dataclass
class StreamSummary:
    frames_sent: int
    samples_sent: int
    seconds: float
    skipped_seqs: list = field(default_factory=list)


def session_frames(channels, fs=130.0, sensor=SensorModel(), div=DividerConfig(), adc=AdcConfig(),
                   batch=BATCH):
    """Frames for a 3 x L strain array, in order."""
    codes = strain_to_codes(np.asarray(channels, dtype=float), sensor, div, adc)
    n = codes.shape[1]
    for seq, start in enumerate(range(0, n, batch)):
        chunk = codes[:, start:start + batch].T
        yield Frame(seq, int(round(start * 1000.0 / fs)), tuple(map(tuple, chunk)))


def flip_bit(raw: bytes, bit: int) -> bytes:
    b = bytearray(raw)
    b[bit // 8] ^= 1 << (bit % 8)
    return bytes(b)


def stream_session(session, sensor=SensorModel(), div=DividerConfig(), adc=AdcConfig(),
                   endpoint=("127.0.0.1", 5555), rate_multiplier=math.inf, batch=BATCH,
                   drop_seqs=(), corrupt_seqs=(), connect_timeout=5.0) -> StreamSummary:
    """Send ``session`` to ``endpoint`` as framed ADC codes.

    ``rate_multiplier`` 1 paces frames in real time; ``math.inf`` sends as fast
    as possible.  ``drop_seqs`` / ``corrupt_seqs`` inject faults for testing:
    dropped frames are never sent, corrupted ones have one payload bit flipped.
    """
    if not rate_multiplier > 0:
        raise ValueError("rate_multiplier must be positive")
    fs = float(session.fs)
    drop, corrupt = set(drop_seqs), set(corrupt_seqs)
    t_start = time.perf_counter()
    sent = samples = 0
    try:
        sock = socket.create_connection(tuple(endpoint), timeout=connect_timeout)
    except OSError as exc:
        raise TransportError(f"cannot connect to {endpoint}: {exc}", 0) from exc
    try:
        with sock:
            sock.settimeout(None)
            for frame in session_frames(session.channels, fs, sensor, div, adc, batch):
                if math.isfinite(rate_multiplier):
                    due = t_start + frame.seq * batch / fs / rate_multiplier
                    delay = due - time.perf_counter()
                    if delay > 0:
                        time.sleep(delay)
                if frame.seq in drop:
                    continue
                raw = encode_frame(frame)
                if frame.seq in corrupt:
                    raw = flip_bit(raw, 8 * 16 + 5)
                sock.sendall(raw)
                sent += 1
                samples += frame.count
            sock.shutdown(socket.SHUT_WR)
    except OSError as exc:
        raise TransportError(f"link to {endpoint} failed after {sent} frames: {exc}", sent) from exc
    return StreamSummary(sent, samples, time.perf_counter() - t_start, sorted(drop))


@dataclass
class RecordedSession:
    fs: float
    sample_index: np.ndarray
    codes: np.ndarray
    voltage: np.ndarray
    resistance: np.ndarray
    strain: np.ndarray
    seqs: list
    gaps: list
    dropped_count: int
    truncated: bool
    out_of_order: int = 0
    provenance: str = "recorded"

    @property
    def frames_received(self):
        return len(self.seqs)

    def manifest(self):
        return {
            "fs": self.fs,
            "provenance": self.provenance,
            "n_samples": int(len(self.sample_index)),
            "frames_received": self.frames_received,
            "gaps": [list(g) for g in self.gaps],
            "dropped_count": self.dropped_count,
            "truncated": self.truncated,
        }


def assemble(frames, dropped=0, truncated=False, fs=130.0, sensor=SensorModel(), div=DividerConfig(),
             adc=AdcConfig(), batch=BATCH) -> RecordedSession:
    """Reconstruct signals from received frames; gaps are missing seq ranges."""
    seqs, gaps, chunks, index = [], [], [], []
    expected, out_of_order = 0, 0
    for f in frames:
        if seqs and f.seq <= seqs[-1]:
            out_of_order += 1
            continue
        if f.seq > expected:
            gaps.append((expected, f.seq - 1))
        expected = f.seq + 1
        seqs.append(f.seq)
        chunks.append(f.codes())
        index.append(f.seq * batch + np.arange(f.count))
    codes = np.concatenate(chunks).T if chunks else np.zeros((3, 0), dtype=np.uint16)
    idx = np.concatenate(index) if index else np.zeros(0, dtype=np.int64)
    v, r, eps = codes_to_signals(codes, sensor, div, adc)
    return RecordedSession(fs, idx, codes, v, r, eps, seqs, gaps, dropped, truncated, out_of_order)


def _receive(conn, fs, sensor, div, adc, batch, chunk=65536):
    parser = FrameParser()
    frames = []
    while True:
        try:
            data = conn.recv(chunk)
        except (ConnectionResetError, socket.timeout):
            data = b""
        if not data:
            break
        frames.extend(parser.feed(data))
    tail, truncated = parser.close()
    frames.extend(tail)
    return assemble(frames, parser.dropped, truncated, fs, sensor, div, adc, batch)


class RecordServer:
    """Listening recorder; each accepted connection becomes one RecordedSession."""

    def __init__(self, host="127.0.0.1", port=0, fs=130.0, sensor=SensorModel(), div=DividerConfig(),
                 adc=AdcConfig(), batch=BATCH, recv_timeout=30.0):
        self.fs, self.sensor, self.div, self.adc, self.batch = fs, sensor, div, adc, batch
        self.recv_timeout = recv_timeout
        self._sock = socket.create_server((host, port))
        self._sock.settimeout(0.2)
        self.results = queue.Queue()
        self._stop = threading.Event()
        self._threads = []
        self._acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        self._acceptor.start()

    @property
    def endpoint(self):
        return self._sock.getsockname()[:2]

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, addr = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            t = threading.Thread(target=self._handle, args=(conn, addr), daemon=True)
            t.start()
            self._threads.append(t)

    def _handle(self, conn, addr):
        with conn:
            conn.settimeout(self.recv_timeout)
            rec = _receive(conn, self.fs, self.sensor, self.div, self.adc, self.batch)
        self.results.put((addr, rec))

    def next_session(self, timeout=None) -> RecordedSession:
        return self.results.get(timeout=timeout)[1]

    def close(self):
        self._stop.set()
        self._sock.close()
        self._acceptor.join(timeout=2)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def record(endpoint=("127.0.0.1", 5555), adc=AdcConfig(), sensor=SensorModel(), div=DividerConfig(),
           fs=130.0, timeout=None) -> RecordedSession:
    """Listen on ``endpoint`` and return the first complete session received."""
    with RecordServer(endpoint[0], endpoint[1], fs, sensor, div, adc) as server:
        return server.next_session(timeout=timeout)


def save_recorded(rec: RecordedSession, path_stem, strain_max=0.10, extra=None):
    """CSV body (index, abd, chl, chr) + JSON sidecar with provenance "recorded"."""
    stem = os.fspath(path_stem)
    strain = np.clip(rec.strain, 0.0, strain_max)
    with open(stem + ".csv", "w") as fh:
        fh.write("index," + ",".join(CHANNELS) + "\n")
        for i, row in zip(rec.sample_index, strain.T):
            fh.write(f"{int(i)}," + ",".join(f"{v:.6g}" for v in row) + "\n")
    meta = rec.manifest()
    meta.update(extra or {})
    with open(stem + ".json", "w") as fh:
        json.dump(meta, fh, indent=2)
    return stem + ".csv", stem + ".json"
