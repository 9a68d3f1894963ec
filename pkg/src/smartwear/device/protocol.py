"""Bit-exact frame codec for the sensor link.

Frame layout, little-endian::

    offset  size  field
    0       2     magic 0x53 0x57 ("SW")
    2       1     version 0x01
    3       4     seq      u32
    7       8     t0_ms    u64   session-relative ms of the first sample
    15      1     count    u8    samples in the batch
    16      6*n   payload  n x (abd, chl, chr) u16 ADC codes
    16+6n   2     crc      u16   CRC-16/CCITT-FALSE over bytes [0, 16+6n)
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SW"
VERSION = 1
HEADER = struct.Struct("<2sBIQB")
HEADER_SIZE = HEADER.size
CRC_SIZE = 2
ADC_MAX = 4095


class FrameError(ValueError):
    pass


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class BadCrc(FrameError):
    pass


class Truncated(FrameError):
    pass


class BadLength(FrameError):
    """Buffer longer than the frame its header declares."""


def _crc_table():
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
        table.append(crc)
    return tuple(table)


_TABLE = _crc_table()


def crc16_ccitt_false(data: bytes, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xorout."""
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


@dataclass(frozen=True)
class Frame:
    seq: int
    t0_ms: int
    samples: tuple  # ((abd, chl, chr), ...) ADC codes

    def __post_init__(self):
        if not 0 <= self.seq < 2 ** 32:
            raise ValueError("seq must fit in u32")
        if not 0 <= self.t0_ms < 2 ** 64:
            raise ValueError("t0_ms must fit in u64")
        samples = tuple(tuple(int(c) for c in s) for s in self.samples)
        if len(samples) > 255:
            raise ValueError("at most 255 samples per frame")
        for s in samples:
            if len(s) != 3 or min(s) < 0 or max(s) > ADC_MAX:
                raise ValueError(f"invalid ADC triplet {s}")
        object.__setattr__(self, "samples", samples)

    @property
    def count(self):
        return len(self.samples)

    def codes(self):
        return np.array(self.samples, dtype=np.uint16).reshape(-1, 3)


def frame_size(count: int) -> int:
    return HEADER_SIZE + 6 * count + CRC_SIZE


def encode_frame(frame: Frame) -> bytes:
    body = HEADER.pack(MAGIC, VERSION, frame.seq, frame.t0_ms, frame.count)
    body += struct.pack(f"<{3 * frame.count}H", *(c for s in frame.samples for c in s))
    return body + struct.pack("<H", crc16_ccitt_false(body))


def check_header(buf) -> int:
    """Validate magic/version of a header; returns the declared sample count."""
    if len(buf) < HEADER_SIZE:
        if buf[:len(MAGIC)] != MAGIC[:len(buf)]:
            raise BadMagic("bad magic")
        raise Truncated(f"need {HEADER_SIZE} header bytes, have {len(buf)}")
    magic, version, _, _, count = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    return count


def decode_frame(buf: bytes) -> Frame:
    """Decode exactly one frame occupying the whole buffer."""
    buf = bytes(buf)
    count = check_header(buf)
    need = frame_size(count)
    if len(buf) < need:
        raise Truncated(f"frame needs {need} bytes, have {len(buf)}")
    (crc,) = struct.unpack_from("<H", buf, need - CRC_SIZE)
    if crc16_ccitt_false(buf[:need - CRC_SIZE]) != crc:
        raise BadCrc("CRC mismatch")
    if len(buf) > need:
        raise BadLength(f"frame declares {need} bytes, buffer has {len(buf)}")
    _, _, seq, t0_ms, _ = HEADER.unpack_from(buf)
    codes = struct.unpack_from(f"<{3 * count}H", buf, HEADER_SIZE)
    for c in codes:
        if c > ADC_MAX:
            raise BadCrc("ADC code out of range despite valid CRC")
    samples = tuple(codes[i:i + 3] for i in range(0, 3 * count, 3))
    return Frame(seq, t0_ms, samples)


class FrameParser:
    """Incremental parser for a byte stream of frames.

    Corrupted frames are skipped by scanning for the next magic+version that
    starts a CRC-valid frame.  ``dropped`` counts frames rejected on the way.
    """

    def __init__(self):
        self.buf = bytearray()
        self.dropped = 0
        self.skipped_bytes = 0
        self._resyncing = False

    def feed(self, data: bytes):
        self.buf += data
        out = []
        while True:
            frame = self._next()
            if frame is None:
                return out
            out.append(frame)

    def _resync(self):
        if not self._resyncing:
            self.dropped += 1
            self._resyncing = True
        nxt = self.buf.find(MAGIC + bytes([VERSION]), 1)
        cut = nxt if nxt > 0 else max(len(self.buf) - 2, 1)
        self.skipped_bytes += cut
        del self.buf[:cut]

    def _next(self):
        while self.buf:
            try:
                count = check_header(bytes(self.buf[:HEADER_SIZE]))
            except Truncated:
                return None
            except FrameError:
                self._resync()
                continue
            need = frame_size(count)
            if len(self.buf) < need:
                return None
            try:
                frame = decode_frame(bytes(self.buf[:need]))
            except FrameError:
                self._resync()
                continue
            del self.buf[:need]
            self._resyncing = False
            return frame
        return None

    def close(self):
        """Flush at end of stream; returns (frames, truncated)."""
        out = []
        while self.buf:
            frame = self._next()
            if frame is not None:
                out.append(frame)
                continue
            if not self.buf:
                break
            if self.buf.find(MAGIC + bytes([VERSION]), 1) > 0:
                self._resync()
                continue
            break
        truncated = bool(self.buf)
        if truncated:
            self.skipped_bytes += len(self.buf)
            self.buf.clear()
        return out, truncated

    @property
    def pending(self):
        return len(self.buf)
