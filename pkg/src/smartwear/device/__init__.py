"""Simulated readout electronics and the framed sensor link."""
from .link import (BATCH, RecordedSession, RecordServer, StreamSummary, TransportError, assemble,
                   record, save_recorded, session_frames, stream_session)
from .protocol import (BadCrc, BadLength, BadMagic, BadVersion, Frame, FrameError, FrameParser,
                       Truncated, crc16_ccitt_false, decode_frame, encode_frame)
from .readout import (AdcConfig, DividerConfig, adc_decode, adc_encode, codes_to_signals,
                      divider_resistance, divider_voltage, strain_error_bound, strain_to_codes)

__all__ = [
    "BATCH", "RecordedSession", "RecordServer", "StreamSummary", "TransportError", "assemble",
    "record", "save_recorded", "session_frames", "stream_session", "BadCrc", "BadLength", "BadMagic",
    "BadVersion", "Frame", "FrameError", "FrameParser", "Truncated", "crc16_ccitt_false",
    "decode_frame", "encode_frame", "AdcConfig", "DividerConfig", "adc_decode", "adc_encode",
    "codes_to_signals", "divider_resistance", "divider_voltage", "strain_error_bound",
    "strain_to_codes",
]
