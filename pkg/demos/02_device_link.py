"""
Readout electronics and the framed link
=======================================

Strain becomes resistance, a divider voltage and a 12-bit code.  Codes travel
in CRC-protected frames of 13 samples over TCP.  The recorder rebuilds the
strain and reports any missing frames as gaps.
"""

import numpy as np

from smartwear.device import (BadCrc, Frame, RecordServer, crc16_ccitt_false, decode_frame, encode_frame,
                              strain_error_bound, stream_session)
from smartwear.sensorsim import SUBJECTS, GeneratorConfig, class_spec, generate_session

print(f"CRC-16/CCITT-FALSE of '123456789': {crc16_ccitt_false(b'123456789'):#06x}")

frame = Frame(seq=3, t0_ms=300, samples=((100, 2048, 4095),))
raw = encode_frame(frame)
print(f"one-sample frame is {len(raw)} bytes: {raw.hex()}")
flipped = bytearray(raw)
flipped[17] ^= 0x10
try:
    decode_frame(bytes(flipped))
except BadCrc as exc:
    print("single bit flip rejected:", exc)

session = generate_session(GeneratorConfig(seed=1), class_spec(5), SUBJECTS[0], session_id="demo")

# a clean transfer reconstructs strain to within one ADC step
with RecordServer() as server:
    sent = stream_session(session, endpoint=server.endpoint)
    rec = server.next_session(timeout=30)
err = np.abs(rec.strain - session.channels)
print(f"sent {sent.frames_sent} frames; max error {err.max():.2e}, "
      f"within bound everywhere: {bool(np.all(err <= strain_error_bound(session.channels)))}")

# dropped and corrupted frames show up as gaps in the sequence numbers
with RecordServer() as server:
    stream_session(session, endpoint=server.endpoint, drop_seqs=[10, 11], corrupt_seqs=[50])
    rec = server.next_session(timeout=30)
print(f"gaps {rec.gaps}, frames rejected by the parser {rec.dropped_count}, samples kept {len(rec.sample_index)}")
