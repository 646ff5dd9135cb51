"""
Binary framing for envelopes on the socket backend.

Every frame is a fixed 40-byte little-endian header followed by `length`
little-endian signed 64-bit payload elements:

    offset  size  field
    0       4     magic 0x4D534F52
    4       1     version
    5       1     element_type
    6       2     padding (zero)
    8       4     message_tag
    12      4     source_rank
    16      4     dest_rank
    20      4     padding (zero), aligns length
    24      8     length (element count)
    32      8     reserved (zero)
"""
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

MAGIC = 0x4D534F52
VERSION = 1
ELEMENT_INT64 = 1

HEADER = struct.Struct("<IBBHIIIIQQ")
HEADER_SIZE = HEADER.size  # 40
PAYLOAD_DTYPE = np.dtype("<i8")

MAX_U32 = 2**32 - 1


class EnvelopeError(ValueError):
    """A frame or envelope that violates the wire format."""


@dataclass
class Envelope:
    """One point-to-point message."""
    payload: list
    message_tag: int
    source_rank: int
    dest_rank: int
    element_type: int = ELEMENT_INT64
    length: int = field(default=-1)

    def __post_init__(self):
        if self.length == -1:
            self.length = len(self.payload)
        if self.length != len(self.payload):
            raise EnvelopeError(f"Envelope length {self.length} does not match payload of {len(self.payload)}.")
        if self.source_rank == self.dest_rank:
            raise EnvelopeError(f"Envelope source and destination are both rank {self.source_rank}.")
        if self.element_type != ELEMENT_INT64:
            raise EnvelopeError(f"Unsupported element type {self.element_type}.")
        for name in ("message_tag", "source_rank", "dest_rank"):
            value = getattr(self, name)
            if not 0 <= value <= MAX_U32:
                raise EnvelopeError(f"{name} {value} does not fit in an unsigned 32-bit field.")


def encode(envelope: Envelope) -> bytes:
    header = HEADER.pack(
        MAGIC, VERSION, envelope.element_type, 0,
        envelope.message_tag, envelope.source_rank, envelope.dest_rank, 0,
        envelope.length, 0,
    )
    try:
        body = np.asarray(envelope.payload, dtype=PAYLOAD_DTYPE).tobytes()
    except OverflowError as e:
        raise EnvelopeError(f"Payload value does not fit in a signed 64-bit integer: {e}") from e
    return header + body


def decode_header(raw: bytes) -> tuple:
    """Validates a header and returns (element_type, tag, source, dest, length)."""
    if len(raw) != HEADER_SIZE:
        raise EnvelopeError(f"Header must be {HEADER_SIZE} bytes, got {len(raw)}.")
    magic, version, element_type, _, tag, source, dest, _, length, _ = HEADER.unpack(raw)
    if magic != MAGIC:
        raise EnvelopeError(f"Bad magic 0x{magic:08X}.")
    if version != VERSION:
        raise EnvelopeError(f"Unsupported wire version {version}.")
    return element_type, tag, source, dest, length


def decode(frame: bytes) -> Envelope:
    element_type, tag, source, dest, length = decode_header(frame[:HEADER_SIZE])
    body = frame[HEADER_SIZE:]
    if len(body) != length * PAYLOAD_DTYPE.itemsize:
        raise EnvelopeError(f"Frame declares {length} elements but carries {len(body)} payload bytes.")
    payload = np.frombuffer(body, dtype=PAYLOAD_DTYPE).tolist()
    return Envelope(payload=payload, message_tag=tag, source_rank=source, dest_rank=dest,
                    element_type=element_type, length=length)


def _read_exact(stream, count: int) -> bytes:
    data = stream.read(count)
    if data is None or len(data) != count:
        raise EOFError(f"Stream ended after {0 if data is None else len(data)} of {count} bytes.")
    return data


def read_envelope(stream):
    """
    Reads one frame from a binary file-like stream.
    Returns None on a clean end of stream (no partial header).
    """
    raw = stream.read(HEADER_SIZE)
    if not raw:
        return None
    if len(raw) != HEADER_SIZE:
        raise EOFError(f"Stream ended inside a header ({len(raw)} of {HEADER_SIZE} bytes).")
    length = decode_header(raw)[4]
    body = _read_exact(stream, length * PAYLOAD_DTYPE.itemsize) if length else b""
    return decode(raw + body)
