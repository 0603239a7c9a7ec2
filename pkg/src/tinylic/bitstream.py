"""The TLIC bitstream container.

Layout (all integers big-endian):

    magic "TLIC" | version u8 | orig width u32 | orig height u32 |
    SF u16 (Q8.8) | config id u8 |
    z-chunk (u32 length + bytes) |
    10 y-chunks (u32 length + bytes each)

parse(serialize(b)) == b, and chunk lengths must account for the whole
file; anything else is a format error.
"""

import struct
from dataclasses import dataclass

from .errors import FormatError

MAGIC = b"TLIC"
VERSION = 1
NUM_Y_CHUNKS = 10
HEADER_BYTES = 4 + 1 + 4 + 4 + 2 + 1


@dataclass(frozen=True)
class Bitstream:
    width: int
    height: int
    sf_fixed: int
    config_id: int
    z_chunk: bytes
    y_chunks: tuple

    def __post_init__(self):
        if not 1 <= self.width <= 0xFFFFFFFF or not 1 <= self.height <= 0xFFFFFFFF:
            raise FormatError(f"bad image dims {self.width}x{self.height}")
        if not 1 <= self.sf_fixed <= 0xFFFF:
            raise FormatError(f"SF field out of range: {self.sf_fixed}")
        if not 0 <= self.config_id <= 0xFF:
            raise FormatError(f"config id must fit a byte: {self.config_id}")
        if len(self.y_chunks) != NUM_Y_CHUNKS:
            raise FormatError(f"need {NUM_Y_CHUNKS} y-chunks, got {len(self.y_chunks)}")
        object.__setattr__(self, "z_chunk", bytes(self.z_chunk))
        object.__setattr__(self, "y_chunks", tuple(bytes(c) for c in self.y_chunks))

    @property
    def chunks(self):
        return (self.z_chunk, *self.y_chunks)

    def payload_bits(self):
        return 8 * sum(len(c) for c in self.chunks)

    def header_bits(self):
        return 8 * (HEADER_BYTES + 4 * len(self.chunks))

    def total_bits(self):
        return self.payload_bits() + self.header_bits()


def serialize(bs: Bitstream) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack(">B", VERSION)
    out += struct.pack(">II", bs.width, bs.height)
    out += struct.pack(">H", bs.sf_fixed)
    out += struct.pack(">B", bs.config_id)
    for chunk in bs.chunks:
        out += struct.pack(">I", len(chunk))
        out += chunk
    return bytes(out)


def parse(data: bytes) -> Bitstream:
    view = memoryview(bytes(data))

    def take(n, what):
        nonlocal view
        if len(view) < n:
            raise FormatError(f"bitstream truncated while reading {what}")
        piece, view = view[:n], view[n:]
        return bytes(piece)

    if take(4, "magic") != MAGIC:
        raise FormatError("not a TLIC bitstream (bad magic)")
    (version,) = struct.unpack(">B", take(1, "version"))
    if version != VERSION:
        raise FormatError(f"unsupported TLIC version {version}")
    width, height = struct.unpack(">II", take(8, "dims"))
    (sf_fixed,) = struct.unpack(">H", take(2, "SF"))
    (config_id,) = struct.unpack(">B", take(1, "config id"))
    chunks = []
    for i in range(1 + NUM_Y_CHUNKS):
        (length,) = struct.unpack(">I", take(4, f"chunk {i} length"))
        chunks.append(take(length, f"chunk {i} payload"))
    if len(view):
        raise FormatError(f"{len(view)} trailing bytes after the last chunk")
    return Bitstream(
        width=width,
        height=height,
        sf_fixed=sf_fixed,
        config_id=config_id,
        z_chunk=chunks[0],
        y_chunks=tuple(chunks[1:]),
    )
