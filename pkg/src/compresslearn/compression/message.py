"""Compression messages and their frozen wire format.

Wire layout, all integers little-endian:

========  =======================================================
bytes     field
========  =======================================================
2         scheme id (u16)
4         number of sample references (u32)
4 * n     sample references, u32 each
4         number of payload bits (u32)
ceil(t/8) payload bits packed LSB-first within each byte
========  =======================================================

Within the payload, multi-bit integers are written least significant bit
first via :class:`BitWriter` and read back symmetrically.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import MessageSizeError, ValidationError

SCHEME_G1D = 1
SCHEME_G1D_ROBUST = 2
SCHEME_GD = 3
SCHEME_PRODUCT = 4
SCHEME_MIXTURE = 5

_KNOWN_SCHEMES = (SCHEME_G1D, SCHEME_G1D_ROBUST, SCHEME_GD,
                  SCHEME_PRODUCT, SCHEME_MIXTURE)


class BitWriter:
    """Accumulates bits; integers are appended least significant bit first."""

    def __init__(self):
        self._bits: list[int] = []

    def write_bit(self, b: int) -> None:
        if b not in (0, 1):
            raise ValidationError("bit must be 0 or 1")
        self._bits.append(b)

    def write_uint(self, value: int, width: int) -> None:
        if width < 0:
            raise ValidationError("width must be nonnegative")
        if value < 0 or value >> width:
            raise ValidationError(f"value {value} does not fit in {width} bits")
        for i in range(width):
            self._bits.append((value >> i) & 1)

    def getvalue(self) -> np.ndarray:
        out = np.asarray(self._bits, dtype=np.uint8)
        out.setflags(write=False)
        return out

    def __len__(self) -> int:
        return len(self._bits)


class BitReader:
    """Reads integers written by :class:`BitWriter`."""

    def __init__(self, bits: np.ndarray):
        self._bits = np.asarray(bits, dtype=np.uint8)
        self._pos = 0

    def read_bit(self) -> int:
        return self.read_uint(1)

    def read_uint(self, width: int) -> int:
        if self._pos + width > self._bits.shape[0]:
            raise ValidationError("bit stream exhausted")
        value = 0
        for i in range(width):
            value |= int(self._bits[self._pos + i]) << i
        self._pos += width
        return value

    @property
    def remaining(self) -> int:
        return int(self._bits.shape[0]) - self._pos


@dataclass(frozen=True, eq=False)
class CompressionMessage:
    """A compression scheme's output: sample references plus payload bits.

    Attributes
    ----------
    scheme_id : int
        Wire identifier of the producing scheme.
    sample_refs : ndarray
        Indices into the sample presented to the encoder (repeats allowed).
    bits : ndarray
        Payload bits as a uint8 array of zeros and ones.
    """

    scheme_id: int
    sample_refs: np.ndarray
    bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))

    def __post_init__(self):
        if self.scheme_id not in _KNOWN_SCHEMES:
            raise ValidationError(f"unknown scheme id {self.scheme_id}")
        refs = np.asarray(self.sample_refs, dtype=np.int64)
        if refs.ndim != 1 or (refs.size and refs.min() < 0):
            raise ValidationError("sample_refs must be nonnegative indices")
        if refs.size and refs.max() >= (1 << 32):
            raise ValidationError("sample reference exceeds u32 range")
        refs.setflags(write=False)
        object.__setattr__(self, "sample_refs", refs)
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or (bits.size and bits.max() > 1):
            raise ValidationError("bits must be a flat array of 0/1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def checked(cls, scheme_id: int, sample_refs, bits, max_refs: int,
                max_bits: int) -> "CompressionMessage":
        """Construct and enforce the scheme's size budget.

        Raises
        ------
        MessageSizeError
            If the message would exceed ``max_refs`` references or
            ``max_bits`` payload bits.
        """
        msg = cls(scheme_id=scheme_id, sample_refs=sample_refs, bits=bits)
        if msg.n_refs > max_refs:
            raise MessageSizeError(
                f"{msg.n_refs} sample refs exceed the budget of {max_refs}")
        if msg.n_bits > max_bits:
            raise MessageSizeError(
                f"{msg.n_bits} payload bits exceed the budget of {max_bits}")
        return msg

    @property
    def n_refs(self) -> int:
        return int(self.sample_refs.shape[0])

    @property
    def n_bits(self) -> int:
        return int(self.bits.shape[0])

    def equals(self, other: "CompressionMessage") -> bool:
        return (self.scheme_id == other.scheme_id
                and np.array_equal(self.sample_refs, other.sample_refs)
                and np.array_equal(self.bits, other.bits))

    def to_bytes(self) -> bytes:
        head = struct.pack("<HI", self.scheme_id, self.n_refs)
        refs = struct.pack(f"<{self.n_refs}I", *map(int, self.sample_refs))
        nbits = struct.pack("<I", self.n_bits)
        packed = np.packbits(self.bits, bitorder="little").tobytes()
        return head + refs + nbits + packed

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CompressionMessage":
        if len(blob) < 6:
            raise ValidationError("message blob too short")
        scheme_id, n_refs = struct.unpack_from("<HI", blob, 0)
        off = 6
        if len(blob) < off + 4 * n_refs + 4:
            raise ValidationError("message blob truncated in references")
        refs = struct.unpack_from(f"<{n_refs}I", blob, off)
        off += 4 * n_refs
        (n_bits,) = struct.unpack_from("<I", blob, off)
        off += 4
        n_bytes = (n_bits + 7) // 8
        if len(blob) != off + n_bytes:
            raise ValidationError("message blob has wrong payload length")
        raw = np.frombuffer(blob, dtype=np.uint8, offset=off)
        bits = np.unpackbits(raw, bitorder="little")[:n_bits]
        return cls(scheme_id=scheme_id, sample_refs=np.asarray(refs), bits=bits)
