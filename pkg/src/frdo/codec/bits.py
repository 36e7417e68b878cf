"""MSB-first bit writer/reader with order-0 exponential-Golomb codes."""

from __future__ import annotations

import numpy as np


class BitstreamError(ValueError):
    """Raised on malformed or truncated payloads."""


def ue_length(value: int) -> int:
    """Length in bits of the order-0 exp-Golomb code for ``value >= 0``."""
    return 2 * (value + 1).bit_length() - 1


def se_to_ue(value: int) -> int:
    return 2 * value - 1 if value > 0 else -2 * value


def se_length(value: int) -> int:
    return ue_length(se_to_ue(value))


class BitWriter:
    def __init__(self):
        self._chunks: list[str] = []
        self._len = 0

    def __len__(self):
        return self._len

    def write(self, value: int, nbits: int) -> None:
        if value < 0 or value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        if nbits:
            self._chunks.append(format(value, f"0{nbits}b"))
            self._len += nbits

    def write_bit(self, bit: int) -> None:
        self._chunks.append("1" if bit else "0")
        self._len += 1

    def write_ue(self, value: int) -> None:
        if value < 0:
            raise ValueError("ue(v) requires a non-negative value")
        code = format(value + 1, "b")
        self._chunks.append("0" * (len(code) - 1) + code)
        self._len += 2 * len(code) - 1

    def write_se(self, value: int) -> None:
        self.write_ue(se_to_ue(value))

    def align(self) -> None:
        pad = -self._len % 8
        if pad:
            self._chunks.append("0" * pad)
            self._len += pad

    def bits(self) -> list[int]:
        return [int(c) for c in "".join(self._chunks)]

    def to_bytes(self) -> bytes:
        s = "".join(self._chunks)
        s += "0" * (-len(s) % 8)
        return int(s, 2).to_bytes(len(s) // 8, "big") if s else b""


class BitReader:
    def __init__(self, data):
        if isinstance(data, (bytes, bytearray, memoryview)):
            self._bits = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
        else:
            self._bits = np.asarray(list(data), dtype=np.uint8)
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self._bits) - self.pos

    def read(self, nbits: int) -> int:
        if self.pos + nbits > len(self._bits):
            raise BitstreamError("truncated payload")
        value = 0
        for b in self._bits[self.pos:self.pos + nbits]:
            value = (value << 1) | int(b)
        self.pos += nbits
        return value

    def read_ue(self) -> int:
        zeros = 0
        while True:
            if self.pos >= len(self._bits):
                raise BitstreamError("truncated payload")
            if self._bits[self.pos]:
                break
            zeros += 1
            self.pos += 1
            if zeros > 32:
                raise BitstreamError("malformed exp-Golomb code")
        return self.read(zeros + 1) - 1

    def read_se(self) -> int:
        k = self.read_ue()
        return (k + 1) // 2 if k & 1 else -(k // 2)

    def align(self) -> None:
        self.pos += -self.pos % 8
