"""Little-endian binary helpers shared by the file formats."""

import struct

import numpy as np

from .errors import FormatError


class Reader:
    def __init__(self, blob, fmt_name):
        self.blob = memoryview(blob)
        self.pos = 0
        self.fmt_name = fmt_name

    def take(self, n, field):
        if n < 0 or self.pos + n > len(self.blob):
            raise FormatError(f"{self.fmt_name}.{field}",
                              f"truncated: need {n} bytes at offset {self.pos}, "
                              f"have {len(self.blob) - self.pos}")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def magic(self, expected):
        got = bytes(self.take(len(expected), "magic"))
        if got != expected:
            raise FormatError(f"{self.fmt_name}.magic", f"expected {expected!r}, got {got!r}")

    def scalar(self, code, field):
        size = struct.calcsize("<" + code)
        return struct.unpack("<" + code, self.take(size, field))[0]

    def array(self, dtype, count, field):
        dt = np.dtype(dtype).newbyteorder("<")
        raw = self.take(int(count) * dt.itemsize, field)
        return np.frombuffer(raw, dtype=dt).astype(dt.newbyteorder("="))

    def version(self, supported=1):
        v = self.scalar("I", "version")
        if v != supported:
            raise FormatError(f"{self.fmt_name}.version", f"unsupported version {v}")
        return v

    def finish(self):
        if self.pos != len(self.blob):
            raise FormatError(f"{self.fmt_name}.payload",
                              f"{len(self.blob) - self.pos} trailing bytes")


def pack(code, *values):
    return struct.pack("<" + code, *values)


def le_bytes(arr, dtype):
    return np.ascontiguousarray(arr, dtype=np.dtype(dtype).newbyteorder("<")).tobytes()


def read_file(path):
    with open(path, "rb") as fh:
        return fh.read()


def write_file(path, blob):
    with open(path, "wb") as fh:
        fh.write(blob)
