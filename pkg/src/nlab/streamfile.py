"""
On-disk digit streams.

Layout::

    #nlab v1 b=<b> n=<n|*> [sel=<selection>] [spec=<generator spec, rest of line>]
    <payload>

For b <= 10 the payload is one ASCII character per digit (newlines ignored);
for b > 10 it is whitespace-separated decimal integers. ``n=*`` means the
digit count was not known when the header was written.
"""
from __future__ import annotations

import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import StreamFormatError
from .shiftspace import Alphabet, DigitSequence

MAGIC = "#nlab"
VERSION = "v1"
LINE = 1 << 16


@dataclass
class StreamHeader:
    base: int
    n: int | None = None
    sel: str | None = None
    spec: str | None = None
    version: str = VERSION

    def render(self) -> str:
        parts = [MAGIC, self.version, f"b={self.base}", f"n={'*' if self.n is None else self.n}"]
        if self.sel:
            parts.append(f"sel={self.sel}")
        if self.spec:
            parts.append(f"spec={self.spec}")
        return " ".join(parts)

    @classmethod
    def parse(cls, line: str) -> "StreamHeader":
        line = line.rstrip("\r\n")
        spec = None
        if " spec=" in line:
            line, spec = line.split(" spec=", 1)
        parts = line.split()
        if len(parts) < 4 or parts[0] != MAGIC:
            raise StreamFormatError(f"not an nlab stream header: {line!r}")
        if parts[1] != VERSION:
            raise StreamFormatError(f"unsupported stream format version {parts[1]!r}")
        fields = {}
        for p in parts[2:]:
            if "=" not in p:
                raise StreamFormatError(f"bad header field {p!r}")
            k, v = p.split("=", 1)
            fields[k] = v
        try:
            base = int(fields["b"])
            n = None if fields.get("n", "*") == "*" else int(fields["n"])
        except (KeyError, ValueError):
            raise StreamFormatError(f"header needs integer b= and n=: {line!r}") from None
        if base < 2:
            raise StreamFormatError(f"base must be >= 2, got {base}")
        return cls(base, n, fields.get("sel"), spec, parts[1])


def encode_payload(digits: np.ndarray, base: int) -> bytes:
    if base <= 10:
        return (np.asarray(digits, dtype=np.uint8) + ord("0")).tobytes()
    return (" ".join(map(str, np.asarray(digits).tolist())) + " ").encode() if len(digits) else b""


def write_stream(fh, header: StreamHeader, chunks) -> int:
    """Write header and payload to a binary file object; returns the digit count."""
    fh.write((header.render() + "\n").encode())
    total = 0
    for chunk in chunks:
        if len(chunk) and (chunk.min() < 0 or chunk.max() >= header.base):
            raise StreamFormatError(f"digit outside base {header.base}")
        fh.write(encode_payload(chunk, header.base))
        total += len(chunk)
    fh.write(b"\n")
    if header.n is not None and total != header.n:
        raise StreamFormatError(f"header declares {header.n} digits, wrote {total}")
    return total


@contextmanager
def open_output(path: str):
    """Binary writer; '-' is stdout, anything else is written to a temp file and renamed into place."""
    if path == "-":
        out = sys.stdout.buffer
        yield out
        out.flush()
        return
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".nlab-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path: str, header: StreamHeader, seq_or_digits) -> int:
    if isinstance(seq_or_digits, DigitSequence):
        chunks = seq_or_digits.chunks()
    else:
        chunks = [np.asarray(seq_or_digits, dtype=np.int64)]
    with open_output(path) as fh:
        return write_stream(fh, header, chunks)


def _payload_chunks(fh, header: StreamHeader):
    base = header.base
    total = 0
    if base <= 10:
        while True:
            raw = fh.read(LINE)
            if not raw:
                break
            arr = np.frombuffer(raw, dtype=np.uint8)
            arr = arr[(arr != ord("\n")) & (arr != ord("\r")) & (arr != ord(" ")) & (arr != ord("\t"))]
            d = arr.astype(np.int64) - ord("0")
            if len(d) and (d.min() < 0 or d.max() >= base):
                raise StreamFormatError(f"payload holds a character that is not a base-{base} digit")
            total += len(d)
            yield d
    else:
        tail = b""
        while True:
            raw = fh.read(LINE)
            if not raw:
                break
            raw = tail + raw
            cut = max(raw.rfind(b" "), raw.rfind(b"\n"))
            if cut < 0:
                tail = raw
                continue
            raw, tail = raw[:cut], raw[cut:]
            d = np.array(raw.split(), dtype=np.int64)
            if len(d) and (d.min() < 0 or d.max() >= base):
                raise StreamFormatError(f"payload value outside base {base}")
            total += len(d)
            yield d
        if tail.strip():
            d = np.array(tail.split(), dtype=np.int64)
            if d.min() < 0 or d.max() >= base:
                raise StreamFormatError(f"payload value outside base {base}")
            total += len(d)
            yield d
    if header.n is not None and total != header.n:
        raise StreamFormatError(f"header declares {header.n} digits, payload has {total}")


def _open_input(path: str):
    if path == "-":
        return sys.stdin.buffer
    return open(path, "rb")


def load(path: str) -> tuple[StreamHeader, DigitSequence]:
    """Lazily read a stream file; '-' reads stdin (one-shot)."""
    fh = _open_input(path)
    header = StreamHeader.parse(fh.readline().decode())

    def chunks():
        try:
            yield from _payload_chunks(fh, header)
        finally:
            if fh is not sys.stdin.buffer:
                fh.close()

    reopen = None if path == "-" else (lambda: load(path)[1])
    seq = DigitSequence(Alphabet(header.base), chunks(), known_length=header.n, reopen=reopen)
    return header, seq


def read_all(path: str) -> tuple[StreamHeader, np.ndarray]:
    header, seq = load(path)
    parts = list(seq.chunks())
    return header, (np.concatenate(parts) if parts else np.empty(0, dtype=np.int64))
