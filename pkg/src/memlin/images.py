"""Binary PGM (P5) image I/O and weight CSV output.

PGM keeps outputs bit-exact with no codec dependency; intensities are
round(255*x) clamped to [0, 255].
"""

from pathlib import Path

import numpy as np


def encode_pgm(x, rows: int, cols: int) -> bytes:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (rows * cols,):
        raise ValueError("vector of length %d does not match %dx%d" % (x.size, rows, cols))
    pixels = np.clip(np.rint(255.0 * x), 0, 255).astype(np.uint8)
    header = ("P5\n%d %d\n255\n" % (cols, rows)).encode("ascii")
    return header + pixels.tobytes()


def write_pgm(path, x, rows: int, cols: int) -> None:
    Path(path).write_bytes(encode_pgm(x, rows, cols))


def _tokens(data: bytes):
    # header tokens may be separated by any whitespace; '#' starts a comment
    i = 0
    while True:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        yield data[start:i], i


def read_pgm(path):
    """Read an 8-bit binary PGM; returns (vector in [0,1], rows, cols)."""
    data = Path(path).read_bytes()
    gen = _tokens(data)
    magic, _ = next(gen)
    if magic != b"P5":
        raise ValueError("not a binary PGM (P5) file: magic %r" % magic)
    cols = int(next(gen)[0])
    rows = int(next(gen)[0])
    maxval, offset = next(gen)
    maxval = int(maxval)
    if maxval <= 0 or maxval > 255:
        raise ValueError("only 8-bit PGM supported, maxval=%d" % maxval)
    payload = data[offset + 1 : offset + 1 + rows * cols]
    if len(payload) < rows * cols:
        raise ValueError("PGM payload truncated")
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / maxval
    return pixels, rows, cols


def write_weights_csv(path, weights) -> None:
    lines = ["index,weight"]
    for i, w in enumerate(np.asarray(weights, dtype=np.float64)):
        lines.append("%d,%s" % (i, repr(float(w))))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
