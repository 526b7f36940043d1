"""Binary PGM (P5) reading and writing for bit-exact image fixtures."""

from __future__ import annotations

from pathlib import Path

from .recognition import GrayImage


class PgmError(ValueError):
    pass


def _tokens(data: bytes):
    """Header tokens: whitespace-separated, with # comments running to EOL."""
    i = 0
    while True:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise PgmError("truncated header")
        yield data[start:i], i


def parse_pgm(data: bytes) -> GrayImage:
    reader = _tokens(data)
    magic, _ = next(reader)
    if magic != b"P5":
        raise PgmError(f"not a binary PGM (magic {magic!r})")
    try:
        width, _ = next(reader)
        height, _ = next(reader)
        maxval, after = next(reader)
        width, height, maxval = int(width), int(height), int(maxval)
    except (StopIteration, ValueError) as exc:
        raise PgmError("malformed header") from exc
    if width <= 0 or height <= 0:
        raise PgmError("dimensions must be positive")
    if not 0 < maxval <= 255:
        raise PgmError(f"unsupported maxval {maxval} (need 1..255)")
    raster_start = after + 1  # exactly one whitespace byte after maxval
    raster = data[raster_start:raster_start + width * height]
    if len(raster) != width * height:
        raise PgmError("raster shorter than the declared size")
    return GrayImage(width=width, height=height, pixels=raster)


def serialize_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels


def load_pgm(path: str | Path) -> GrayImage:
    return parse_pgm(Path(path).read_bytes())


def dump_pgm(img: GrayImage, path: str | Path) -> None:
    Path(path).write_bytes(serialize_pgm(img))
