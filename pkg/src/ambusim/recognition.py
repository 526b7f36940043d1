"""Ambulance recognition: denoise, normalize, Sobel edges, chamfer matching.

A frame is classified by exhaustively translating a small point pattern P
over the frame's edge map E and minimizing

    D(P, E) = sum over p in P of  min over e in E of  city_block(p + t, e)

which is invariant under translation of the mark inside the frame. The
per-translation minima come from an exact city-block distance transform, so
the accelerated search returns the same D as evaluating the sum directly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

SOBEL_THRESHOLD_DEFAULT = 128
TAU_PER_POINT_DEFAULT = 2.0

_SENTINEL = 1 << 20  # larger than any city-block distance inside a frame


class RecognitionError(Exception):
    """Base class for recognition failures."""


class ImageTooSmall(RecognitionError):
    pass


class EmptyEdgeMap(RecognitionError):
    pass


class PatternTooLarge(RecognitionError):
    pass


class NotRecognizable(RecognitionError):
    """The frame yields nothing to match against (e.g. no edges at all)."""


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: bytes  # row-major, one byte per pixel

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if len(self.pixels) != self.width * self.height:
            raise ValueError("pixel count does not match dimensions")

    @classmethod
    def from_array(cls, a: np.ndarray) -> "GrayImage":
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        if a.min() < 0 or a.max() > 255:
            raise ValueError("intensities must lie in [0, 255]")
        h, w = a.shape
        return cls(width=w, height=h, pixels=a.astype(np.uint8).tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)


@dataclass(frozen=True)
class EdgeMap:
    width: int
    height: int
    points: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for x, y in self.points:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(f"edge point ({x}, {y}) outside {self.width}x{self.height}")


@dataclass(frozen=True)
class Pattern:
    """Point set anchored at its own bounding-box corner (min x = min y = 0)."""

    points: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("pattern must be non-empty")
        if min(x for x, _ in self.points) != 0 or min(y for _, y in self.points) != 0:
            raise ValueError("pattern must be anchored at min x = min y = 0")

    @classmethod
    def from_points(cls, points) -> "Pattern":
        pts = [(int(x), int(y)) for x, y in points]
        if not pts:
            raise ValueError("pattern must be non-empty")
        min_x = min(x for x, _ in pts)
        min_y = min(y for _, y in pts)
        return cls(points=frozenset((x - min_x, y - min_y) for x, y in pts))

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class MatchResult:
    best_translation: tuple[int, int]
    dissimilarity: int
    per_point: Fraction
    is_ambulance: bool = False  # filled in by classify / recognize


def denoise(img: GrayImage) -> GrayImage:
    """3x3 median filter; borders take the median of in-bounds window cells.

    Even-sized windows (4 cells at corners, 6 along borders) use the lower
    median so results stay integers.
    """
    a = img.to_array().astype(np.int32)
    h, w = a.shape
    padded = np.full((h + 2, w + 2), _SENTINEL, dtype=np.int32)
    padded[1:-1, 1:-1] = a
    stack = np.stack([
        padded[dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3)
    ])
    stack.sort(axis=0, kind="stable")
    valid = (stack < _SENTINEL).sum(axis=0)
    k = (valid - 1) // 2  # sentinels sort last, so index k picks the lower median
    out = np.take_along_axis(stack, k[np.newaxis], axis=0)[0]
    return GrayImage.from_array(out)


def normalize(img: GrayImage) -> GrayImage:
    """Stretch intensities to the full [0, 255] range, rounding half up.

    A constant image has no contrast to stretch and is returned unchanged.
    """
    a = img.to_array().astype(np.int64)
    lo, hi = int(a.min()), int(a.max())
    if lo == hi:
        return img
    span = hi - lo
    out = ((a - lo) * 510 + span) // (2 * span)
    return GrayImage.from_array(out)


def sobel_edges(img: GrayImage, threshold: int = SOBEL_THRESHOLD_DEFAULT) -> EdgeMap:
    """Edge points where |Gx| + |Gy| >= threshold; the 1-px border is skipped."""
    if img.width < 3 or img.height < 3:
        raise ImageTooSmall(f"{img.width}x{img.height} leaves no interior")
    a = img.to_array().astype(np.int32)
    gx = (
        (a[:-2, 2:] + 2 * a[1:-1, 2:] + a[2:, 2:])
        - (a[:-2, :-2] + 2 * a[1:-1, :-2] + a[2:, :-2])
    )
    gy = (
        (a[2:, :-2] + 2 * a[2:, 1:-1] + a[2:, 2:])
        - (a[:-2, :-2] + 2 * a[:-2, 1:-1] + a[:-2, 2:])
    )
    magnitude = np.abs(gx) + np.abs(gy)
    ys, xs = np.nonzero(magnitude >= threshold)
    points = frozenset((int(x) + 1, int(y) + 1) for x, y in zip(xs, ys))
    return EdgeMap(width=img.width, height=img.height, points=points)


def city_block(p: tuple[int, int], q: tuple[int, int]) -> int:
    return abs(p[0] - q[0]) + abs(p[1] - q[1])


def dissimilarity(pattern: Pattern, edges: EdgeMap, t: tuple[int, int]) -> int:
    """D(P, E) at one translation, evaluated directly from the definition."""
    if not edges.points:
        raise EmptyEdgeMap("no edge points to match against")
    tx, ty = t
    return sum(
        min(city_block((px + tx, py + ty), e) for e in edges.points)
        for px, py in pattern.points
    )


def distance_field(edges: EdgeMap) -> np.ndarray:
    """Grid of city-block distances to the nearest edge point.

    Two sequential raster passes (up/left then down/right) are exact for the
    city-block metric; rows are relaxed with a running-minimum identity that
    reproduces the scalar scan value for value.
    """
    if not edges.points:
        raise EmptyEdgeMap("no edge points to match against")
    h, w = edges.height, edges.width
    d = np.full((h, w), _SENTINEL, dtype=np.int64)
    for x, y in edges.points:
        d[y, x] = 0
    xs = np.arange(w, dtype=np.int64)
    for y in range(h):  # up + left
        if y > 0:
            np.minimum(d[y], d[y - 1] + 1, out=d[y])
        d[y] = xs + np.minimum.accumulate(d[y] - xs)
    for y in range(h - 1, -1, -1):  # down + right
        if y < h - 1:
            np.minimum(d[y], d[y + 1] + 1, out=d[y])
        rev = d[y][::-1]
        d[y] = (xs + np.minimum.accumulate(rev - xs))[::-1]
    return d


def match_pattern(pattern: Pattern, edges: EdgeMap) -> MatchResult:
    """Best translation of P over E by exhaustive in-frame search.

    Equal-D translations resolve to the smallest y, then the smallest x.
    """
    field = distance_field(edges)
    max_x = max(x for x, _ in pattern.points)
    max_y = max(y for _, y in pattern.points)
    if max_x >= edges.width or max_y >= edges.height:
        raise PatternTooLarge(
            f"pattern box {max_x + 1}x{max_y + 1} exceeds frame {edges.width}x{edges.height}"
        )
    span_x = edges.width - max_x
    span_y = edges.height - max_y
    totals = np.zeros((span_y, span_x), dtype=np.int64)
    for px, py in pattern.points:
        totals += field[py:py + span_y, px:px + span_x]
    flat = int(np.argmin(totals))  # first hit in row-major order: smallest y, then x
    ty, tx = divmod(flat, span_x)
    best = int(totals[ty, tx])
    return MatchResult(
        best_translation=(tx, ty),
        dissimilarity=best,
        per_point=Fraction(best, pattern.size),
    )


def classify(result: MatchResult, tau_per_point: float = TAU_PER_POINT_DEFAULT) -> bool:
    """Ambulance iff the average distance per pattern point stays small."""
    return result.per_point <= tau_per_point


def recognize(
    img: GrayImage,
    pattern: Pattern,
    sobel_threshold: int = SOBEL_THRESHOLD_DEFAULT,
    tau_per_point: float = TAU_PER_POINT_DEFAULT,
) -> MatchResult:
    """Full pipeline: denoise, normalize, edge-detect, match, classify."""
    prepared = normalize(denoise(img))
    edges = sobel_edges(prepared, sobel_threshold)
    try:
        result = match_pattern(pattern, edges)
    except EmptyEdgeMap as exc:
        raise NotRecognizable("frame has no edges to match") from exc
    return replace(result, is_ambulance=classify(result, tau_per_point))
