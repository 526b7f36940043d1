"""Synthetic camera frames for the recognition pipeline.

Renders top-down vehicle frames: an ambulance carries a two-letter roof
glyph, a distractor is the same vehicle with the glyph removed. Strokes
of the glyph are two pixels thick so the
median denoiser keeps them. A glyph pattern extracted from
the pipeline's own edge output on a clean frame matches any rendered
position, because every stage before matching is translation invariant
away from the frame border.
"""

from __future__ import annotations

import random

import numpy as np

from .recognition import EdgeMap, GrayImage, Pattern, denoise, normalize, sobel_edges

FRAME_WIDTH = 160
FRAME_HEIGHT = 120
BODY_W = 60
BODY_H = 36
GLYPH_LOCAL_XY = (14, 6)  # glyph box corner in body-local pixels

SHADE_BG = 30
SHADE_BODY = 110
SHADE_WINDOW = 60
SHADE_MARK = 255

# letter strokes in glyph-local coordinates, y down, baseline y = 10
GLYPH_STROKES = (
    ((0, 10), (5, 0)),  # A left leg
    ((5, 0), (10, 10)),  # A right leg
    ((2, 6), (8, 6)),  # A crossbar
    ((15, 10), (15, 0)),  # M left post
    ((25, 10), (25, 0)),  # M right post
    ((15, 0), (20, 5)),  # M left diagonal
    ((25, 0), (20, 5)),  # M right diagonal
)


def _bresenham(p: tuple[int, int], q: tuple[int, int]) -> list[tuple[int, int]]:
    x0, y0 = p
    x1, y1 = q
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    points = []
    while True:
        points.append((x0, y0))
        if (x0, y0) == (x1, y1):
            return points
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def glyph_pixels(thickness: int = 2) -> frozenset[tuple[int, int]]:
    """Glyph-local pixels: each stroke point stamped as a thickness^2 block."""
    out: set[tuple[int, int]] = set()
    for p, q in GLYPH_STROKES:
        for x, y in _bresenham(p, q):
            for dx in range(thickness):
                for dy in range(thickness):
                    out.add((x + dx, y + dy))
    return frozenset(out)


def _render(body_xy: tuple[int, int], marking: str,
            width: int, height: int) -> GrayImage:
    bx, by = body_xy
    if not (0 <= bx and bx + BODY_W <= width and 0 <= by and by + BODY_H <= height):
        raise ValueError(f"body at {body_xy} leaves the {width}x{height} frame")
    a = np.full((height, width), SHADE_BG, dtype=np.uint8)
    a[by:by + BODY_H, bx:bx + BODY_W] = SHADE_BODY
    a[by + 6:by + 14, bx + 3:bx + 11] = SHADE_WINDOW
    if marking == "glyph":
        gx, gy = GLYPH_LOCAL_XY
        for x, y in glyph_pixels():
            a[by + gy + y, bx + gx + x] = SHADE_MARK
    elif marking != "none":
        raise ValueError(f"unknown marking {marking!r}")
    return GrayImage.from_array(a)


def render_ambulance_frame(
    body_xy: tuple[int, int] = (50, 40),
    width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT,
) -> GrayImage:
    return _render(body_xy, "glyph", width, height)


def render_distractor_frame(
    body_xy: tuple[int, int] = (50, 40),
    width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT,
) -> GrayImage:
    """Same vehicle with the roof glyph removed."""
    return _render(body_xy, "none", width, height)


def add_salt_pepper(img: GrayImage, fraction: float = 0.02, seed: int = 0) -> GrayImage:
    """Flip a deterministic sample of pixels to 0 or 255."""
    rng = random.Random(seed)
    a = img.to_array().copy()
    h, w = a.shape
    count = int(round(fraction * h * w))
    for cell in rng.sample(range(h * w), count):
        a[cell // w, cell % w] = 255 if rng.random() < 0.5 else 0
    return GrayImage.from_array(a)


def frame_edges(img: GrayImage) -> EdgeMap:
    """The full front half of the pipeline: denoise, normalize, sobel."""
    return sobel_edges(normalize(denoise(img)))


def glyph_edge_points(body_xy: tuple[int, int] = (50, 40)) -> list[tuple[int, int]]:
    """Pipeline edge points inside the glyph box of a clean ambulance frame."""
    bx, by = body_xy
    gx, gy = bx + GLYPH_LOCAL_XY[0], by + GLYPH_LOCAL_XY[1]
    strokes = glyph_pixels()
    max_x = max(x for x, _ in strokes)
    max_y = max(y for _, y in strokes)
    edges = frame_edges(render_ambulance_frame(body_xy))
    return sorted(
        (x, y) for x, y in edges.points
        if gx - 2 <= x <= gx + max_x + 2 and gy - 2 <= y <= gy + max_y + 2
    )


def ambulance_pattern(n: int = 50) -> Pattern:
    """Glyph pattern with n points, evenly subsampled in (y, x) order."""
    points = sorted(glyph_edge_points(), key=lambda p: (p[1], p[0]))
    if n >= len(points):
        return Pattern.from_points(points)
    if n < 2:
        raise ValueError("pattern needs at least 2 points")
    picked = [points[i * (len(points) - 1) // (n - 1)] for i in range(n)]
    return Pattern.from_points(dict.fromkeys(picked))
