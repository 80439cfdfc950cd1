"""Binary PPM (P6) heatmap rendering for phase-space planes.

Color map: rate 0 -> blue (0,0,255), 0.5 -> white, 1 -> red (255,0,0),
linear in between. The map is invertible to within 1/255, which the render
round-trip tests rely on.
"""

from __future__ import annotations

import numpy as np


def rate_to_rgb(rate: float) -> tuple[int, int, int]:
    t = min(max(float(rate), 0.0), 1.0)
    if t <= 0.5:
        c = round(510 * t)
        return (c, c, 255)
    c = round(510 * (1.0 - t))
    return (255, c, c)


def rgb_to_rate(r: int, g: int, b: int) -> float:
    """Invert the color map (exact inverse of rate_to_rgb up to rounding)."""
    if b == 255 and r < 255:
        return r / 510.0
    return 1.0 - g / 510.0


def render_plane(plane: np.ndarray, scale: int = 1) -> np.ndarray:
    """Pixel array (H, W, 3) uint8 for a 2-D rate plane; one scale x scale
    block per cell, rows/columns in ascending axis order."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    rows, cols = plane.shape
    pixels = np.empty((rows, cols, 3), dtype=np.uint8)
    for i in range(rows):
        for j in range(cols):
            pixels[i, j] = rate_to_rgb(plane[i, j])
    return np.kron(pixels, np.ones((scale, scale, 1), dtype=np.uint8))


def write_ppm(path: str, pixels: np.ndarray) -> None:
    h, w, _ = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())


def read_ppm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    header, rest = data.split(b"\n", 1)
    if header != b"P6":
        raise ValueError("not a binary PPM file")
    dims, rest = rest.split(b"\n", 1)
    maxval, raster = rest.split(b"\n", 1)
    w, h = (int(v) for v in dims.split())
    if maxval != b"255":
        raise ValueError("unsupported max value")
    return np.frombuffer(raster[: w * h * 3], dtype=np.uint8).reshape(h, w, 3)
