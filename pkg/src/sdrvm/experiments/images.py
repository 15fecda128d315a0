"""Grayscale images: PGM I/O, impulse noise, median filter, kernel-regression denoising."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from ..core import DimensionMismatch, FitOptions, LinearSystem, SdrvmError
from .methods import run_method

PSNR_CAP_DB = 99.0


class NotSymmetric(SdrvmError, ValueError):
    pass


class PgmError(SdrvmError, ValueError):
    pass


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.ndim != 2 or px.size == 0:
            raise DimensionMismatch(f"image must be a non-empty 2-D array, got {px.shape}")
        if np.any(~np.isfinite(px)) or px.min() < 0 or px.max() > 1:
            raise ValueError("pixel values must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self):
        return self.pixels.shape


def _tokens(data: bytes, count: int, pos: int):
    """Next ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise PgmError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        out.append(data[start:pos])
    return out, pos


def read_pgm(path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary) graymap, scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    (magic, w, h, maxval), pos = _tokens(data, 4, 0)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise PgmError("non-integer PGM header field") from None
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise PgmError(f"bad PGM header: {w}x{h}, maxval {maxval}")
    if magic == b"P5":
        pos += 1
        dtype = ">u2" if maxval > 255 else "u1"
        raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
    elif magic == b"P2":
        vals = data[pos:].split()
        if len(vals) < w * h:
            raise PgmError("truncated P2 pixel data")
        raw = np.array([int(v) for v in vals[:w * h]])
    else:
        raise PgmError(f"unsupported magic {magic!r}")
    if raw.size != w * h or raw.max() > maxval:
        raise PgmError("pixel data inconsistent with header")
    return GrayImage(raw.reshape(h, w).astype(float) / maxval)


def write_pgm(img: GrayImage, path):
    """Write 8-bit binary P5, rounding to the nearest level."""
    h, w = img.shape
    raw = np.rint(img.pixels * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(raw.tobytes())


def salt_pepper(img: GrayImage, rho: float, seed) -> GrayImage:
    """Set exactly ``round(rho * p * q)`` distinct pixels to 0 or 1."""
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    px = img.pixels.copy()
    count = int(math.floor(rho * px.size + 0.5))
    idx = rng.choice(px.size, count, replace=False)
    px.flat[idx] = rng.integers(0, 2, count).astype(float)
    return GrayImage(px)


def median_filter_3x3(img: GrayImage) -> GrayImage:
    padded = np.pad(img.pixels, 1, mode="edge")
    p, q = img.shape
    stack = np.stack([padded[i:i + p, j:j + q]
                      for i in range(3) for j in range(3)])
    return GrayImage(np.median(stack, axis=0))


def vech(sym2) -> np.ndarray:
    """``[[a, b], [b, c]] -> (a, b, c)``."""
    M = np.asarray(sym2, dtype=float)
    if M.shape != (2, 2):
        raise DimensionMismatch(f"vech expects a 2x2 matrix, got {M.shape}")
    if abs(M[0, 1] - M[1, 0]) > 1e-12 * max(1.0, np.max(np.abs(M))):
        raise NotSymmetric(f"off-diagonal entries differ: {M[0, 1]} vs {M[1, 0]}")
    return np.array([M[0, 0], M[0, 1], M[1, 1]])


@dataclass(frozen=True)
class PatchModel:
    """Local quadratic model over a square patch with a Gaussian-polynomial kernel.

    Pixel positions are taken relative to the patch centre, so the
    polynomial kernel factor ``(1 + x^T x_i)^p`` evaluated at the centre
    ``x = 0`` is 1 and only the Gaussian part weights the rows.
    """

    side: int = 5
    radius: float = 2.1
    degree: int = 1

    def __post_init__(self):
        if self.side < 1 or self.side % 2 == 0:
            raise ValueError("patch side must be a positive odd integer")
        if not self.radius > 0:
            raise ValueError("kernel radius must be positive")

    @property
    def offsets(self) -> np.ndarray:
        h = self.side // 2
        d = np.arange(-h, h + 1, dtype=float)
        di, dj = np.meshgrid(d, d, indexing="ij")
        return np.column_stack([di.ravel(), dj.ravel()])

    def kernel(self, center=(0.0, 0.0)) -> np.ndarray:
        x = np.asarray(center, dtype=float)
        xi = self.offsets
        gauss = np.exp(-np.sum((xi - x) ** 2, axis=1) / self.radius ** 2)
        return gauss * (1.0 + xi @ x) ** self.degree

    def design(self) -> np.ndarray:
        """Rows ``[1, d^T, vech(d d^T)]`` for every offset ``d``, unweighted."""
        d = self.offsets
        quad = np.array([vech(np.outer(v, v)) for v in d])
        return np.hstack([np.ones((d.shape[0], 1)), d, quad])

    def weighted_design(self) -> tuple:
        w = np.sqrt(self.kernel())
        return self.design() * w[:, None], w


def patches(img: GrayImage, side: int) -> np.ndarray:
    """Every pixel's ``side x side`` neighbourhood, row-major, edge-replicated."""
    h = side // 2
    padded = np.pad(img.pixels, h, mode="edge")
    p, q = img.shape
    cols = [padded[i:i + p, j:j + q] for i in range(side) for j in range(side)]
    return np.stack(cols, axis=-1).reshape(p * q, side * side)


def denoise_image(img: GrayImage, method: str = "sdrvm-sd",
                  model: PatchModel = PatchModel(),
                  opts: FitOptions = FitOptions(), progress: bool = False) -> GrayImage:
    """Per-pixel robust local regression; the output pixel is the fitted intercept."""
    if method == "median":
        return median_filter_3x3(img)
    if model.side == 1:
        # a one-pixel patch holds no information beyond the pixel itself
        return GrayImage(img.pixels.copy())
    A, w = model.weighted_design()
    obs = patches(img, model.side)
    out = np.empty(obs.shape[0])
    for k, y in enumerate(obs):
        if np.ptp(y) == 0:
            out[k] = y[0]
            continue
        res = run_method(method, LinearSystem(A, y * w), opts)
        out[k] = res.x_hat[0]
        if progress and (k + 1) % 1024 == 0:
            print(f"[denoise] {method}: {k + 1}/{obs.shape[0]} pixels",
                  file=sys.stderr)
    return GrayImage(np.clip(out, 0.0, 1.0).reshape(img.shape))


def psnr(reference: GrayImage, estimate: GrayImage) -> float:
    """Peak signal-to-noise ratio for unit peak, capped at 99 dB."""
    if reference.shape != estimate.shape:
        raise DimensionMismatch(
            f"image shapes differ: {reference.shape} vs {estimate.shape}")
    mse = float(np.mean((reference.pixels - estimate.pixels) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, -10.0 * math.log10(mse))
