"""PSNR and SSIM image quality metrics.

Multi-channel images are scored per channel and averaged; that convention is
recorded in the QualityReport so downstream numbers are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .core import Image
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class QualityReport:
    """PSNR (dB, +inf for identical images) and SSIM in [-1, 1]."""

    psnr_db: float
    ssim: float
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (-1.0 - 1e-12 <= self.ssim <= 1.0 + 1e-12):
            raise InvalidArgumentError("ssim must be in [-1, 1]")
        if not (self.psnr_db >= 0 or math.isinf(self.psnr_db)):
            raise InvalidArgumentError("psnr must be >= 0 or +inf")

    def to_dict(self) -> dict:
        return {"psnr_db": self.psnr_db, "ssim": self.ssim, **self.details}


def _check_pair(a: Image, b: Image):
    if (a.height, a.width, a.channels) != (b.height, b.width, b.channels):
        raise InvalidArgumentError(
            f"image dimensions differ: {(a.height, a.width, a.channels)} vs "
            f"{(b.height, b.width, b.channels)}")


def psnr(a: Image, b: Image, max_value: float = 1.0) -> float:
    """10 log10(max_value^2 / MSE); +inf when the images are identical."""
    _check_pair(a, b)
    if max_value <= 0:
        raise InvalidArgumentError("max_value must be > 0")
    mse = float(np.mean((a.samples - b.samples) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value ** 2 / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_plane(x: np.ndarray, y: np.ndarray, window: np.ndarray,
                c1: float, c2: float) -> float:
    mu_x = fftconvolve(x, window, mode="valid")
    mu_y = fftconvolve(y, window, mode="valid")
    xx = fftconvolve(x * x, window, mode="valid") - mu_x ** 2
    yy = fftconvolve(y * y, window, mode="valid") - mu_y ** 2
    xy = fftconvolve(x * y, window, mode="valid") - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def ssim(a: Image, b: Image, window: int = 11, k1: float = 0.01,
         k2: float = 0.03, max_value: float = 1.0, sigma: float = 1.5) -> float:
    """Structural similarity with a Gaussian window, averaged over valid
    positions (no padding). Defaults follow the original SSIM convention."""
    _check_pair(a, b)
    if window % 2 == 0 or window < 1:
        raise InvalidArgumentError("window must be odd and >= 1")
    if window > min(a.height, a.width):
        raise InvalidArgumentError("window larger than image")
    w = _gaussian_window(window, sigma)
    c1 = (k1 * max_value) ** 2
    c2 = (k2 * max_value) ** 2
    vals = [_ssim_plane(x, y, w, c1, c2)
            for x, y in zip(a.channel_stack(), b.channel_stack())]
    return float(np.clip(np.mean(vals), -1.0, 1.0))


def evaluate(a: Image, b: Image, max_value: float = 1.0,
             window: int = 11) -> QualityReport:
    """Bundle PSNR and SSIM of a against b into a QualityReport."""
    return QualityReport(
        psnr_db=psnr(a, b, max_value=max_value),
        ssim=ssim(a, b, window=window, max_value=max_value),
        details={"max_value": max_value, "window": window,
                 "channel_handling": "per-channel mean"},
    )
