"""Backscatter (airlight) estimation and the full reconstruction pipeline.

Passive-luminous scenes carry an additive airlight term B_inf * (1 - t).
The dark channel prior estimates B_inf and the transmission map t from the
refocused image (backscatter noise is already suppressed by superimposing
views, so DCP runs once, not per view). After stripping the airlight the
remaining signal is ballistic + forward-scattered and is inverted with the
Wiener filter against the diffuse kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import Image
from .deconv import WienerConfig, wiener_deconv
from .diffusion import DiffuseKernel
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class AtmosphereEstimate:
    """Per-channel airlight intensity, each in [0, 1]."""

    b_inf: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in np.atleast_1d(np.asarray(self.b_inf, dtype=np.float64)))
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise InvalidArgumentError("atmosphere light must be in [0, 1]")
        object.__setattr__(self, "b_inf", vals)

    def as_array(self, channels: int) -> np.ndarray:
        if len(self.b_inf) == channels:
            return np.asarray(self.b_inf)
        if len(self.b_inf) == 1:
            return np.full(channels, self.b_inf[0])
        raise InvalidArgumentError(
            f"{len(self.b_inf)}-channel estimate incompatible with {channels}-channel image")


@dataclass(frozen=True)
class TransmissionMap:
    """Single-channel map of medium transmission, clamped to [t_min, 1]."""

    t: Image
    t_min: float = 0.1

    def __post_init__(self):
        if self.t.channels != 1:
            raise InvalidArgumentError("transmission map must be single-channel")
        arr = self.t.samples
        if np.any(arr < self.t_min - 1e-12) or np.any(arr > 1.0 + 1e-12):
            raise InvalidArgumentError("transmission values must lie in [t_min, 1]")


@dataclass(frozen=True)
class DcpConfig:
    """Dark-channel-prior parameters (window in pixels, odd)."""

    window: int = 15
    omega: float = 0.95
    t_min: float = 0.1
    atmosphere_percentile: float = 0.1

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise InvalidArgumentError("window must be odd and >= 1")
        if not (0 < self.omega <= 1):
            raise InvalidArgumentError("omega must be in (0, 1]")
        if not (0 < self.t_min < 1):
            raise InvalidArgumentError("t_min must be in (0, 1)")
        if not (0 < self.atmosphere_percentile <= 100):
            raise InvalidArgumentError("atmosphere_percentile must be in (0, 100]")


def dark_channel(image: Image, window: int = 15) -> Image:
    """Per-pixel channel minimum followed by an edge-replicated window min."""
    if window < 1 or window % 2 == 0:
        raise InvalidArgumentError("window must be odd and >= 1")
    per_pixel = image.samples if image.channels == 1 else image.samples.min(axis=2)
    dark = ndimage.minimum_filter(per_pixel, size=window, mode="nearest")
    return Image(dark)


def estimate_atmosphere(image: Image, dark: Image,
                        cfg: DcpConfig = DcpConfig()) -> AtmosphereEstimate:
    """Mean color of the brightest dark-channel pixels (top percentile)."""
    if (dark.height, dark.width) != (image.height, image.width):
        raise InvalidArgumentError("dark channel size must match image")
    flat_dark = dark.samples.ravel()
    n = max(1, int(round(flat_dark.size * cfg.atmosphere_percentile / 100.0)))
    idx = np.argsort(flat_dark, kind="stable")[-n:]  # deterministic ties
    stack = image.channel_stack()
    picked = [plane.ravel()[idx] for plane in stack]
    if idx.size == 0:
        # unreachable with n >= 1; kept as the documented fallback
        b = [float(plane.max()) for plane in stack]
    else:
        b = [float(np.clip(p.mean(), 0.0, 1.0)) for p in picked]
    return AtmosphereEstimate(tuple(b))


def estimate_transmission(image: Image, atmosphere: AtmosphereEstimate,
                          cfg: DcpConfig = DcpConfig()) -> TransmissionMap:
    """t = clamp(1 - omega * dark_channel(image / B), t_min, 1)."""
    b = atmosphere.as_array(image.channels)
    if np.any(b <= 0):
        raise InvalidArgumentError("atmosphere light has a zero channel")
    if image.channels == 1:
        normalized = image.samples / b[0]
    else:
        normalized = image.samples / b[None, None, :]
    dark = dark_channel(Image(normalized), cfg.window)
    t = np.clip(1.0 - cfg.omega * dark.samples, cfg.t_min, 1.0)
    return TransmissionMap(t=Image(t), t_min=cfg.t_min)


def remove_backscatter(image: Image, atmosphere: AtmosphereEstimate,
                       transmission: TransmissionMap) -> Image:
    """Subtract the additive airlight B_inf * (1 - t), clamped to >= 0."""
    if (transmission.t.height, transmission.t.width) != (image.height, image.width):
        raise InvalidArgumentError("transmission map size must match image")
    b = atmosphere.as_array(image.channels)
    t = transmission.t.samples
    if image.channels == 1:
        out = image.samples - b[0] * (1.0 - t)
    else:
        out = image.samples - b[None, None, :] * (1.0 - t[:, :, None])
    return Image(np.maximum(out, 0.0), meta=dict(image.meta))


def reconstruct_dlimj(refocused: Image, kernel: DiffuseKernel,
                      dcp: DcpConfig = DcpConfig(),
                      wiener: WienerConfig = WienerConfig(
                          include_ballistic_impulse=True),
                      mode: str = "self_luminous",
                      gamma: float | None = None):
    """Full inversion: refocused image -> estimated clear image.

    passive mode estimates airlight and transmission with DCP, strips the
    backscatter term, deconvolves against the diffuse kernel, and divides by
    max(t, t_min) to undo the ballistic attenuation. self_luminous mode
    skips DCP and divides by the scalar attenuation gamma (default 1).

    By default the deconvolution kernel is (diffuse kernel + unit impulse),
    letting ballistic photons pass undiffused; clearing
    wiener.include_ballistic_impulse inverts the bare kernel, appropriate
    when the ballistic share of the data is negligible.

    Returns (j_hat, transmission_map_or_None, atmosphere_or_None).
    """
    if mode not in ("self_luminous", "passive"):
        raise InvalidArgumentError("mode must be self_luminous or passive")
    if mode == "self_luminous":
        j_hat = wiener_deconv(refocused, kernel, wiener)
        g = 1.0 if gamma is None else float(gamma)
        if not (0 < g <= 1):
            raise InvalidArgumentError("gamma must be in (0, 1]")
        out = Image(j_hat.samples / g, meta=dict(j_hat.meta))
        return out, None, None

    dark = dark_channel(refocused, dcp.window)
    atmosphere = estimate_atmosphere(refocused, dark, dcp)
    transmission = estimate_transmission(refocused, atmosphere, dcp)
    stripped = remove_backscatter(refocused, atmosphere, transmission)
    j_hat = wiener_deconv(stripped, kernel, wiener)
    t = np.maximum(transmission.t.samples, dcp.t_min)
    if j_hat.channels == 1:
        out = j_hat.samples / t
    else:
        out = j_hat.samples / t[:, :, None]
    return (Image(out, meta=dict(j_hat.meta)), transmission, atmosphere)
