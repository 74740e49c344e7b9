"""Shift-and-add refocusing of a light field onto a chosen depth plane.

Each view is translated so that ballistic projections of the target plane
align, then the views are averaged. For a plane at depth z the per-view
shift is (view offset in baselines) * delta, delta = f*b / (z*p) pixels.
The dimensionless focus parameter alpha = z / (z + f) is accepted as an
alternative target; alpha = 1 is the infinite-depth limit (zero shift).

The 1/(alpha^2 f^2) prefactor of the continuous refocus integral is dropped:
a global scale cancels in Wiener inversion up to a rescaling of zeta, and
mean normalization keeps intensities in the nominal [0, 1] range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import CameraArrayGeometry, Image, LightField
from .errors import InvalidArgumentError

_WEIGHT_EPS = 1e-12


@dataclass(frozen=True)
class RefocusConfig:
    """Target plane (exactly one of alpha/depth), interpolation, normalization.

    normalization 'mean' divides each output pixel by the number of views
    that contributed valid samples there; 'sum' leaves the plain sum.
    boundary 'exclude' treats out-of-bounds samples as absent; 'wrap' is
    periodic (used by the filtered-photography commutation identity).
    """

    alpha: float | None = None
    depth: float | None = None
    interpolation: str = "bilinear"
    normalization: str = "mean"
    boundary: str = "exclude"

    def __post_init__(self):
        if (self.alpha is None) == (self.depth is None):
            raise InvalidArgumentError("give exactly one of alpha or depth")
        if self.alpha is not None and not (0 < self.alpha <= 1):
            raise InvalidArgumentError("alpha must be in (0, 1]")
        if self.depth is not None and not (np.isfinite(self.depth) and self.depth > 0):
            raise InvalidArgumentError("depth must be finite and > 0")
        if self.interpolation not in ("nearest", "bilinear"):
            raise InvalidArgumentError("interpolation must be nearest or bilinear")
        if self.normalization not in ("mean", "sum"):
            raise InvalidArgumentError("normalization must be mean or sum")
        if self.boundary not in ("exclude", "wrap"):
            raise InvalidArgumentError("boundary must be exclude or wrap")

    def shift_per_baseline(self, geometry: CameraArrayGeometry) -> float:
        """Pixel shift per unit view offset for this target plane."""
        b_px = geometry.baseline / geometry.pixel_pitch
        if self.depth is not None:
            return geometry.focal_length * b_px / self.depth
        if self.alpha == 1.0:
            return 0.0
        return b_px * (1.0 / self.alpha - 1.0)


def shift_for_view(i_u: int, i_v: int, config: RefocusConfig,
                   geometry: CameraArrayGeometry) -> tuple[float, float]:
    """Alignment shift (dx, dy) in pixels for view (i_u, i_v)."""
    ou, ov = geometry.view_offset(i_u, i_v)
    delta = config.shift_per_baseline(geometry)
    if not np.isfinite(delta):
        raise InvalidArgumentError("refocus shift is not finite")
    return (ou * delta, ov * delta)


def _translate(plane: np.ndarray, dy: float, dx: float,
               interpolation: str, boundary: str) -> np.ndarray:
    """out(p) = plane(p - (dy, dx)); trailing channel axis is untouched."""
    shift = [dy, dx] + [0.0] * (plane.ndim - 2)
    if boundary == "wrap":
        if float(dy).is_integer() and float(dx).is_integer():
            return np.roll(plane, (int(dy), int(dx)), axis=(0, 1))
        mode = "grid-wrap"
    else:
        mode = "constant"
    order = 0 if interpolation == "nearest" else 1
    return ndimage.shift(plane, shift, order=order, mode=mode, cval=0.0,
                         prefilter=False)


def refocus(lf: LightField, config: RefocusConfig) -> Image:
    """Synthesize the refocused image by translating and reducing all views.

    Views are accumulated in index order so the reduction is bit-reproducible.
    """
    if lf.n_views < 1:
        raise InvalidArgumentError("light field has no views")
    gu, gv = lf.views.shape[:2]
    acc = np.zeros(lf.views.shape[2:], dtype=np.float64)
    if config.boundary == "wrap":
        weights = None
    else:
        weights = np.zeros(lf.views.shape[2:3] + lf.views.shape[3:4], dtype=np.float64)
        ones = np.ones(weights.shape, dtype=np.float64)
    for i_u in range(gu):
        for i_v in range(gv):
            dx, dy = shift_for_view(i_u, i_v, config, lf.geometry)
            acc += _translate(lf.views[i_u, i_v], dy, dx,
                              config.interpolation, config.boundary)
            if weights is not None:
                weights += _translate(ones, dy, dx, config.interpolation,
                                      config.boundary)
    if config.normalization == "sum":
        out = acc
    elif weights is None:
        out = acc / lf.n_views
    else:
        w = weights if acc.ndim == 2 else weights[:, :, None]
        out = np.divide(acc, np.maximum(w, _WEIGHT_EPS),
                        out=np.zeros_like(acc), where=w > _WEIGHT_EPS)
    return Image(np.maximum(out, 0.0))
