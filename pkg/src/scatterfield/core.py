"""Domain types for images, camera arrays, and light fields.

Geometry convention: all planes are fronto-parallel and rectified, so the
per-view mapping between object plane and sensor plane is a pure 2-D shift.
View (0, 0) sits at the grid corner; signed view offsets are measured from
the array center (half-integer for even grids). Sensor coordinates are
"un-inverted": an object point offset +x maps to a positive sensor
displacement, so multi-view images align by translation alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class Image:
    """A 2-D intensity raster, grayscale (H, W) or linear RGB (H, W, 3).

    Samples are finite, non-negative floats; nominal range is [0, 1] but
    values above 1 are legal (e.g. sum-normalized refocus output).
    """

    samples: np.ndarray
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise InvalidArgumentError(
                f"image must be (H, W) or (H, W, 3), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError("image must be at least 1x1")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("image contains non-finite samples")
        if np.any(arr < 0):
            raise InvalidArgumentError("image contains negative samples")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else self.samples.shape[2]

    def channel_stack(self) -> np.ndarray:
        """Samples as (C, H, W) regardless of channel count."""
        if self.samples.ndim == 2:
            return self.samples[None]
        return np.moveaxis(self.samples, 2, 0)


@dataclass(frozen=True)
class CameraArrayGeometry:
    """Rectified camera grid: grid_u x grid_v pinholes, uniform baseline.

    object_depth is the distance from the object plane to the camera plane
    in meters; focal_length and pixel_pitch describe each identical camera.
    """

    grid_u: int
    grid_v: int
    baseline: float
    focal_length: float
    pixel_pitch: float
    object_depth: float

    def __post_init__(self):
        if self.grid_u < 1 or self.grid_v < 1:
            raise InvalidArgumentError("grid dimensions must be >= 1")
        for name in ("baseline", "focal_length", "pixel_pitch", "object_depth"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidArgumentError(f"{name} must be finite and > 0")

    @property
    def n_views(self) -> int:
        return self.grid_u * self.grid_v

    def view_offset(self, i_u: int, i_v: int) -> tuple[float, float]:
        """Signed offset of view (i_u, i_v) from the array center, in baselines."""
        if not (0 <= i_u < self.grid_u and 0 <= i_v < self.grid_v):
            raise InvalidArgumentError(
                f"view index ({i_u}, {i_v}) outside {self.grid_u}x{self.grid_v} grid")
        return (i_u - (self.grid_u - 1) / 2.0, i_v - (self.grid_v - 1) / 2.0)

    def camera_position(self, i_u: int, i_v: int) -> np.ndarray:
        """Pinhole position (x, y, z) in meters; object plane is z = 0."""
        ou, ov = self.view_offset(i_u, i_v)
        return np.array([ou * self.baseline, ov * self.baseline, self.object_depth])


@dataclass(frozen=True)
class ObjectPlane:
    """Sampling of the object plane: meters per pixel plus a lateral offset."""

    pixel_scale: float
    origin_offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not np.isfinite(self.pixel_scale) or self.pixel_scale <= 0:
            raise InvalidArgumentError("pixel_scale must be finite and > 0")


@dataclass(frozen=True, eq=False)
class LightField:
    """A camera-array capture: views[i_u, i_v] is the image seen from that pinhole.

    views has shape (grid_u, grid_v, H, W) or (grid_u, grid_v, H, W, 3).
    Immutable after construction; safe to share across workers.
    """

    geometry: CameraArrayGeometry
    views: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.views, dtype=np.float64)
        if arr.ndim not in (4, 5) or (arr.ndim == 5 and arr.shape[4] != 3):
            raise InvalidArgumentError(
                f"views must be (gu, gv, H, W[, 3]), got shape {arr.shape}")
        if arr.shape[0] != self.geometry.grid_u or arr.shape[1] != self.geometry.grid_v:
            raise InvalidArgumentError(
                f"view grid {arr.shape[:2]} does not match geometry "
                f"{(self.geometry.grid_u, self.geometry.grid_v)}")
        if arr.shape[2] < 1 or arr.shape[3] < 1:
            raise InvalidArgumentError("views must be at least 1x1 pixels")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("views contain non-finite samples")
        arr.setflags(write=False)
        object.__setattr__(self, "views", arr)

    @property
    def n_views(self) -> int:
        return self.views.shape[0] * self.views.shape[1]

    @property
    def height(self) -> int:
        return self.views.shape[2]

    @property
    def width(self) -> int:
        return self.views.shape[3]

    @property
    def channels(self) -> int:
        return 1 if self.views.ndim == 4 else 3

    def view(self, i_u: int, i_v: int) -> Image:
        self.geometry.view_offset(i_u, i_v)  # bounds check
        return Image(self.views[i_u, i_v])


def map_object_to_sensor(point, i_u: int, i_v: int,
                         geometry: CameraArrayGeometry) -> tuple[float, float]:
    """Project an object-plane point (meters) to sensor coordinates (pixels).

    Pinhole projection through view (i_u, i_v): the sensor displacement is
    f/z * (object offset - camera offset), converted to pixels. Coordinates
    are continuous (not rounded) and measured from the sensor center.
    """
    px, py = float(point[0]), float(point[1])
    if not (np.isfinite(px) and np.isfinite(py)):
        raise InvalidArgumentError("object point must be finite")
    ou, ov = geometry.view_offset(i_u, i_v)
    cam_x = ou * geometry.baseline
    cam_y = ov * geometry.baseline
    scale = geometry.focal_length / (geometry.object_depth * geometry.pixel_pitch)
    return ((px - cam_x) * scale, (py - cam_y) * scale)
