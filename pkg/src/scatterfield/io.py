"""File formats: PFM interchange, 16-bit PNG previews, JSON manifests.

PFM (portable float map) is the lossless link between pipeline stages; every
stage output is quantized to float32 at its boundary (see quantize_f32), so
composing stages through files is bit-identical to composing them in
process. PNG output is 16-bit with clamping to [0, 1].
"""

from __future__ import annotations

import getpass
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .core import CameraArrayGeometry, Image, LightField, ObjectPlane
from .diffusion import DiffuseKernel, MediumParams
from .errors import (DimensionMismatchError, ImageIOError, InvalidArgumentError,
                     ManifestError, MissingFileError, SchemaVersionError)
from .mcscatter import ScatterScene, SimConfig

MANIFEST_SCHEMA_VERSION = 1
SCENE_SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"


def quantize_f32(image: Image) -> Image:
    """Round samples to float32, the precision PFM can carry."""
    return Image(image.samples.astype(np.float32).astype(np.float64),
                 meta=dict(image.meta))


def save_pfm(path, image: Image | np.ndarray):
    """Write a little-endian PFM ('Pf' grayscale, 'PF' color)."""
    arr = image.samples if isinstance(image, Image) else np.asarray(image)
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 2:
        tag = b"Pf"
        data = np.flipud(arr)
    elif arr.ndim == 3 and arr.shape[2] == 3:
        tag = b"PF"
        data = np.flipud(arr)
    else:
        raise InvalidArgumentError(f"cannot write PFM with shape {arr.shape}")
    path = Path(path)
    try:
        with open(path, "wb") as f:
            f.write(tag + b"\n")
            f.write(f"{arr.shape[1]} {arr.shape[0]}\n".encode())
            f.write(b"-1.0\n")  # negative scale = little-endian
            f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())
    except OSError as e:
        raise ImageIOError(f"cannot write {path}: {e}") from e


def load_pfm(path) -> np.ndarray:
    """Read a PFM into float64 (values remain float32-representable)."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such file: {path}")
    try:
        with open(path, "rb") as f:
            tag = f.readline().strip()
            if tag not in (b"Pf", b"PF"):
                raise ImageIOError(f"{path}: not a PFM file (header {tag!r})")
            dims = f.readline().split()
            width, height = int(dims[0]), int(dims[1])
            scale = float(f.readline().strip())
            channels = 3 if tag == b"PF" else 1
            count = width * height * channels
            dtype = "<f4" if scale < 0 else ">f4"
            buf = np.frombuffer(f.read(count * 4), dtype=dtype, count=count)
    except (OSError, ValueError, IndexError) as e:
        if isinstance(e, ImageIOError):
            raise
        raise ImageIOError(f"cannot read {path}: {e}") from e
    if channels == 3:
        arr = buf.reshape(height, width, 3)
    else:
        arr = buf.reshape(height, width)
    if abs(scale) not in (0.0, 1.0):
        arr = arr * abs(scale)
    return np.flipud(arr).astype(np.float64)


def save_png(path, image: Image):
    """Write a 16-bit PNG, clamping samples to [0, 1]."""
    arr = np.clip(image.samples, 0.0, 1.0)
    q = np.rint(arr * 65535.0).astype(np.uint16)
    if q.ndim == 3:
        q = cv2.cvtColor(q, cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), q):
        raise ImageIOError(f"cannot write {path}")


def load_image(path) -> Image:
    """Decode an image file to linear floats in [0, 1] (PFM kept as-is)."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such file: {path}")
    if path.suffix.lower() == ".pfm":
        return Image(load_pfm(path))
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(f"cannot decode {path}")
    if raw.ndim == 3:
        if raw.shape[2] == 4:
            raw = raw[:, :, :3]
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    if raw.dtype == np.uint8:
        arr = raw.astype(np.float64) / 255.0
    elif raw.dtype == np.uint16:
        arr = raw.astype(np.float64) / 65535.0
    else:
        arr = raw.astype(np.float64)
    return Image(np.maximum(arr, 0.0))


def save_image(path, image: Image):
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        save_pfm(path, image)
    elif path.suffix.lower() == ".png":
        save_png(path, image)
    else:
        raise InvalidArgumentError(f"unsupported image suffix: {path.suffix}")


def provenance_block(command: str, **params) -> dict:
    return {
        "command": command,
        "argv": sys.argv,
        "user": _safe_user(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "params": _jsonable(params),
    }


def _safe_user() -> str:
    try:
        return getpass.getuser()
    except Exception:
        return "unknown"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass(frozen=True)
class LightFieldManifest:
    """On-disk description of a light-field directory."""

    grid_u: int
    grid_v: int
    baseline_m: float
    focal_length_m: float
    pixel_pitch_m: float
    object_depth_m: float
    width: int
    height: int
    channels: int
    file_pattern: str = "view_{u:02d}_{v:02d}.pfm"
    schema_version: int = MANIFEST_SCHEMA_VERSION
    medium: dict | None = None
    ground_truth: str | None = None
    provenance: dict = field(default_factory=dict)

    def geometry(self) -> CameraArrayGeometry:
        return CameraArrayGeometry(
            grid_u=self.grid_u, grid_v=self.grid_v, baseline=self.baseline_m,
            focal_length=self.focal_length_m, pixel_pitch=self.pixel_pitch_m,
            object_depth=self.object_depth_m)

    def view_filename(self, i_u: int, i_v: int) -> str:
        return self.file_pattern.format(u=i_u, v=i_v)

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "grid_u": self.grid_u, "grid_v": self.grid_v,
            "baseline_m": self.baseline_m,
            "focal_length_m": self.focal_length_m,
            "pixel_pitch_m": self.pixel_pitch_m,
            "object_depth_m": self.object_depth_m,
            "width": self.width, "height": self.height,
            "channels": self.channels,
            "file_pattern": self.file_pattern,
        }
        if self.medium is not None:
            d["medium"] = self.medium
        if self.ground_truth is not None:
            d["ground_truth"] = self.ground_truth
        if self.provenance:
            d["provenance"] = self.provenance
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LightFieldManifest":
        version = d.get("schema_version")
        if version != MANIFEST_SCHEMA_VERSION:
            raise SchemaVersionError(
                f"unknown manifest schema_version {version!r} "
                f"(supported: {MANIFEST_SCHEMA_VERSION})")
        try:
            return cls(
                grid_u=int(d["grid_u"]), grid_v=int(d["grid_v"]),
                baseline_m=float(d["baseline_m"]),
                focal_length_m=float(d["focal_length_m"]),
                pixel_pitch_m=float(d["pixel_pitch_m"]),
                object_depth_m=float(d["object_depth_m"]),
                width=int(d["width"]), height=int(d["height"]),
                channels=int(d["channels"]),
                file_pattern=d.get("file_pattern", "view_{u:02d}_{v:02d}.pfm"),
                medium=d.get("medium"), ground_truth=d.get("ground_truth"),
                provenance=d.get("provenance", {}))
        except (KeyError, TypeError, ValueError) as e:
            raise ManifestError(f"manifest missing or malformed field: {e}") from e


def _manifest_path(path) -> Path:
    p = Path(path)
    return p / MANIFEST_NAME if p.is_dir() else p


def load_manifest(path) -> LightFieldManifest:
    p = _manifest_path(path)
    if not p.exists():
        raise MissingFileError(f"no manifest at {p}")
    with open(p) as f:
        return LightFieldManifest.from_dict(json.load(f))


def load_lightfield(path) -> LightField:
    """Load a light field from a manifest (or its directory)."""
    p = _manifest_path(path)
    manifest = load_manifest(p)
    base = p.parent
    shape = (manifest.grid_u, manifest.grid_v, manifest.height, manifest.width)
    if manifest.channels == 3:
        shape = shape + (3,)
    views = np.zeros(shape, dtype=np.float64)
    for i_u in range(manifest.grid_u):
        for i_v in range(manifest.grid_v):
            fp = base / manifest.view_filename(i_u, i_v)
            if not fp.exists():
                raise MissingFileError(
                    f"view ({i_u}, {i_v}) missing: {fp}")
            img = load_image(fp)
            if (img.height, img.width, img.channels) != (
                    manifest.height, manifest.width, manifest.channels):
                raise DimensionMismatchError(
                    f"{fp}: got {(img.height, img.width, img.channels)}, "
                    f"manifest declares "
                    f"{(manifest.height, manifest.width, manifest.channels)}")
            views[i_u, i_v] = img.samples
    return LightField(geometry=manifest.geometry(), views=views)


def save_lightfield(lf: LightField, out_dir, medium: dict | None = None,
                    ground_truth: str | None = None,
                    provenance: dict | None = None,
                    file_pattern: str = "view_{u:02d}_{v:02d}.pfm"
                    ) -> LightFieldManifest:
    """Write views as PFM plus a manifest.json with a provenance block."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = LightFieldManifest(
        grid_u=lf.geometry.grid_u, grid_v=lf.geometry.grid_v,
        baseline_m=lf.geometry.baseline,
        focal_length_m=lf.geometry.focal_length,
        pixel_pitch_m=lf.geometry.pixel_pitch,
        object_depth_m=lf.geometry.object_depth,
        width=lf.width, height=lf.height, channels=lf.channels,
        file_pattern=file_pattern, medium=medium, ground_truth=ground_truth,
        provenance=provenance or {})
    for i_u in range(lf.geometry.grid_u):
        for i_v in range(lf.geometry.grid_v):
            save_pfm(out / manifest.view_filename(i_u, i_v),
                     Image(np.maximum(lf.views[i_u, i_v], 0.0)))
    with open(out / MANIFEST_NAME, "w") as f:
        json.dump(_jsonable(manifest.to_dict()), f, indent=2)
    return manifest


def save_kernel(kernel: DiffuseKernel, path, provenance: dict | None = None):
    """Kernel as PFM plus a JSON sidecar carrying its physical parameters."""
    path = Path(path)
    save_pfm(path, Image(kernel.samples))
    sidecar = {
        "schema_version": 1,
        "pixel_scale_m": kernel.pixel_scale,
        "mu_a": kernel.params.mu_a,
        "mu_s": kernel.params.mu_s,
        "g": kernel.params.g,
        "mirror_distance_m": ("inf" if math.isinf(kernel.mirror_distance)
                              else kernel.mirror_distance),
        "normalized": kernel.normalized,
        "width": kernel.width,
    }
    if provenance:
        sidecar["provenance"] = provenance
    with open(path.with_suffix(".json"), "w") as f:
        json.dump(_jsonable(sidecar), f, indent=2)


def load_kernel(path) -> DiffuseKernel:
    """Load a kernel PFM (+ sidecar); renormalizes float32 samples to unit
    sum when the sidecar declares a normalized kernel."""
    path = Path(path)
    samples = load_pfm(path)
    sidecar_path = path.with_suffix(".json")
    if not sidecar_path.exists():
        raise MissingFileError(f"kernel sidecar missing: {sidecar_path}")
    with open(sidecar_path) as f:
        side = json.load(f)
    mirror = side.get("mirror_distance_m", "inf")
    mirror = math.inf if mirror in ("inf", None) else float(mirror)
    params = MediumParams(mu_a=float(side["mu_a"]), mu_s=float(side["mu_s"]),
                          g=float(side["g"]))
    normalized = bool(side.get("normalized", True))
    if normalized:
        samples = samples / samples.sum()
    return DiffuseKernel(samples=samples, pixel_scale=float(side["pixel_scale_m"]),
                         params=params, mirror_distance=mirror,
                         normalized=normalized)


def load_scene(path) -> tuple[ScatterScene, SimConfig]:
    """Parse a scene JSON into a ScatterScene and its SimConfig."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such scene file: {path}")
    with open(path) as f:
        d = json.load(f)
    version = d.get("schema_version", SCENE_SCHEMA_VERSION)
    if version != SCENE_SCHEMA_VERSION:
        raise SchemaVersionError(f"unknown scene schema_version {version!r}")
    try:
        emitter_path = Path(d["emitter"])
        if not emitter_path.is_absolute():
            emitter_path = path.parent / emitter_path
        emitter = load_image(emitter_path)
        cam = d["camera"]
        geometry = CameraArrayGeometry(
            grid_u=int(cam["grid_u"]), grid_v=int(cam["grid_v"]),
            baseline=float(cam["baseline_m"]),
            focal_length=float(cam["focal_length_m"]),
            pixel_pitch=float(cam["pixel_pitch_m"]),
            object_depth=float(cam["object_depth_m"]))
        med = d["medium"]
        medium = MediumParams(mu_a=float(med["mu_a"]), mu_s=float(med["mu_s"]),
                              g=float(med["g"]))
        sensor = d["sensor"]
        scene = ScatterScene(
            emitter=emitter,
            emitter_plane=ObjectPlane(
                pixel_scale=float(d["emitter_pixel_scale_m"]),
                origin_offset=tuple(d.get("emitter_origin_offset_m", (0.0, 0.0)))),
            slab_thickness=float(d["slab_thickness_m"]),
            medium=medium, geometry=geometry,
            sensor_width=int(sensor["width"]),
            sensor_height=int(sensor["height"]),
            emission=d.get("emission", "lambertian"))
        config = SimConfig(
            n_photons=int(d["n_photons"]),
            seed=int(d.get("seed", 0)),
            batch_size=int(d.get("batch_size", 65_536)),
            russian_roulette_threshold=float(
                d.get("russian_roulette_threshold", 1e-3)))
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestError(f"scene file missing or malformed field: {e}") from e
    return scene, config


def save_scene(path, scene: ScatterScene, config: SimConfig, emitter_path: str):
    d = {
        "schema_version": SCENE_SCHEMA_VERSION,
        "emitter": emitter_path,
        "emitter_pixel_scale_m": scene.emitter_plane.pixel_scale,
        "emitter_origin_offset_m": list(scene.emitter_plane.origin_offset),
        "slab_thickness_m": scene.slab_thickness,
        "medium": {"mu_a": scene.medium.mu_a, "mu_s": scene.medium.mu_s,
                   "g": scene.medium.g},
        "camera": {
            "grid_u": scene.geometry.grid_u, "grid_v": scene.geometry.grid_v,
            "baseline_m": scene.geometry.baseline,
            "focal_length_m": scene.geometry.focal_length,
            "pixel_pitch_m": scene.geometry.pixel_pitch,
            "object_depth_m": scene.geometry.object_depth,
        },
        "sensor": {"width": scene.sensor_width, "height": scene.sensor_height},
        "emission": scene.emission,
        "n_photons": config.n_photons,
        "seed": config.seed,
        "batch_size": config.batch_size,
        "russian_roulette_threshold": config.russian_roulette_threshold,
    }
    with open(path, "w") as f:
        json.dump(_jsonable(d), f, indent=2)
