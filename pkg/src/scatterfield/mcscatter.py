"""Monte Carlo photon transport through a homogeneous scattering slab.

Forward simulator for scattering light fields: a self-luminous textured
plane at z = 0 radiates into a slab [0, slab_thickness] of homogeneous
medium; pinhole cameras sit on the plane z = object_depth. True pinholes
capture nothing by chance, so every emission and scattering vertex is
connected to every pinhole by peel-off next-event estimation:

    contribution = weight * angular_pdf(cos to pinhole)
                   * exp(-mu_t * in-slab distance) / distance^2

splatted to the pinhole-projected sensor pixel. Photon batches advance in
lockstep (vectorized) with per-batch seeded streams merged in batch order,
so a fixed seed and batch size reproduce the light field bit for bit.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import CameraArrayGeometry, Image, LightField, ObjectPlane
from .diffusion import MediumParams
from .errors import InvalidArgumentError
from .refocus import RefocusConfig, refocus

LOG20 = abs(math.log(0.05))
MAX_EVENTS = 20_000
ROULETTE_BOOST = 10.0


def worker_count(n_tasks: int) -> int:
    """Worker cap from SCATTERFIELD_THREADS (0 or unset = auto)."""
    raw = os.environ.get("SCATTERFIELD_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"SCATTERFIELD_THREADS={raw!r} is not an integer")
    if cap < 0:
        raise InvalidArgumentError("SCATTERFIELD_THREADS must be >= 0")
    if cap == 0:
        cap = min(8, os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


@dataclass(frozen=True)
class ScatterScene:
    """Emitter texture at z = 0, slab, medium, and the observing camera array.

    sensor_width/sensor_height set the per-view raster. emission is
    'lambertian' (cos-weighted forward hemisphere, LED-panel-like) or
    'isotropic' (uniform forward hemisphere).
    """

    emitter: Image
    emitter_plane: ObjectPlane
    slab_thickness: float
    medium: MediumParams
    geometry: CameraArrayGeometry
    sensor_width: int
    sensor_height: int
    emission: str = "lambertian"

    def __post_init__(self):
        if not (np.isfinite(self.slab_thickness) and self.slab_thickness > 0):
            raise InvalidArgumentError("slab_thickness must be finite and > 0")
        if self.slab_thickness > self.geometry.object_depth + 1e-12:
            raise InvalidArgumentError(
                "slab_thickness must not exceed object_depth (cameras are outside)")
        if self.sensor_width < 1 or self.sensor_height < 1:
            raise InvalidArgumentError("sensor raster must be at least 1x1")
        if self.emission not in ("lambertian", "isotropic"):
            raise InvalidArgumentError("emission must be lambertian or isotropic")

    def emitter_pixel_positions(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) meter coordinates of every emitter pixel center (flattened)."""
        h, w = self.emitter.height, self.emitter.width
        scale = self.emitter_plane.pixel_scale
        ox, oy = self.emitter_plane.origin_offset
        xs = (np.arange(w) - (w - 1) / 2.0) * scale + ox
        ys = (np.arange(h) - (h - 1) / 2.0) * scale + oy
        xx, yy = np.meshgrid(xs, ys)
        return xx.ravel(), yy.ravel()


@dataclass(frozen=True)
class PhotonState:
    """Position (m), unit direction, and statistical weight of one photon."""

    position: tuple[float, float, float]
    direction: tuple[float, float, float]
    weight: float = 1.0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        if pos.shape != (3,) or d.shape != (3,):
            raise InvalidArgumentError("position and direction must be 3-vectors")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(d))):
            raise InvalidArgumentError("photon state must be finite")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidArgumentError("direction must be unit length")
        if not (0 < self.weight <= 1):
            raise InvalidArgumentError("weight must be in (0, 1]")
        object.__setattr__(self, "position", tuple(float(v) for v in pos))
        object.__setattr__(self, "direction", tuple(float(v) for v in d))


@dataclass(frozen=True)
class SimConfig:
    """Photon budget, seed, batch partition, and roulette threshold."""

    n_photons: int = 100_000
    seed: int = 0
    batch_size: int = 65_536
    russian_roulette_threshold: float = 1e-3

    def __post_init__(self):
        if self.n_photons < 1:
            raise InvalidArgumentError("n_photons must be >= 1")
        if self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")
        if not (0 <= self.russian_roulette_threshold < 1):
            raise InvalidArgumentError("roulette threshold must be in [0, 1)")


@dataclass
class TransportLedger:
    """Exact weight bookkeeping: launched = escaped + absorbed + terminated
    + aborted. NEE deposits are expected-value estimates, tracked separately
    and not part of the balance (point pinholes capture nothing by chance)."""

    launched: float = 0.0
    escaped: float = 0.0
    absorbed: float = 0.0
    terminated: float = 0.0
    aborted: float = 0.0
    captured: float = 0.0
    nee_deposited: float = 0.0
    n_exit_unscattered: int = 0
    n_aborted: int = 0

    def merge(self, other: "TransportLedger"):
        for name in ("launched", "escaped", "absorbed", "terminated",
                     "aborted", "captured", "nee_deposited"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.n_exit_unscattered += other.n_exit_unscattered
        self.n_aborted += other.n_aborted

    def balance(self) -> float:
        """(escaped + absorbed + terminated + aborted + captured) / launched."""
        total = (self.escaped + self.absorbed + self.terminated
                 + self.aborted + self.captured)
        return total / self.launched if self.launched > 0 else math.nan


def sample_hg(g: float, rng: np.random.Generator, n: int | None = None):
    """Henyey-Greenstein cos(theta) samples; g = 0 is uniform on [-1, 1]."""
    if not (0 <= g < 1):
        raise InvalidArgumentError("g must be in [0, 1)")
    u = rng.random(n)
    if g == 0.0:
        cos_t = 2.0 * u - 1.0
    else:
        s = (1.0 - g * g) / (1.0 - g + 2.0 * g * u)
        cos_t = (1.0 + g * g - s * s) / (2.0 * g)
    return np.clip(cos_t, -1.0, 1.0)


def hg_phase(g: float, cos_t) -> np.ndarray:
    """HG phase function value per steradian (integrates to 1 over the sphere)."""
    cos_t = np.asarray(cos_t, dtype=np.float64)
    return (1.0 - g * g) / (4.0 * math.pi * (1.0 + g * g - 2.0 * g * cos_t) ** 1.5)


def _emission_pdf(emission: str, cos_t) -> np.ndarray:
    """Angular emission density per steradian over the forward hemisphere."""
    cos_t = np.asarray(cos_t, dtype=np.float64)
    fwd = cos_t > 0
    if emission == "lambertian":
        return np.where(fwd, cos_t / math.pi, 0.0)
    return np.where(fwd, 1.0 / (2.0 * math.pi), 0.0)


def _sample_emission(emission: str, rng: np.random.Generator, n: int):
    u1 = rng.random(n)
    u2 = rng.random(n)
    if emission == "lambertian":
        cos_t = np.sqrt(u1)
    else:
        cos_t = u1
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t ** 2))
    phi = 2.0 * math.pi * u2
    return np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1)


def _rotate_direction(d: np.ndarray, cos_t: np.ndarray,
                      phi: np.ndarray) -> np.ndarray:
    """Rotate each unit vector by polar angle acos(cos_t), azimuth phi."""
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t ** 2))
    cp, sp = np.cos(phi), np.sin(phi)
    ux, uy, uz = d[:, 0], d[:, 1], d[:, 2]
    out = np.empty_like(d)
    near_pole = np.abs(uz) > 1.0 - 1e-12
    den = np.sqrt(np.maximum(1e-24, 1.0 - uz ** 2))
    out[:, 0] = sin_t * (ux * uz * cp - uy * sp) / den + ux * cos_t
    out[:, 1] = sin_t * (uy * uz * cp + ux * sp) / den + uy * cos_t
    out[:, 2] = -sin_t * cp * den + uz * cos_t
    if np.any(near_pole):
        sign = np.sign(uz[near_pole])
        out[near_pole, 0] = sin_t[near_pole] * cp[near_pole]
        out[near_pole, 1] = sign * sin_t[near_pole] * sp[near_pole]
        out[near_pole, 2] = sign * cos_t[near_pole]
    norm = np.linalg.norm(out, axis=1, keepdims=True)
    return out / norm


class _SceneConsts:
    """Precomputed per-render constants shared by all batches."""

    def __init__(self, scene: ScatterScene):
        g = scene.geometry
        self.mu_a = scene.medium.mu_a
        self.mu_s = scene.medium.mu_s
        self.mu_t = scene.medium.mu_a + scene.medium.mu_s
        self.albedo = scene.medium.mu_s / self.mu_t if self.mu_t > 0 else 1.0
        self.g = scene.medium.g
        self.slab = scene.slab_thickness
        self.cam_z = g.object_depth
        self.px_scale = g.focal_length / g.pixel_pitch
        self.h, self.w = scene.sensor_height, scene.sensor_width
        self.emission = scene.emission
        cams = []
        for i_u in range(g.grid_u):
            for i_v in range(g.grid_v):
                cams.append(g.camera_position(i_u, i_v))
        self.cam_pos = np.asarray(cams)
        self.n_cams = len(cams)


def _splat(consts: _SceneConsts, accum: np.ndarray, cam_idx: int,
           pos: np.ndarray, values: np.ndarray, log: list | None):
    """Bin contributions at the pinhole projection of each vertex."""
    cam = consts.cam_pos[cam_idx]
    depth = consts.cam_z - pos[:, 2]
    col = np.rint((pos[:, 0] - cam[0]) / depth * consts.px_scale
                  + (consts.w - 1) / 2.0).astype(np.int64)
    row = np.rint((pos[:, 1] - cam[1]) / depth * consts.px_scale
                  + (consts.h - 1) / 2.0).astype(np.int64)
    ok = (row >= 0) & (row < consts.h) & (col >= 0) & (col < consts.w)
    ok &= values > 0
    np.add.at(accum[cam_idx], (row[ok], col[ok]), values[ok])
    if log is not None:
        for r, c, v in zip(row[ok], col[ok], values[ok]):
            log.append((cam_idx, int(r), int(c), float(v)))
    return float(values[ok].sum())


def _nee_all_cameras(consts: _SceneConsts, accum: np.ndarray, pos: np.ndarray,
                     w: np.ndarray, pdf_of_cos, log: list | None) -> float:
    """Peel off one expected-value contribution toward every pinhole.

    pdf_of_cos maps the cosine between the reference axis/direction and the
    vertex-to-pinhole direction to an angular density per steradian.
    """
    total = 0.0
    for ci in range(consts.n_cams):
        delta = consts.cam_pos[ci][None, :] - pos
        dist = np.linalg.norm(delta, axis=1)
        dir_c = delta / dist[:, None]
        in_slab = (consts.slab - pos[:, 2]) / np.maximum(dir_c[:, 2], 1e-300)
        atten = np.exp(-consts.mu_t * in_slab)
        contrib = w * pdf_of_cos(dir_c) * atten / dist ** 2
        total += _splat(consts, accum, ci, pos, contrib, log)
    return total


def _trace_batch(consts: _SceneConsts, pos: np.ndarray, dirn: np.ndarray,
                 w: np.ndarray, n_scatter: np.ndarray,
                 rng: np.random.Generator, accum: np.ndarray,
                 ledger: TransportLedger, rr_threshold: float,
                 log: list | None = None):
    """March a photon batch to termination, accumulating NEE splats."""
    alive = np.ones(len(w), dtype=bool)
    for _ in range(MAX_EVENTS):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        p, d, wt = pos[idx], dirn[idx], w[idx]

        if consts.mu_t <= 0:
            step = np.full(len(idx), np.inf)
        else:
            step = rng.exponential(1.0 / consts.mu_t, len(idx))
        dz = d[:, 2]
        t_bound = np.where(dz > 0, (consts.slab - p[:, 2]) / np.where(dz > 0, dz, 1.0),
                           np.where(dz < 0, p[:, 2] / np.where(dz < 0, -dz, 1.0),
                                    np.inf))
        exits = step >= t_bound

        if exits.any():
            e = idx[exits]
            ledger.escaped += float(w[e].sum())
            fwd = dirn[e][:, 2] > 0
            ledger.n_exit_unscattered += int(np.count_nonzero(
                (n_scatter[e] == 0) & fwd))
            exit_t = t_bound[exits]
            pos[e] = pos[e] + dirn[e] * exit_t[:, None]
            alive[e] = False

        stay = ~exits
        if not stay.any():
            continue
        s = idx[stay]
        pos[s] = pos[s] + dirn[s] * step[stay][:, None]
        n_scatter[s] += 1

        # absorb, then peel off with the post-absorption weight
        ledger.absorbed += float((w[s] * (1.0 - consts.albedo)).sum())
        w[s] *= consts.albedo
        d_in = dirn[s]
        ledger.nee_deposited += _nee_all_cameras(
            consts, accum, pos[s], w[s],
            lambda dir_c: hg_phase(consts.g, np.einsum("ij,ij->i", d_in, dir_c)),
            log)

        cos_t = sample_hg(consts.g, rng, len(s))
        phi = 2.0 * math.pi * rng.random(len(s))
        dirn[s] = _rotate_direction(dirn[s], cos_t, phi)

        # unbiased termination of low-weight photons
        if rr_threshold > 0:
            low = w[s] < rr_threshold
            if low.any():
                li = s[low]
                u = rng.random(len(li))
                survive = u < 1.0 / ROULETTE_BOOST
                killed = li[~survive]
                ledger.terminated += float(w[killed].sum())
                alive[killed] = False
                boosted = li[survive]
                ledger.terminated -= float((w[boosted] * (ROULETTE_BOOST - 1.0)).sum())
                w[boosted] *= ROULETTE_BOOST

        bad = ~(np.isfinite(pos[s]).all(axis=1) & np.isfinite(w[s]))
        if bad.any():
            bi = s[bad]
            ledger.aborted += float(w[bi][np.isfinite(w[bi])].sum())
            ledger.n_aborted += len(bi)
            alive[bi] = False
    else:
        hung = np.flatnonzero(alive)
        ledger.aborted += float(w[hung].sum())
        ledger.n_aborted += len(hung)


def trace_photon(scene: ScatterScene, state: PhotonState,
                 rng: np.random.Generator):
    """Trace a single photon; returns (splat list, ledger).

    Splats are (flat camera index, row, col, value) tuples from peel-off at
    each scattering vertex. Direct pinhole hits have probability zero for
    point pinholes, so an unscattered photon in vacuum simply exits straight
    and deposits nothing itself.
    """
    p = np.asarray(state.position, dtype=np.float64)
    if not (0.0 <= p[2] <= scene.slab_thickness):
        raise InvalidArgumentError("photon must start inside the slab")
    consts = _SceneConsts(scene)
    accum = np.zeros((consts.n_cams, consts.h, consts.w))
    ledger = TransportLedger(launched=state.weight)
    log: list = []
    _trace_batch(consts, p[None, :].copy(),
                 np.asarray(state.direction)[None, :].copy(),
                 np.array([state.weight]), np.zeros(1, dtype=np.int64),
                 rng, accum, ledger, rr_threshold=1e-3, log=log)
    return log, ledger


@dataclass
class SimResult:
    """Rendered light field plus transport bookkeeping."""

    lightfield: LightField
    ledger: TransportLedger
    config: SimConfig
    scene: ScatterScene = field(repr=False, default=None)


def _render_channel(scene: ScatterScene, emitter: np.ndarray,
                    config: SimConfig, seed_seq: np.random.SeedSequence,
                    include_ballistic: bool = True):
    consts = _SceneConsts(scene)
    total_intensity = float(emitter.sum())
    if total_intensity <= 0:
        raise InvalidArgumentError("emitter has zero total intensity")
    prob = (emitter / total_intensity).ravel()
    ex, ey = scene.emitter_pixel_positions()
    scale = scene.emitter_plane.pixel_scale

    n_batches = math.ceil(config.n_photons / config.batch_size)
    seeds = seed_seq.spawn(n_batches)
    sizes = [min(config.batch_size,
                 config.n_photons - b * config.batch_size)
             for b in range(n_batches)]

    def run(b: int):
        rng = np.random.Generator(np.random.PCG64(seeds[b]))
        n = sizes[b]
        accum = np.zeros((consts.n_cams, consts.h, consts.w))
        ledger = TransportLedger(launched=float(n))
        pick = rng.choice(len(prob), size=n, p=prob)
        jitter = (rng.random((n, 2)) - 0.5) * scale
        pos = np.stack([ex[pick] + jitter[:, 0], ey[pick] + jitter[:, 1],
                        np.zeros(n)], axis=1)
        dirn = _sample_emission(scene.emission, rng, n)
        w = np.ones(n)
        if include_ballistic:
            # ballistic term: peel off straight from the emission vertex
            ledger.nee_deposited += _nee_all_cameras(
                consts, accum, pos, w,
                lambda dir_c: _emission_pdf(scene.emission, dir_c[:, 2]), None)
        _trace_batch(consts, pos, dirn, w, np.zeros(n, dtype=np.int64), rng,
                     accum, ledger, config.russian_roulette_threshold)
        return accum, ledger

    n_workers = worker_count(n_batches)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, range(n_batches)))
    else:
        results = [run(b) for b in range(n_batches)]

    accum = np.zeros((consts.n_cams, consts.h, consts.w))
    ledger = TransportLedger()
    for acc_b, led_b in results:  # fixed batch order: reproducible reduction
        accum += acc_b
        ledger.merge(led_b)
    accum *= total_intensity / config.n_photons
    return accum, ledger


def simulate(scene: ScatterScene, config: SimConfig,
             include_ballistic: bool = True) -> SimResult:
    """Render the scattering light field of a scene; see render_lightfield.

    include_ballistic=False drops the emission-vertex peel-off, leaving only
    light that scattered at least once (the component the diffuse kernel
    models); used by PSF studies comparing against the analytic profile.
    """
    g = scene.geometry
    if float(scene.emitter.samples.sum()) <= 0:
        raise InvalidArgumentError("emitter has zero total intensity")
    root = np.random.SeedSequence(config.seed)
    channel_seqs = root.spawn(max(1, scene.emitter.channels))
    ledger = TransportLedger()
    planes = []
    consts = _SceneConsts(scene)
    for ch in range(scene.emitter.channels):
        emitter = scene.emitter.channel_stack()[ch]
        if float(emitter.sum()) <= 0:  # dark channel of a color emitter
            planes.append(np.zeros((consts.n_cams, consts.h, consts.w)))
            continue
        accum, led = _render_channel(scene, emitter, config, channel_seqs[ch],
                                     include_ballistic=include_ballistic)
        planes.append(accum)
        ledger.merge(led)
    if len(planes) == 1:
        stacked = planes[0]
    else:
        stacked = np.stack(planes, axis=-1)
    views = stacked.reshape((g.grid_u, g.grid_v) + stacked.shape[1:])
    views = views.astype(np.float32).astype(np.float64)
    lf = LightField(geometry=g, views=views)
    return SimResult(lightfield=lf, ledger=ledger, config=config, scene=scene)


def render_lightfield(scene: ScatterScene, config: SimConfig) -> LightField:
    """Monte Carlo render of the scene's scattering light field.

    Output pixel values are NEE expectation estimates scaled by
    (total emitter intensity / n_photons); stage output is quantized to
    float32 so file round-trips through PFM are bit-exact.
    """
    return simulate(scene, config).lightfield


def project_emitter_to_sensor(scene: ScatterScene) -> Image:
    """Ground-truth geometric projection of the emitter onto the sensor grid
    of the central (refocused) view, ignoring the medium."""
    consts = _SceneConsts(scene)
    ex, ey = scene.emitter_pixel_positions()
    col = np.rint(ex / scene.geometry.object_depth * consts.px_scale
                  + (consts.w - 1) / 2.0).astype(np.int64)
    row = np.rint(ey / scene.geometry.object_depth * consts.px_scale
                  + (consts.h - 1) / 2.0).astype(np.int64)
    out = np.zeros((consts.h, consts.w))
    vals = scene.emitter.samples if scene.emitter.channels == 1 \
        else scene.emitter.samples.mean(axis=2)
    ok = (row >= 0) & (row < consts.h) & (col >= 0) & (col < consts.w)
    np.add.at(out, (row[ok], col[ok]), vals.ravel()[ok])
    return Image(out)


@dataclass
class PsfStudy:
    """Refocused point-source response and its radial profile."""

    lightfield: LightField
    refocused: Image
    radii_px: np.ndarray
    profile: np.ndarray


def radial_profile(img: np.ndarray, center: tuple[float, float],
                   max_radius: int | None = None):
    """Azimuthal average binned by rounded radius from center (row, col)."""
    h, w = img.shape
    yy, xx = np.mgrid[0:h, 0:w]
    r = np.hypot(yy - center[0], xx - center[1])
    rbin = np.rint(r).astype(np.int64)
    rmax = int(rbin.max()) if max_radius is None else int(max_radius)
    sums = np.bincount(rbin.ravel(), weights=img.ravel(), minlength=rmax + 1)
    counts = np.bincount(rbin.ravel(), minlength=rmax + 1)
    radii = np.arange(rmax + 1)
    prof = np.divide(sums[:rmax + 1], counts[:rmax + 1],
                     out=np.zeros(rmax + 1), where=counts[:rmax + 1] > 0)
    return radii, prof


def psf_study(scene: ScatterScene, config: SimConfig,
              include_ballistic: bool = True) -> PsfStudy:
    """Render a single-pixel emitter, refocus at its depth, and return the
    peak-normalized radial profile of the refocused point-spread image.

    With include_ballistic=False the profile describes the scattered light
    alone. The unscattered term is a near-delta that can dominate the central
    pixel by orders of magnitude; excluding it is how the empirical profile
    becomes commensurable with the diffuse kernel it is checked against.
    """
    em = scene.emitter.samples
    if scene.emitter.channels != 1:
        raise InvalidArgumentError("PSF study needs a single-channel emitter")
    nz = np.argwhere(em > 0)
    if len(nz) != 1:
        raise InvalidArgumentError(
            f"PSF study needs exactly one nonzero emitter pixel, found {len(nz)}")
    lf = simulate(scene, config, include_ballistic=include_ballistic).lightfield
    ref = refocus(lf, RefocusConfig(depth=scene.geometry.object_depth))

    consts = _SceneConsts(scene)
    r, c = nz[0]
    ex = (c - (em.shape[1] - 1) / 2.0) * scene.emitter_plane.pixel_scale \
        + scene.emitter_plane.origin_offset[0]
    ey = (r - (em.shape[0] - 1) / 2.0) * scene.emitter_plane.pixel_scale \
        + scene.emitter_plane.origin_offset[1]
    center = (ey / scene.geometry.object_depth * consts.px_scale
              + (consts.h - 1) / 2.0,
              ex / scene.geometry.object_depth * consts.px_scale
              + (consts.w - 1) / 2.0)
    radii, prof = radial_profile(ref.samples, center)
    peak = prof.max()
    if peak > 0:
        prof = prof / peak
    return PsfStudy(lightfield=lf, refocused=ref, radii_px=radii, profile=prof)


@dataclass(frozen=True)
class OtMeasurement:
    """Collimated-beam optical thickness estimate T = ln(P_o / P_a)."""

    optical_thickness: float
    survivor_fraction: float
    n_photons: int
    lower_bound_only: bool = False


def measure_ot(medium: MediumParams, path_length: float,
               n_photons: int = 1_000_000, aperture_half_angle: float = 1e-3,
               seed: int = 0) -> OtMeasurement:
    """Simulate the power-meter measurement: a collimated beam crosses
    path_length of medium; only never-scattered photons reach the detector
    (the filter and diaphragms reject the rest), so P_a / P_o is the
    zero-event survival probability. With an ideally collimated source all
    unscattered photons arrive on-axis and any aperture_half_angle > 0
    accepts them.
    """
    if path_length <= 0:
        raise InvalidArgumentError("path_length must be > 0")
    if n_photons < 1:
        raise InvalidArgumentError("n_photons must be >= 1")
    if aperture_half_angle <= 0:
        raise InvalidArgumentError("aperture_half_angle must be > 0")
    mu_t = medium.mu_a + medium.mu_s
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    if mu_t == 0:
        survivors = n_photons
    else:
        first_hit = rng.exponential(1.0 / mu_t, n_photons)
        survivors = int(np.count_nonzero(first_hit > path_length))
    if survivors == 0:
        warnings.warn("no unscattered survivors; reporting lower bound "
                      f"T >= ln(n_photons) = {math.log(n_photons):.3f}")
        return OtMeasurement(optical_thickness=math.log(n_photons),
                             survivor_fraction=0.0, n_photons=n_photons,
                             lower_bound_only=True)
    frac = survivors / n_photons
    return OtMeasurement(optical_thickness=-math.log(frac),
                         survivor_fraction=frac, n_photons=n_photons)


def optical_thickness_from_power(p_original: float, p_attenuated: float) -> float:
    """T = ln(P_o / P_a) from power-meter readings."""
    if p_original <= 0 or p_attenuated <= 0:
        raise InvalidArgumentError("powers must be > 0")
    if p_attenuated > p_original:
        raise InvalidArgumentError("attenuated power exceeds original power")
    return math.log(p_original / p_attenuated)


def visibility_from_ot(optical_thickness: float) -> float:
    """Visibility multiplier T / |ln 0.05|."""
    if optical_thickness <= 0:
        raise InvalidArgumentError("optical thickness must be > 0")
    return optical_thickness / LOG20
