"""Convolution engine and Wiener inversion.

conv2/wiener_deconv work in the frequency domain on a zero-padded grid
(fog images are not periodic; wraparound would create ghost sources).
conv4d and refocus_kernel4d exist at test scale to exercise the
filtered-photography commutation identity: refocusing a 4-D-filtered light
field equals 2-D-filtering the refocused image with the refocused kernel.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft2, next_fast_len, rfft2

from .core import CameraArrayGeometry, Image, LightField
from .diffusion import DiffuseKernel
from .errors import BudgetExceededError, InvalidArgumentError
from .refocus import RefocusConfig, _translate

DEFAULT_CONV4D_BUDGET = 1 << 27

# prepared Wiener filters keyed by kernel bytes + transform shape + noise
# weighting; entries are immutable, so sharing across threads is safe
_FILTER_CACHE: dict = {}
_FILTER_LOCK = threading.Lock()
_FILTER_CACHE_MAX = 8


@dataclass(frozen=True)
class WienerConfig:
    """Wiener inversion parameters.

    zeta weights signal against noise: the filter is conj(K) / (|K|^2 + 1/zeta).
    include_ballistic_impulse adds a unit impulse at the kernel center so
    unscattered light passes through the forward model undiffused.
    """

    zeta: float = 1e4
    padding: str = "zero"
    include_ballistic_impulse: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.zeta) and self.zeta > 0):
            raise InvalidArgumentError("zeta must be finite and > 0")
        if self.padding not in ("zero", "periodic"):
            raise InvalidArgumentError("padding must be zero or periodic")


def _kernel_array(kernel) -> np.ndarray:
    arr = kernel.samples if isinstance(kernel, DiffuseKernel) else np.asarray(kernel)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError("kernel must be 2-D")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("kernel must be finite")
    return arr


def _embed_centered(kernel: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Place the kernel on a (padded) grid with its center pixel at the origin.

    Quadrant placement instead of a full-grid roll: the wrap-around copy is
    a whole extra pass over the padded array at large sizes.
    """
    kh, kw = kernel.shape
    cy, cx = (kh - 1) // 2, (kw - 1) // 2
    out = np.zeros(shape, dtype=np.float64)
    out[:kh - cy, :kw - cx] = kernel[cy:, cx:]
    if cy:
        out[-cy:, :kw - cx] = kernel[:cy, cx:]
    if cx:
        out[:kh - cy, -cx:] = kernel[cy:, :cx]
    if cy and cx:
        out[-cy:, -cx:] = kernel[:cy, :cx]
    return out


def conv2(image: Image, kernel, padding: str = "zero") -> Image:
    """Linear ('zero') or circular ('periodic') 2-D convolution via FFT.

    Zero-pad mode computes the full linear convolution on a grid of at least
    N + K - 1 per axis and crops the centered same-size result.
    """
    k = _kernel_array(kernel)
    h, w = image.height, image.width
    kh, kw = k.shape
    if padding == "zero":
        if kh > h or kw > w:
            raise InvalidArgumentError(
                f"kernel {k.shape} larger than image {(h, w)} in zero-pad mode")
        ph = _fast_even_len(h + kh - 1)
        pw = _fast_even_len(w + kw - 1)
        kf = rfft2(k, s=(ph, pw))
        planes = []
        for plane in image.channel_stack():
            full = irfft2(rfft2(plane, s=(ph, pw)) * kf, s=(ph, pw))
            cy, cx = (kh - 1) // 2, (kw - 1) // 2
            planes.append(full[cy:cy + h, cx:cx + w])
    elif padding == "periodic":
        if kh > h or kw > w:
            raise InvalidArgumentError(
                f"kernel {k.shape} larger than image {(h, w)} in periodic mode")
        kf = rfft2(_embed_centered(k, (h, w)))
        planes = [irfft2(rfft2(plane) * kf, s=(h, w))
                  for plane in image.channel_stack()]
    else:
        raise InvalidArgumentError("padding must be zero or periodic")
    out = planes[0] if len(planes) == 1 else np.stack(planes, axis=-1)
    meta = dict(image.meta)
    meta["conv2"] = {"padding": padding, "kernel_shape": [kh, kw]}
    if padding == "zero":
        meta["conv2"]["fft_shape"] = [ph, pw]
    return Image(np.maximum(out, 0.0), meta=meta)


def with_ballistic_impulse(kernel) -> np.ndarray:
    """Kernel plus a unit impulse at its center (ballistic pass-through)."""
    k = _kernel_array(kernel).copy()
    k[(k.shape[0] - 1) // 2, (k.shape[1] - 1) // 2] += 1.0
    return k


def wiener_deconv(image: Image, kernel, config: WienerConfig,
                  nsr_map: np.ndarray | None = None) -> Image:
    """Closed-form Wiener inversion of conv2's forward model.

    J_hat = IFFT[ conj(K) * FFT(J*) / (|K|^2 + 1/zeta) ] on the padded grid,
    clamped to >= 0. nsr_map, when given, replaces the scalar 1/zeta with a
    per-frequency noise-to-signal ratio; it must match the transform shape
    (see wiener_transform_shape).
    """
    k = _kernel_array(kernel)
    if config.include_ballistic_impulse:
        k = with_ballistic_impulse(k)
    if not np.any(k):
        raise InvalidArgumentError("kernel is all zeros")
    h, w = image.height, image.width
    ph, pw = wiener_transform_shape((h, w), k.shape, config.padding)
    if k.shape[0] > ph or k.shape[1] > pw:
        raise InvalidArgumentError("kernel larger than padded image")
    if nsr_map is None:
        nsr_key = float(1.0 / config.zeta)
    else:
        nsr_map = np.asarray(nsr_map, dtype=np.float64)
        expect = (ph, pw // 2 + 1)
        if nsr_map.shape != expect:
            raise InvalidArgumentError(
                f"nsr_map shape {nsr_map.shape} must match transform shape {expect}")
        nsr_key = nsr_map.tobytes()
    filt = _prepared_filter(k, (ph, pw), nsr_key, nsr_map)
    planes = []
    padded = np.zeros((ph, pw), dtype=np.float64)
    for plane in image.channel_stack():
        padded[:h, :w] = plane
        spec = rfft2(padded)
        spec *= filt
        planes.append(irfft2(spec, s=(ph, pw))[:h, :w])
    out = planes[0] if len(planes) == 1 else np.stack(planes, axis=-1)
    meta = dict(image.meta)
    meta["wiener"] = {
        "padding": config.padding,
        "zeta": config.zeta if nsr_map is None else "per-frequency map",
        "fft_shape": [ph, pw],
        "kernel_shape": list(k.shape),
        "ballistic_impulse": config.include_ballistic_impulse,
    }
    return Image(np.maximum(out, 0.0), meta=meta)


def _prepared_filter(k: np.ndarray, shape: tuple[int, int], nsr_key,
                     nsr_map) -> np.ndarray:
    """conj(K) / (|K|^2 + nsr) on the padded grid, memoized per kernel.

    Building the filter costs as much as deconvolving one frame; pipelines
    reuse one kernel across many frames, so the prepared spectrum is cached
    (bounded, FIFO eviction).
    """
    key = (k.shape, k.tobytes(), shape, nsr_key)
    with _FILTER_LOCK:
        cached = _FILTER_CACHE.get(key)
    if cached is not None:
        return cached
    kf = rfft2(_embed_centered(k, shape))
    filt = np.conj(kf)
    filt /= kf.real ** 2 + kf.imag ** 2 + (
        nsr_key if nsr_map is None else nsr_map)
    filt.setflags(write=False)
    with _FILTER_LOCK:
        if len(_FILTER_CACHE) >= _FILTER_CACHE_MAX:
            _FILTER_CACHE.pop(next(iter(_FILTER_CACHE)))
        _FILTER_CACHE[key] = filt
    return filt


def _fast_even_len(n: int) -> int:
    """Next fast composite length that is even (odd-length real FFTs fall off
    the split-radix fast path and can cost ~1.5x more)."""
    m = next_fast_len(n)
    while m % 2:
        m = next_fast_len(m + 1)
    return m


def wiener_transform_shape(image_shape, kernel_shape, padding: str):
    """Padded FFT grid used by wiener_deconv (even fast-composite sizes)."""
    h, w = image_shape
    kh, kw = kernel_shape
    if padding == "periodic":
        return (h, w)
    return (_fast_even_len(h + kh - 1), _fast_even_len(w + kw - 1))


@dataclass(frozen=True, eq=False)
class Kernel4D:
    """Dense 4-D filter over (du, dv, ds, dt) offsets, odd extent per axis."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 4:
            raise InvalidArgumentError("Kernel4D must be 4-dimensional")
        if any(n % 2 == 0 for n in arr.shape):
            raise InvalidArgumentError("Kernel4D extent must be odd in every axis")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("Kernel4D must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def _signed_offsets(n: int) -> np.ndarray:
    return np.arange(n) - (n - 1) // 2


def conv4d(lf: LightField, k: Kernel4D, angular: str = "wrap",
           budget: int = DEFAULT_CONV4D_BUDGET) -> LightField:
    """Direct dense 4-D convolution of a light field, test-scale only.

    Spatial axes always wrap. angular='wrap' wraps the view axes too and
    preserves the grid; angular='full' zero-pads them, returning an expanded
    (gu + ku - 1, gv + kv - 1) grid. The exact discrete commutation identity
    with the refocus operator requires angular='full': under angular wrap the
    shear picks up a spurious offset of (shift * grid extent) pixels on
    wrapped view pairs.
    """
    if lf.channels != 1:
        raise InvalidArgumentError("conv4d supports single-channel light fields")
    ku, kv, ks, kt = k.values.shape
    work = lf.views.size * k.values.size
    if work > budget:
        raise BudgetExceededError(
            f"conv4d size product {work} exceeds budget {budget}")
    gu, gv = lf.views.shape[:2]
    if angular == "wrap":
        out = np.zeros_like(lf.views)
        for a, da in enumerate(_signed_offsets(ku)):
            for b, db in enumerate(_signed_offsets(kv)):
                rolled = np.roll(lf.views, (da, db), axis=(0, 1))
                for c, dc in enumerate(_signed_offsets(ks)):
                    for d, dd in enumerate(_signed_offsets(kt)):
                        out += k.values[a, b, c, d] * np.roll(
                            rolled, (dc, dd), axis=(2, 3))
        geometry = lf.geometry
    elif angular == "full":
        out = np.zeros((gu + ku - 1, gv + kv - 1) + lf.views.shape[2:])
        for a in range(ku):
            for b in range(kv):
                for c, dc in enumerate(_signed_offsets(ks)):
                    for d, dd in enumerate(_signed_offsets(kt)):
                        out[a:a + gu, b:b + gv] += k.values[a, b, c, d] * np.roll(
                            lf.views, (dc, dd), axis=(2, 3))
        geometry = CameraArrayGeometry(
            grid_u=gu + ku - 1, grid_v=gv + kv - 1,
            baseline=lf.geometry.baseline,
            focal_length=lf.geometry.focal_length,
            pixel_pitch=lf.geometry.pixel_pitch,
            object_depth=lf.geometry.object_depth)
    else:
        raise InvalidArgumentError("angular must be wrap or full")
    return LightField(geometry=geometry, views=out)


def refocus_kernel4d(k: Kernel4D, config: RefocusConfig,
                     geometry: CameraArrayGeometry) -> np.ndarray:
    """Refocus a 4-D kernel: shift each (du, dv) slice by its angular offset
    times the per-baseline shift, then reduce with the config normalization.

    Returns a compact odd-sized 2-D filter; its support expands to hold the
    shifted slices, unlike image refocus where the canvas is fixed.
    """
    ku, kv, ks, kt = k.values.shape
    delta = config.shift_per_baseline(geometry)
    max_u = abs(delta) * (ku - 1) / 2
    max_v = abs(delta) * (kv - 1) / 2
    half_y = (ks - 1) // 2 + int(np.ceil(max_v)) + 1
    half_x = (kt - 1) // 2 + int(np.ceil(max_u)) + 1
    canvas = np.zeros((2 * half_y + 1, 2 * half_x + 1), dtype=np.float64)
    base = np.zeros_like(canvas)
    y0 = half_y - (ks - 1) // 2
    x0 = half_x - (kt - 1) // 2
    for a, du in enumerate(_signed_offsets(ku)):
        for b, dv in enumerate(_signed_offsets(kv)):
            base[:] = 0.0
            base[y0:y0 + ks, x0:x0 + kt] = k.values[a, b]
            canvas += _translate(base, dv * delta, du * delta,
                                 config.interpolation, "exclude")
    if config.normalization == "mean":
        canvas /= ku * kv
    return canvas
