"""Medium parameterization and the analytic diffuse kernel.

The forward-scattered halo in a refocused multi-view image is modeled as the
impulse response of a steady-state diffusion process in the imaging plane:

    profile(r) = (exp(-kappa r) + exp(-kappa (r + 2 d))) / (2 sqrt(mu_a D))

with kappa = sqrt(mu_a / D). The second term is an image (mirror) source at
distance d enforcing a zero-normal-derivative boundary; d = inf disables it.
The 1-D-form solution is applied as a radially symmetric 2-D profile over the
sensor grid, which is how the deconvolution kernel is built in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateMediumError, InvalidArgumentError,
                     KernelTooLargeError, NeedsRegularizationError)

# Substituted for mu_a when the caller supplies a non-absorbing medium:
# mu_a_floor = MU_A_FLOOR_FRACTION * mu_s_prime. A strictly zero mu_a makes
# the diffusion Green function non-decaying.
MU_A_FLOOR_FRACTION = 1e-4

DEFAULT_MAX_KERNEL_WIDTH = 1025


@dataclass(frozen=True)
class MediumParams:
    """Homogeneous medium: absorption mu_a, scattering mu_s (1/m), anisotropy g.

    mu_s = 0 (vacuum) is legal so the simulator can render reference scenes;
    diffusion-side operations reject media they cannot describe.
    """

    mu_a: float
    mu_s: float
    g: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.mu_a, self.mu_s, self.g)):
            raise InvalidArgumentError("medium coefficients must be finite")
        if self.mu_a < 0:
            raise InvalidArgumentError("mu_a must be >= 0")
        if self.mu_s < 0:
            raise InvalidArgumentError("mu_s must be >= 0")
        if not (0 <= self.g < 1):
            raise InvalidArgumentError("g must be in [0, 1)")

    @property
    def mu_s_prime(self) -> float:
        """Reduced scattering coefficient mu_s (1 - g)."""
        return self.mu_s * (1.0 - self.g)

    @property
    def mu_eff(self) -> float:
        """Effective attenuation coefficient mu_a + mu_s'."""
        return self.mu_a + self.mu_s_prime

    @property
    def mu_t(self) -> float:
        """Total interaction coefficient mu_a + mu_s (beam extinction)."""
        return self.mu_a + self.mu_s

    @property
    def diffusion_coefficient(self) -> float:
        return derive_coefficients(self.mu_a, self.mu_s, self.g)[0]

    @property
    def transport_mean_free_path(self) -> float:
        return 1.0 / self.mu_s_prime

    def with_absorption_floor(self) -> "MediumParams":
        """Return params with mu_a floored so the Green profile decays."""
        floor = MU_A_FLOOR_FRACTION * self.mu_s_prime
        if self.mu_a >= floor:
            return self
        return MediumParams(floor, self.mu_s, self.g)


def derive_coefficients(mu_a: float, mu_s: float, g: float):
    """Return (D, mu_s_prime, mu_eff, l_t) for the diffusion approximation.

    D = 1 / (3 (mu_a + mu_s (1 - g))), l_t = 1 / mu_s'.
    """
    if mu_a < 0 or mu_s < 0 or not (0 <= g <= 1):
        raise InvalidArgumentError("require mu_a >= 0, mu_s >= 0, g in [0, 1]")
    mu_s_prime = mu_s * (1.0 - g)
    mu_eff = mu_a + mu_s_prime
    if mu_eff == 0:
        raise DegenerateMediumError(
            "mu_a = 0 and mu_s(1-g) = 0: diffusion coefficient undefined")
    D = 1.0 / (3.0 * mu_eff)
    l_t = math.inf if mu_s_prime == 0 else 1.0 / mu_s_prime
    return D, mu_s_prime, mu_eff, l_t


def attenuation_ratio(mu_s: float, path_length: float) -> float:
    """Beer-Lambert ballistic survival gamma = exp(-mu_s * z), in (0, 1]."""
    if mu_s < 0 or path_length < 0:
        raise InvalidArgumentError("mu_s and path_length must be >= 0")
    if not (np.isfinite(mu_s) and np.isfinite(path_length)):
        raise InvalidArgumentError("mu_s and path_length must be finite")
    return math.exp(-mu_s * path_length)


def green_profile(r, mu_a: float, D: float, mirror_distance: float = math.inf):
    """Diffusion Green profile at radius r (meters); r may be an array.

    (exp(-kappa r) + exp(-kappa (r + 2 d))) / (2 sqrt(mu_a D)),
    kappa = sqrt(mu_a / D). The mirror term vanishes as d -> inf.
    """
    if mu_a <= 0:
        raise NeedsRegularizationError(
            "green_profile requires mu_a > 0; apply an absorption floor "
            "(see MediumParams.with_absorption_floor)")
    if D <= 0:
        raise InvalidArgumentError("D must be > 0")
    if mirror_distance < 0:
        raise InvalidArgumentError("mirror_distance must be >= 0 (inf allowed)")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise InvalidArgumentError("radius must be >= 0")
    kappa = math.sqrt(mu_a / D)
    amp = 1.0 / (2.0 * math.sqrt(mu_a * D))
    out = np.exp(-kappa * r)
    if math.isfinite(mirror_distance):
        out = out + np.exp(-kappa * (r + 2.0 * mirror_distance))
    out = amp * out
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class DiffuseKernel:
    """Rasterized diffuse kernel: odd square grid of Green-profile samples.

    pixel_scale is meters per kernel pixel in the refocused (object-matched)
    plane: pixel_scale = object_depth * pixel_pitch / focal_length.
    """

    samples: np.ndarray
    pixel_scale: float
    params: MediumParams
    mirror_distance: float = math.inf
    normalized: bool = True

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 == 0:
            raise InvalidArgumentError("kernel must be a square odd-sized 2-D array")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidArgumentError("kernel samples must be finite and >= 0")
        c = arr.shape[0] // 2
        if arr[c, c] < arr.max():
            raise InvalidArgumentError("kernel center must be its maximum")
        if self.normalized and abs(arr.sum() - 1.0) > 1e-9:
            raise InvalidArgumentError("normalized kernel must sum to 1 +- 1e-9")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def width(self) -> int:
        return self.samples.shape[0]

    @property
    def half_width(self) -> int:
        return self.samples.shape[0] // 2


def rasterize_kernel(params: MediumParams, pixel_scale: float,
                     truncation_eps: float = 1e-3,
                     mirror_distance: float = math.inf,
                     max_width: int = DEFAULT_MAX_KERNEL_WIDTH) -> DiffuseKernel:
    """Sample the Green profile on a pixel grid and normalize to unit sum.

    The half-width R is the smallest integer radius where
    profile(R * pixel_scale) / profile(0) <= truncation_eps. The ratio is
    exp(-kappa r) for any mirror distance, so R = ceil(ln(1/eps) / (kappa *
    pixel_scale)); if the profile already falls to eps within one pixel the
    kernel collapses to the 1x1 identity.
    """
    if pixel_scale <= 0 or not np.isfinite(pixel_scale):
        raise InvalidArgumentError("pixel_scale must be finite and > 0")
    if not (0 < truncation_eps < 0.1):
        raise InvalidArgumentError("truncation_eps must be in (0, 0.1)")
    params = params.with_absorption_floor()
    D, _, _, _ = derive_coefficients(params.mu_a, params.mu_s, params.g)

    kappa = math.sqrt(params.mu_a / D)
    if math.exp(-kappa * pixel_scale) <= truncation_eps:
        half = 0
    else:
        half = math.ceil(math.log(1.0 / truncation_eps) / (kappa * pixel_scale))
    width = 2 * half + 1
    if width > max_width:
        raise KernelTooLargeError(
            f"kernel width {width} exceeds the configured maximum {max_width}; "
            "increase truncation_eps or coarsen pixel_scale")

    ax = np.arange(-half, half + 1, dtype=np.float64)
    rr = np.hypot(ax[:, None], ax[None, :]) * pixel_scale
    samples = green_profile(rr, params.mu_a, D, mirror_distance)
    samples = samples / samples.sum()
    return DiffuseKernel(samples=samples, pixel_scale=pixel_scale, params=params,
                         mirror_distance=mirror_distance, normalized=True)
