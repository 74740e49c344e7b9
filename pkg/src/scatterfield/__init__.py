"""scatterfield: imaging through strongly scattering media.

Refocus a multi-view capture into a diffuse-source image, then invert the
forward-scattering blur with an analytic diffusion-equation kernel. Includes
a Monte Carlo photon-transport simulator so the physical claims are testable
end to end at desk scale.
"""

from .backscatter import (AtmosphereEstimate, DcpConfig, TransmissionMap,
                          dark_channel, estimate_atmosphere,
                          estimate_transmission, reconstruct_dlimj,
                          remove_backscatter)
from .core import (CameraArrayGeometry, Image, LightField, ObjectPlane,
                   map_object_to_sensor)
from .deconv import (Kernel4D, WienerConfig, conv2, conv4d, refocus_kernel4d,
                     wiener_deconv)
from .diffusion import (DiffuseKernel, MediumParams, attenuation_ratio,
                        derive_coefficients, green_profile, rasterize_kernel)
from .mcscatter import (OtMeasurement, PhotonState, PsfStudy, ScatterScene,
                        SimConfig, SimResult, measure_ot,
                        optical_thickness_from_power, psf_study,
                        render_lightfield, sample_hg, simulate, trace_photon,
                        visibility_from_ot)
from .metrics import QualityReport, evaluate, psnr, ssim
from .refocus import RefocusConfig, refocus, shift_for_view

__version__ = "0.1.0"

__all__ = [
    "AtmosphereEstimate", "CameraArrayGeometry", "DcpConfig", "DiffuseKernel",
    "Image", "Kernel4D", "LightField", "MediumParams", "ObjectPlane",
    "OtMeasurement", "PhotonState", "PsfStudy", "QualityReport",
    "RefocusConfig", "ScatterScene", "SimConfig", "SimResult",
    "TransmissionMap", "WienerConfig", "attenuation_ratio", "conv2", "conv4d",
    "dark_channel", "derive_coefficients", "estimate_atmosphere",
    "estimate_transmission", "evaluate", "green_profile",
    "map_object_to_sensor", "measure_ot", "optical_thickness_from_power",
    "psf_study", "psnr", "rasterize_kernel", "reconstruct_dlimj", "refocus",
    "refocus_kernel4d", "remove_backscatter", "render_lightfield", "sample_hg",
    "shift_for_view", "simulate", "ssim", "trace_photon", "visibility_from_ot",
    "wiener_deconv",
]
