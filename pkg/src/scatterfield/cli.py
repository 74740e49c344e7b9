"""Command-line surface: simulate | psf | refocus | kernel | reconstruct |
evaluate | ot, one binary with subcommands sharing validation and provenance.

Every run writes a provenance record (flags, seed, schema versions) next to
its outputs so any result can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import io as sfio
from .backscatter import DcpConfig, reconstruct_dlimj
from .deconv import WienerConfig
from .diffusion import (MediumParams, derive_coefficients, green_profile,
                        rasterize_kernel)
from .errors import ScatterFieldError
from .mcscatter import (SimConfig, optical_thickness_from_power, psf_study,
                        simulate, visibility_from_ot)
from .metrics import evaluate
from .refocus import RefocusConfig, refocus


def _write_provenance(path: Path, block: dict):
    with open(path, "w") as f:
        json.dump(sfio._jsonable(block), f, indent=2)


def _cmd_simulate(args) -> int:
    scene, config = sfio.load_scene(args.scene)
    if args.seed is not None:
        config = SimConfig(n_photons=config.n_photons, seed=args.seed,
                           batch_size=config.batch_size,
                           russian_roulette_threshold=config.russian_roulette_threshold)
    result = simulate(scene, config)
    medium = {"mu_a": scene.medium.mu_a, "mu_s": scene.medium.mu_s,
              "g": scene.medium.g, "slab_thickness_m": scene.slab_thickness}
    prov = sfio.provenance_block(
        "simulate", scene=str(args.scene), seed=config.seed,
        n_photons=config.n_photons, batch_size=config.batch_size,
        energy_balance=result.ledger.balance(),
        escaped=result.ledger.escaped, absorbed=result.ledger.absorbed,
        nee_deposited=result.ledger.nee_deposited,
        manifest_schema=sfio.MANIFEST_SCHEMA_VERSION)
    sfio.save_lightfield(result.lightfield, args.out, medium=medium,
                         provenance=prov)
    print(f"wrote {result.lightfield.n_views} views to {args.out} "
          f"(energy balance {result.ledger.balance():.9f})")
    return 0


def _cmd_psf(args) -> int:
    scene, config = sfio.load_scene(args.scene)
    study = psf_study(scene, config, include_ballistic=args.include_ballistic)
    out = Path(args.out)
    prov = sfio.provenance_block("psf", scene=str(args.scene), seed=config.seed,
                                 n_photons=config.n_photons,
                                 include_ballistic=args.include_ballistic)
    sfio.save_lightfield(study.lightfield, out, provenance=prov)
    sfio.save_pfm(out / "refocused_psf.pfm", sfio.quantize_f32(study.refocused))

    params = scene.medium.with_absorption_floor()
    D, _, _, _ = derive_coefficients(params.mu_a, params.mu_s, params.g)
    ps = (scene.geometry.object_depth * scene.geometry.pixel_pitch
          / scene.geometry.focal_length)
    analytic = green_profile(study.radii_px * ps, params.mu_a, D)
    analytic = analytic / analytic[0]
    with open(args.profile, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["radius_px", "empirical", "analytic"])
        for r, e, a in zip(study.radii_px, study.profile, analytic):
            writer.writerow([int(r), f"{e:.9g}", f"{a:.9g}"])
    print(f"wrote PSF study to {out} and profile to {args.profile}")
    return 0


def _refocus_config(args) -> RefocusConfig:
    return RefocusConfig(alpha=args.alpha, depth=args.depth,
                         interpolation=args.interpolation,
                         normalization=args.normalization)


def _cmd_refocus(args) -> int:
    lf = sfio.load_lightfield(args.lf)
    if args.depth is None and args.alpha is None:
        args.depth = lf.geometry.object_depth
    config = _refocus_config(args)
    img = sfio.quantize_f32(refocus(lf, config))
    sfio.save_image(args.out, img)
    _write_provenance(Path(args.out).with_suffix(".json"), sfio.provenance_block(
        "refocus", lf=str(args.lf), depth=args.depth, alpha=args.alpha,
        interpolation=args.interpolation, normalization=args.normalization))
    print(f"wrote refocused image to {args.out}")
    return 0


def _cmd_kernel(args) -> int:
    params = MediumParams(mu_a=args.mu_a, mu_s=args.mu_s, g=args.g)
    mirror = math.inf if args.mirror_distance is None else args.mirror_distance
    kernel = rasterize_kernel(params, pixel_scale=args.pixel_scale,
                              truncation_eps=args.eps, mirror_distance=mirror,
                              max_width=args.max_width)
    prov = sfio.provenance_block(
        "kernel", mu_a=args.mu_a, mu_s=args.mu_s, g=args.g,
        pixel_scale=args.pixel_scale, eps=args.eps, mirror_distance=mirror)
    sfio.save_kernel(kernel, args.out, provenance=prov)
    print(f"wrote {kernel.width}x{kernel.width} kernel to {args.out}")
    return 0


def _cmd_reconstruct(args) -> int:
    lf = sfio.load_lightfield(args.lf)
    kernel = sfio.load_kernel(args.kernel)
    depth = args.depth if args.depth is not None else lf.geometry.object_depth
    refocused = sfio.quantize_f32(refocus(lf, RefocusConfig(depth=depth)))
    mode = "self_luminous" if args.mode == "self" else "passive"
    dcp = DcpConfig(window=args.dcp_window, omega=args.omega, t_min=args.t_min)
    wiener = WienerConfig(zeta=args.zeta, padding=args.padding,
                          include_ballistic_impulse=not args.no_ballistic_impulse)
    j_hat, tmap, atmo = reconstruct_dlimj(refocused, kernel, dcp=dcp,
                                          wiener=wiener, mode=mode,
                                          gamma=args.gamma)
    sfio.save_image(args.out, sfio.quantize_f32(j_hat))
    if args.tmap and tmap is not None:
        sfio.save_image(args.tmap, sfio.quantize_f32(tmap.t))
    if args.atmo and atmo is not None:
        with open(args.atmo, "w") as f:
            json.dump({"b_inf": list(atmo.b_inf)}, f, indent=2)
    _write_provenance(Path(args.out).with_suffix(".json"), sfio.provenance_block(
        "reconstruct", lf=str(args.lf), kernel=str(args.kernel), depth=depth,
        zeta=args.zeta, mode=args.mode, gamma=args.gamma,
        wiener_meta=j_hat.meta.get("wiener", {})))
    print(f"wrote reconstruction to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    a = sfio.load_image(args.a)
    b = sfio.load_image(args.b)
    report = evaluate(a, b, max_value=args.max_value)
    payload = report.to_dict()
    payload["psnr_db"] = "inf" if math.isinf(report.psnr_db) else report.psnr_db
    payload["provenance"] = sfio.provenance_block(
        "evaluate", a=str(args.a), b=str(args.b), max_value=args.max_value)
    with open(args.report, "w") as f:
        json.dump(sfio._jsonable(payload), f, indent=2)
    print(f"PSNR = {report.psnr_db:.4f} dB  SSIM = {report.ssim:.4f}")
    return 0


def _cmd_ot(args) -> int:
    t = optical_thickness_from_power(args.po, args.pa)
    print(f"T = {t:.4f}")
    print(f"visibility_multiplier = {visibility_from_ot(t):.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatterfield",
        description="Imaging through scattering media: simulate, refocus, "
                    "build diffuse kernels, reconstruct, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scattering light field")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the scene seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("psf", help="point-source PSF study")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--profile", required=True,
                   help="CSV output: radius_px, empirical, analytic")
    p.add_argument("--include-ballistic", action="store_true",
                   dest="include_ballistic",
                   help="keep the unscattered near-delta in the empirical "
                        "profile (default: scattered light only, matching "
                        "what the analytic column models)")
    p.set_defaults(func=_cmd_psf)

    p = sub.add_parser("refocus", help="shift-and-add refocus of a light field")
    p.add_argument("--lf", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--depth", type=float, default=None)
    g.add_argument("--alpha", type=float, default=None)
    p.add_argument("--interpolation", choices=["nearest", "bilinear"],
                   default="bilinear")
    p.add_argument("--normalization", choices=["mean", "sum"], default="mean")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_refocus)

    p = sub.add_parser("kernel", help="rasterize the analytic diffuse kernel")
    p.add_argument("--mu-a", type=float, required=True, dest="mu_a")
    p.add_argument("--mu-s", type=float, required=True, dest="mu_s")
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--pixel-scale", type=float, required=True, dest="pixel_scale")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--mirror-distance", type=float, default=None,
                   dest="mirror_distance")
    p.add_argument("--max-width", type=int, default=1025, dest="max_width")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("reconstruct", help="refocus + Wiener inversion")
    p.add_argument("--lf", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--mode", choices=["self", "passive"], required=True)
    p.add_argument("--depth", type=float, default=None,
                   help="refocus depth (default: manifest object depth)")
    p.add_argument("--gamma", type=float, default=None,
                   help="ballistic attenuation to divide out (self mode)")
    p.add_argument("--padding", choices=["zero", "periodic"], default="zero")
    p.add_argument("--no-ballistic-impulse", action="store_true",
                   dest="no_ballistic_impulse",
                   help="deconvolve with the bare diffuse kernel instead of "
                        "(kernel + unit impulse)")
    p.add_argument("--dcp-window", type=int, default=15, dest="dcp_window")
    p.add_argument("--omega", type=float, default=0.95)
    p.add_argument("--t-min", type=float, default=0.1, dest="t_min")
    p.add_argument("--out", required=True)
    p.add_argument("--tmap", default=None)
    p.add_argument("--atmo", default=None)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("evaluate", help="PSNR/SSIM of a reconstruction")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--max-value", type=float, default=1.0, dest="max_value")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ot", help="optical thickness from power readings")
    p.add_argument("--po", type=float, required=True)
    p.add_argument("--pa", type=float, required=True)
    p.set_defaults(func=_cmd_ot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScatterFieldError as e:
        print(f"error[{type(e).__name__}]: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
