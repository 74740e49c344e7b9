import json
import math
import subprocess
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scatterfield import io as sfio
from scatterfield.backscatter import reconstruct_dlimj
from scatterfield.cli import main
from scatterfield.core import CameraArrayGeometry, Image, LightField
from scatterfield.deconv import WienerConfig
from scatterfield.diffusion import MediumParams, rasterize_kernel
from scatterfield.errors import (DimensionMismatchError, MissingFileError,
                                 SchemaVersionError)
from scatterfield.mcscatter import simulate
from scatterfield.refocus import RefocusConfig, refocus


def geom(gu=2, gv=2):
    return CameraArrayGeometry(grid_u=gu, grid_v=gv, baseline=4e-3,
                               focal_length=0.005, pixel_pitch=1e-5,
                               object_depth=0.5)


class TestPfm:
    @settings(deadline=None, max_examples=25)
    @given(arrays(np.float32, (7, 5), elements=st.floats(0, 1e6, width=32)))
    def test_roundtrip_bit_identical_gray(self, arr):
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "x.pfm"
            sfio.save_pfm(path, Image(np.abs(arr).astype(np.float64)))
            back = sfio.load_pfm(path)
        assert np.array_equal(back.astype(np.float32),
                              np.abs(arr).astype(np.float32))

    def test_roundtrip_color(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = rng.random((6, 9, 3)).astype(np.float32).astype(np.float64)
        sfio.save_pfm(tmp_path / "c.pfm", Image(arr))
        assert np.array_equal(sfio.load_pfm(tmp_path / "c.pfm"), arr)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFileError):
            sfio.load_pfm(tmp_path / "absent.pfm")

    def test_quantize_f32_is_idempotent(self):
        rng = np.random.default_rng(1)
        img = Image(rng.random((8, 8)))
        q1 = sfio.quantize_f32(img)
        q2 = sfio.quantize_f32(q1)
        assert np.array_equal(q1.samples, q2.samples)

    def test_reads_big_endian_with_scale(self, tmp_path):
        arr = np.arange(12, dtype=">f4").reshape(3, 4)
        with open(tmp_path / "be.pfm", "wb") as f:
            f.write(b"Pf\n4 3\n2.0\n")  # positive scale: big-endian, x2
            f.write(np.flipud(arr).tobytes())
        back = sfio.load_pfm(tmp_path / "be.pfm")
        assert np.array_equal(back, arr.astype(np.float64) * 2.0)

    def test_rejects_non_pfm(self, tmp_path):
        (tmp_path / "bad.pfm").write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(sfio.ImageIOError):
            sfio.load_pfm(tmp_path / "bad.pfm")

    def test_unsupported_suffix(self, tmp_path):
        from scatterfield.errors import InvalidArgumentError
        with pytest.raises(InvalidArgumentError):
            sfio.save_image(tmp_path / "x.tiff", Image(np.ones((2, 2))))


class TestPng:
    def test_16bit_roundtrip_bound(self, tmp_path):
        rng = np.random.default_rng(2)
        arr = rng.random((16, 16))
        sfio.save_png(tmp_path / "x.png", Image(arr))
        back = sfio.load_image(tmp_path / "x.png")
        assert np.max(np.abs(back.samples - arr)) <= 1.0 / 65535

    def test_16bit_color_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        arr = rng.random((8, 8, 3))
        sfio.save_png(tmp_path / "c.png", Image(arr))
        back = sfio.load_image(tmp_path / "c.png")
        assert back.channels == 3
        assert np.max(np.abs(back.samples - arr)) <= 1.0 / 65535

    def test_full_scale_maps_to_one(self, tmp_path):
        sfio.save_png(tmp_path / "w.png", Image(np.ones((4, 4))))
        back = sfio.load_image(tmp_path / "w.png")
        assert np.all(back.samples == 1.0)


class TestLightFieldIO:
    def make_lf(self, seed=0):
        rng = np.random.default_rng(seed)
        views = rng.random((2, 2, 10, 12)).astype(np.float32).astype(np.float64)
        return LightField(geometry=geom(), views=views)

    def test_roundtrip(self, tmp_path):
        lf = self.make_lf()
        sfio.save_lightfield(lf, tmp_path / "lf")
        back = sfio.load_lightfield(tmp_path / "lf")
        assert np.array_equal(back.views, lf.views)
        assert back.geometry == lf.geometry

    def test_single_constant_view(self, tmp_path):
        lf = LightField(geometry=geom(1, 1), views=np.full((1, 1, 2, 2), 0.5))
        sfio.save_lightfield(lf, tmp_path / "one")
        back = sfio.load_lightfield(tmp_path / "one")
        assert np.all(back.views == 0.5)

    def test_missing_view_named(self, tmp_path):
        lf = self.make_lf()
        sfio.save_lightfield(lf, tmp_path / "lf")
        (tmp_path / "lf" / "view_01_00.pfm").unlink()
        with pytest.raises(MissingFileError, match=r"\(1, 0\)"):
            sfio.load_lightfield(tmp_path / "lf")

    def test_dimension_mismatch(self, tmp_path):
        lf = self.make_lf()
        sfio.save_lightfield(lf, tmp_path / "lf")
        sfio.save_pfm(tmp_path / "lf" / "view_00_01.pfm",
                      Image(np.zeros((3, 3))))
        with pytest.raises(DimensionMismatchError):
            sfio.load_lightfield(tmp_path / "lf")

    def test_unknown_schema_version(self, tmp_path):
        lf = self.make_lf()
        sfio.save_lightfield(lf, tmp_path / "lf")
        manifest = json.loads((tmp_path / "lf" / "manifest.json").read_text())
        manifest["schema_version"] = 99
        (tmp_path / "lf" / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(SchemaVersionError):
            sfio.load_lightfield(tmp_path / "lf")

    def test_custom_file_pattern(self, tmp_path):
        lf = self.make_lf()
        sfio.save_lightfield(lf, tmp_path / "lf", file_pattern="v{u}x{v}.pfm")
        assert (tmp_path / "lf" / "v1x0.pfm").exists()
        back = sfio.load_lightfield(tmp_path / "lf")
        assert np.array_equal(back.views, lf.views)

    def test_manifest_carries_medium_and_provenance(self, tmp_path):
        lf = self.make_lf()
        sfio.save_lightfield(lf, tmp_path / "lf",
                             medium={"mu_a": 0.1, "mu_s": 5.0, "g": 0.2,
                                     "slab_thickness_m": 0.03},
                             provenance={"command": "test", "seed": 7})
        m = sfio.load_manifest(tmp_path / "lf")
        assert m.medium["mu_s"] == 5.0
        assert m.provenance["seed"] == 7


class TestKernelIO:
    def test_roundtrip_preserves_params_and_unit_sum(self, tmp_path):
        k = rasterize_kernel(MediumParams(0.05, 1.0, 0.3), pixel_scale=0.5,
                             truncation_eps=1e-2)
        sfio.save_kernel(k, tmp_path / "k.pfm")
        back = sfio.load_kernel(tmp_path / "k.pfm")
        assert back.params == k.params
        assert back.pixel_scale == k.pixel_scale
        assert math.isinf(back.mirror_distance)
        assert back.samples.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.max(np.abs(back.samples - k.samples)) < 1e-7

    def test_sidecar_required(self, tmp_path):
        sfio.save_pfm(tmp_path / "k.pfm", Image(np.ones((3, 3)) / 9))
        with pytest.raises(MissingFileError):
            sfio.load_kernel(tmp_path / "k.pfm")


def write_scene(tmp_path, emitter, n_photons=3000, seed=1, grid=2,
                sensor=24, medium=(0.0, 0.0, 0.0), slab=0.5):
    sfio.save_pfm(tmp_path / "emitter.pfm", Image(emitter))
    scene = {
        "schema_version": 1,
        "emitter": "emitter.pfm",
        "emitter_pixel_scale_m": 1e-3,
        "slab_thickness_m": slab,
        "medium": {"mu_a": medium[0], "mu_s": medium[1], "g": medium[2]},
        "camera": {"grid_u": grid, "grid_v": grid, "baseline_m": 4e-3,
                   "focal_length_m": 0.005, "pixel_pitch_m": 1e-5,
                   "object_depth_m": 0.5},
        "sensor": {"width": sensor, "height": sensor},
        "n_photons": n_photons,
        "seed": seed,
    }
    (tmp_path / "scene.json").write_text(json.dumps(scene))
    return tmp_path / "scene.json"


def emitter_block(size=24):
    em = np.zeros((size, size))
    em[9:15, 9:15] = 1.0
    return em


class TestSceneIO:
    def test_load_scene(self, tmp_path):
        path = write_scene(tmp_path, emitter_block(), medium=(0.1, 8.0, 0.4))
        scene, config = sfio.load_scene(path)
        assert scene.medium == MediumParams(0.1, 8.0, 0.4)
        assert scene.sensor_width == 24
        assert config.n_photons == 3000
        assert config.seed == 1

    def test_unknown_scene_schema(self, tmp_path):
        path = write_scene(tmp_path, emitter_block())
        d = json.loads(path.read_text())
        d["schema_version"] = 2
        path.write_text(json.dumps(d))
        with pytest.raises(SchemaVersionError):
            sfio.load_scene(path)


class TestCli:
    def test_ot_prints_paper_values(self, capsys):
        assert main(["ot", "--po", "0.339", "--pa", "5.63e-4"]) == 0
        out = capsys.readouterr().out
        t = float(out.splitlines()[0].split("=")[1])
        v = float(out.splitlines()[1].split("=")[1])
        assert t == pytest.approx(6.40, abs=0.01)
        assert v == pytest.approx(2.137, abs=0.001)

    def test_ot_invalid_exits_nonzero(self, capsys):
        assert main(["ot", "--po", "0.1", "--pa", "0.2"]) != 0
        assert "error[" in capsys.readouterr().err

    def test_console_script_installed(self):
        out = subprocess.run(["scatterfield", "ot", "--po", "1.0",
                              "--pa", "0.36787944117144233"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert "T = 1.0000" in out.stdout

    def test_kernel_subcommand(self, tmp_path, capsys):
        rc = main(["kernel", "--mu-a", "0.05", "--mu-s", "1.0", "--g", "0.3",
                   "--pixel-scale", "0.5", "--eps", "1e-2",
                   "--out", str(tmp_path / "k.pfm")])
        assert rc == 0
        k = sfio.load_kernel(tmp_path / "k.pfm")
        assert k.samples.sum() == pytest.approx(1.0, abs=1e-9)
        assert (tmp_path / "k.json").exists()

    def test_kernel_validation_error_code(self, tmp_path, capsys):
        rc = main(["kernel", "--mu-a", "0.05", "--mu-s", "1.0", "--g", "0.3",
                   "--pixel-scale", "0.5", "--eps", "0.5",
                   "--out", str(tmp_path / "k.pfm")])
        assert rc == 2  # invalid-argument

    def test_evaluate_subcommand(self, tmp_path, capsys):
        rng = np.random.default_rng(4)
        a = Image(rng.random((16, 16)))
        sfio.save_pfm(tmp_path / "a.pfm", a)
        sfio.save_pfm(tmp_path / "b.pfm", a)
        rc = main(["evaluate", "--a", str(tmp_path / "a.pfm"),
                   "--b", str(tmp_path / "b.pfm"),
                   "--report", str(tmp_path / "r.json")])
        assert rc == 0
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["psnr_db"] == "inf"
        assert report["ssim"] == 1.0

    def test_simulate_writes_manifest_with_provenance(self, tmp_path, capsys):
        scene_path = write_scene(tmp_path, emitter_block())
        rc = main(["simulate", "--scene", str(scene_path),
                   "--out", str(tmp_path / "lf")])
        assert rc == 0
        m = sfio.load_manifest(tmp_path / "lf")
        assert m.provenance["params"]["seed"] == 1
        assert m.medium["mu_s"] == 0.0
        lf = sfio.load_lightfield(tmp_path / "lf")
        assert lf.views.sum() > 0

    def test_refocus_subcommand(self, tmp_path, capsys):
        scene_path = write_scene(tmp_path, emitter_block())
        main(["simulate", "--scene", str(scene_path),
              "--out", str(tmp_path / "lf")])
        rc = main(["refocus", "--lf", str(tmp_path / "lf"),
                   "--out", str(tmp_path / "ref.pfm")])
        assert rc == 0
        img = sfio.load_image(tmp_path / "ref.pfm")
        assert img.samples.sum() > 0
        assert (tmp_path / "ref.json").exists()

    def test_missing_lightfield_error_code(self, tmp_path, capsys):
        rc = main(["refocus", "--lf", str(tmp_path / "absent"),
                   "--out", str(tmp_path / "x.pfm")])
        assert rc == 9  # missing-file

    def test_refocus_alpha_target(self, tmp_path, capsys):
        scene_path = write_scene(tmp_path, emitter_block())
        main(["simulate", "--scene", str(scene_path),
              "--out", str(tmp_path / "lf")])
        rc = main(["refocus", "--lf", str(tmp_path / "lf"), "--alpha", "1.0",
                   "--out", str(tmp_path / "a.pfm")])
        assert rc == 0
        lf = sfio.load_lightfield(tmp_path / "lf")
        img = sfio.load_image(tmp_path / "a.pfm")
        expect = lf.views.mean(axis=(0, 1)).astype(np.float32)
        assert np.array_equal(img.samples.astype(np.float32), expect)

    def test_psf_subcommand_writes_csv(self, tmp_path, capsys):
        em = np.zeros((25, 25))
        em[12, 12] = 1.0
        scene_path = write_scene(tmp_path, em, n_photons=5000, sensor=25,
                                 medium=(1.0, 59.0, 0.0), slab=0.05)
        rc = main(["psf", "--scene", str(scene_path),
                   "--out", str(tmp_path / "psf"),
                   "--profile", str(tmp_path / "profile.csv")])
        assert rc == 0
        rows = (tmp_path / "profile.csv").read_text().splitlines()
        assert rows[0] == "radius_px,empirical,analytic"
        r0 = rows[1].split(",")
        assert float(r0[1]) == pytest.approx(1.0)  # peak-normalized
        assert float(r0[2]) == pytest.approx(1.0)
        assert (tmp_path / "psf" / "refocused_psf.pfm").exists()

    def test_reconstruct_passive_saves_tmap_and_atmo(self, tmp_path, capsys):
        scene_path = write_scene(tmp_path, emitter_block(), n_photons=4000,
                                 medium=(1.0, 59.0, 0.0), slab=0.05)
        main(["simulate", "--scene", str(scene_path),
              "--out", str(tmp_path / "lf")])
        main(["kernel", "--mu-a", "50.0", "--mu-s", "100.0", "--g", "0.0",
              "--pixel-scale", "1e-3", "--eps", "2e-2",
              "--out", str(tmp_path / "k.pfm")])
        rc = main(["reconstruct", "--lf", str(tmp_path / "lf"),
                   "--kernel", str(tmp_path / "k.pfm"), "--zeta", "1e3",
                   "--mode", "passive", "--dcp-window", "5",
                   "--out", str(tmp_path / "recon.pfm"),
                   "--tmap", str(tmp_path / "t.pfm"),
                   "--atmo", str(tmp_path / "atmo.json")])
        assert rc == 0
        t = sfio.load_image(tmp_path / "t.pfm")
        assert np.all(t.samples >= 0.1 - 1e-6)
        atmo = json.loads((tmp_path / "atmo.json").read_text())
        assert 0.0 <= atmo["b_inf"][0] <= 1.0


class TestPipelineComposition:
    def test_file_composition_equals_in_process(self, tmp_path, capsys):
        # simulate | refocus | reconstruct | evaluate through PFM files must
        # reproduce the in-process pipeline bit for bit
        scene_path = write_scene(tmp_path, emitter_block(), n_photons=8000,
                                 seed=3, medium=(50.0, 100.0, 0.2), slab=0.05)
        lf_dir = tmp_path / "lf"
        assert main(["simulate", "--scene", str(scene_path),
                     "--out", str(lf_dir)]) == 0
        kpath = tmp_path / "k.pfm"
        assert main(["kernel", "--mu-a", "50.0", "--mu-s", "100.0", "--g", "0.2",
                     "--pixel-scale", "1e-3", "--eps", "2e-2",
                     "--out", str(kpath)]) == 0
        assert main(["reconstruct", "--lf", str(lf_dir),
                     "--kernel", str(kpath), "--zeta", "1e3",
                     "--mode", "self",
                     "--out", str(tmp_path / "recon.pfm")]) == 0
        via_files = sfio.load_image(tmp_path / "recon.pfm")

        # in-process, quantizing at every stage boundary like the CLI does
        scene, config = sfio.load_scene(scene_path)
        lf = simulate(scene, config).lightfield
        refocused = sfio.quantize_f32(
            refocus(lf, RefocusConfig(depth=scene.geometry.object_depth)))
        kernel = sfio.load_kernel(kpath)
        j_hat, _, _ = reconstruct_dlimj(
            refocused, kernel,
            wiener=WienerConfig(zeta=1e3, include_ballistic_impulse=True),
            mode="self_luminous")
        in_process = sfio.quantize_f32(j_hat)
        assert np.array_equal(via_files.samples, in_process.samples)

        # and the file-loaded light field matches the in-memory one exactly
        assert np.array_equal(sfio.load_lightfield(lf_dir).views, lf.views)
