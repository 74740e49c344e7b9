import math

import numpy as np
import pytest
from scipy.integrate import quad

from scatterfield.core import CameraArrayGeometry, Image, ObjectPlane
from scatterfield.diffusion import MediumParams
from scatterfield.errors import InvalidArgumentError
from scatterfield.mcscatter import (PhotonState, ScatterScene, SimConfig,
                                    TransportLedger, hg_phase, measure_ot,
                                    optical_thickness_from_power,
                                    project_emitter_to_sensor, psf_study,
                                    render_lightfield, sample_hg, simulate,
                                    trace_photon, visibility_from_ot,
                                    worker_count)
from scatterfield.mcscatter import _SceneConsts, _nee_all_cameras
F, Z, P = 0.005, 0.5, 1e-5
SCALE = Z * P / F  # one emitter pixel -> one sensor pixel


def make_scene(emitter, medium, grid=3, sensor=32, slab=Z, emission="lambertian"):
    return ScatterScene(
        emitter=Image(emitter), emitter_plane=ObjectPlane(pixel_scale=SCALE),
        slab_thickness=slab, medium=medium,
        geometry=CameraArrayGeometry(grid_u=grid, grid_v=grid,
                                     baseline=4 * Z * P / F, focal_length=F,
                                     pixel_pitch=P, object_depth=Z),
        sensor_width=sensor, sensor_height=sensor, emission=emission)


def block_emitter(size=32, lo=14, hi=19):
    em = np.zeros((size, size))
    em[lo:hi, lo:hi] = 1.0
    return em


class TestSampleHg:
    def test_isotropic_mean_within_3_sigma(self):
        rng = np.random.default_rng(0)
        n = 1_000_000
        c = sample_hg(0.0, rng, n)
        # var of uniform cos is 1/3
        assert abs(c.mean()) <= 3 * math.sqrt(1 / 3 / n)

    @pytest.mark.parametrize("g", [0.5, 0.9])
    def test_mean_equals_g(self, g):
        # analytic mean of the HG distribution is g
        rng = np.random.default_rng(1)
        n = 1_000_000
        c = sample_hg(g, rng, n)
        se = c.std() / math.sqrt(n)
        assert abs(c.mean() - g) <= 3 * se

    def test_strong_forward_limit(self):
        rng = np.random.default_rng(2)
        c = sample_hg(0.999, rng, 100_000)
        assert c.mean() > 0.99

    def test_distribution_matches_cdf(self):
        # HG CDF oracle via the closed form of the inverse transform
        g = 0.7
        rng = np.random.default_rng(3)
        c = np.sort(sample_hg(g, rng, 200_000))
        for x in (-0.5, 0.0, 0.5, 0.9):
            # P(cos <= x) by quadrature of the pdf
            pdf = lambda t: 0.5 * (1 - g * g) / (1 + g * g - 2 * g * t) ** 1.5
            expect = quad(pdf, -1, x)[0]
            got = np.searchsorted(c, x) / len(c)
            assert got == pytest.approx(expect, abs=0.005)

    def test_invalid_g(self):
        rng = np.random.default_rng(4)
        with pytest.raises(InvalidArgumentError):
            sample_hg(1.0, rng, 10)
        with pytest.raises(InvalidArgumentError):
            sample_hg(-0.1, rng, 10)


class TestHgPhase:
    @pytest.mark.parametrize("g", [0.0, 0.3, 0.8])
    def test_integrates_to_one_over_sphere(self, g):
        # brute-force sphere integration: 2*pi * int p(cos) dcos = 1
        val = quad(lambda c: hg_phase(g, c), -1, 1)[0] * 2 * math.pi
        assert val == pytest.approx(1.0, rel=1e-9)

    def test_isotropic_is_constant(self):
        assert np.allclose(hg_phase(0.0, np.linspace(-1, 1, 11)),
                           1 / (4 * math.pi))


class TestTracePhoton:
    def test_vacuum_travels_straight_no_splats(self):
        scene = make_scene(block_emitter(), MediumParams(0.0, 0.0, 0.0))
        rng = np.random.default_rng(5)
        state = PhotonState(position=(0.0, 0.0, 0.0),
                            direction=(0.0, 0.0, 1.0))
        splats, ledger = trace_photon(scene, state, rng)
        assert splats == []
        assert ledger.escaped == pytest.approx(1.0)
        assert ledger.n_exit_unscattered == 1
        assert ledger.balance() == pytest.approx(1.0, abs=1e-12)

    def test_scattering_produces_peel_offs(self):
        scene = make_scene(block_emitter(), MediumParams(0.0, 50.0, 0.0))
        rng = np.random.default_rng(6)
        state = PhotonState(position=(0.0, 0.0, 0.0),
                            direction=(0.0, 0.0, 1.0))
        splats, ledger = trace_photon(scene, state, rng)
        assert len(splats) > 0
        assert ledger.balance() == pytest.approx(1.0, abs=1e-9)

    def test_outside_slab_rejected(self):
        scene = make_scene(block_emitter(), MediumParams(0.0, 1.0, 0.0))
        rng = np.random.default_rng(7)
        with pytest.raises(InvalidArgumentError):
            trace_photon(scene, PhotonState(position=(0, 0, 2 * Z),
                                            direction=(0, 0, 1.0)), rng)

    def test_single_scatter_isotropic_peel_off(self):
        # with g = 0 the peel-off to each camera is w/(4 pi) times pure
        # geometry; verify against the formula evaluated by hand
        scene = make_scene(block_emitter(), MediumParams(0.0, 50.0, 0.0),
                           grid=3, sensor=64)
        consts = _SceneConsts(scene)
        accum = np.zeros((consts.n_cams, 64, 64))
        pos = np.array([[0.001, -0.002, 0.2]])
        w = np.array([0.5])
        total = _nee_all_cameras(consts, accum, pos, w,
                                 lambda d: hg_phase(0.0, d[:, 2] * 0.0), None)
        expect = 0.0
        for iu in range(3):
            for iv in range(3):
                cam = scene.geometry.camera_position(iu, iv)
                d = np.linalg.norm(cam - pos[0])
                seg = (Z - 0.2) / ((cam[2] - 0.2) / d)
                expect += 0.5 / (4 * math.pi) * math.exp(-50.0 * seg) / d ** 2
        assert total == pytest.approx(expect, rel=1e-12)
        assert accum.sum() == pytest.approx(expect, rel=1e-12)


class TestPhotonState:
    def test_unit_direction_enforced(self):
        with pytest.raises(InvalidArgumentError):
            PhotonState(position=(0, 0, 0), direction=(0, 0, 2.0))

    def test_weight_range(self):
        with pytest.raises(InvalidArgumentError):
            PhotonState(position=(0, 0, 0), direction=(0, 0, 1.0), weight=0.0)


class TestRenderLightfield:
    def test_vacuum_matches_pinhole_projection(self):
        em = np.zeros((32, 32))
        em[14:19, 13:18] = np.linspace(0.2, 1.0, 25).reshape(5, 5)
        scene = make_scene(em, MediumParams(0.0, 0.0, 0.0))
        n = 200_000
        lf = render_lightfield(scene, SimConfig(n_photons=n, seed=42))
        consts = _SceneConsts(scene)
        ex, ey = scene.emitter_pixel_positions()
        vals = em.ravel()
        p_pick = vals / vals.sum()
        for iu, iv in ((0, 0), (1, 1), (2, 2)):
            cam = scene.geometry.camera_position(iu, iv)
            pos = np.stack([ex, ey, np.zeros_like(ex)], axis=1)
            delta = cam[None, :] - pos
            dist = np.linalg.norm(delta, axis=1)
            contrib = vals * (delta[:, 2] / dist / math.pi) / dist ** 2
            col = np.rint((pos[:, 0] - cam[0]) / Z * consts.px_scale + 15.5).astype(int)
            row = np.rint((pos[:, 1] - cam[1]) / Z * consts.px_scale + 15.5).astype(int)
            expect = np.zeros((32, 32))
            ok = (row >= 0) & (row < 32) & (col >= 0) & (col < 32) & (contrib > 0)
            np.add.at(expect, (row[ok], col[ok]), contrib[ok])
            got = lf.views[iu, iv]
            nz = expect > 0
            # per-pixel binomial noise at 3 sigma plus in-pixel jitter wobble
            tol = 3 * np.sqrt((1 - p_pick[ok]) / (n * p_pick[ok])) + 0.01
            rel = np.abs(got[nz] - expect[nz]) / expect[nz]
            assert np.all(rel <= tol)
            assert got[~nz].sum() == 0.0

    def test_energy_conservation(self):
        scene = make_scene(block_emitter(), MediumParams(1.0, 12.0, 0.3))
        res = simulate(scene, SimConfig(n_photons=30_000, seed=3))
        assert res.ledger.balance() == pytest.approx(1.0, abs=1e-6)
        assert res.ledger.launched == 30_000
        assert res.ledger.absorbed > 0
        assert res.ledger.captured == 0.0

    def test_deterministic_for_seed(self):
        scene = make_scene(block_emitter(), MediumParams(0.1, 8.0, 0.2))
        cfg = SimConfig(n_photons=20_000, seed=11, batch_size=4096)
        a = render_lightfield(scene, cfg)
        b = render_lightfield(scene, cfg)
        assert np.array_equal(a.views, b.views)
        c = render_lightfield(scene, SimConfig(n_photons=20_000, seed=12,
                                               batch_size=4096))
        assert not np.array_equal(a.views, c.views)

    def test_thread_count_does_not_change_result(self, monkeypatch):
        scene = make_scene(block_emitter(), MediumParams(0.1, 8.0, 0.2))
        cfg = SimConfig(n_photons=16_384, seed=4, batch_size=2048)
        monkeypatch.setenv("SCATTERFIELD_THREADS", "1")
        a = render_lightfield(scene, cfg)
        monkeypatch.setenv("SCATTERFIELD_THREADS", "4")
        b = render_lightfield(scene, cfg)
        assert np.array_equal(a.views, b.views)

    def test_zero_emitter_rejected(self):
        scene = make_scene(np.zeros((8, 8)), MediumParams(0.0, 1.0, 0.0))
        with pytest.raises(InvalidArgumentError):
            render_lightfield(scene, SimConfig(n_photons=100, seed=0))

    def test_three_channel_emitter(self):
        em = np.zeros((16, 16, 3))
        em[6:10, 6:10, 0] = 1.0
        em[6:10, 6:10, 2] = 0.5
        scene = make_scene(em, MediumParams(0.0, 0.0, 0.0), sensor=16)
        lf = render_lightfield(scene, SimConfig(n_photons=20_000, seed=1))
        assert lf.channels == 3
        assert lf.views[1, 1, :, :, 0].sum() > 0
        assert lf.views[1, 1, :, :, 1].sum() == 0.0
        assert lf.views[1, 1, :, :, 2].sum() > 0

    def test_monte_carlo_error_scales_inverse_sqrt_n(self):
        em = block_emitter(16, 6, 10)
        scene = make_scene(em, MediumParams(0.05, 4.0, 0.0), grid=1, sensor=16)
        def stack(n):
            runs = [render_lightfield(scene,
                                      SimConfig(n_photons=n, seed=s)).views[0, 0]
                    for s in range(8)]
            return np.stack(runs)
        s1 = stack(5_000)
        s2 = stack(20_000)  # 4x photons -> expect half the standard error
        mask = s1.mean(axis=0) > np.percentile(s1.mean(axis=0), 75)
        ratio = (s1.std(axis=0, ddof=1)[mask].mean()
                 / s2.std(axis=0, ddof=1)[mask].mean())
        assert ratio == pytest.approx(2.0, rel=0.2)


class TestBallisticFraction:
    @pytest.mark.parametrize("tau", [1.0, 2.0, 4.0, 8.0])
    def test_unscattered_survivors_match_beer_lambert(self, tau):
        medium = MediumParams(0.0, tau, 0.0)
        n = 1_000_000
        m = measure_ot(medium, path_length=1.0, n_photons=n, seed=int(tau))
        p = math.exp(-tau)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(m.survivor_fraction - p) <= 3 * sigma


class TestMeasureOt:
    def test_tau_two_within_tolerance(self):
        m = measure_ot(MediumParams(0.0, 2.0, 0.0), path_length=1.0,
                       n_photons=1_000_000, seed=0)
        assert m.optical_thickness == pytest.approx(2.0, abs=0.02)

    def test_vacuum_is_zero(self):
        m = measure_ot(MediumParams(0.0, 0.0, 0.0), path_length=1.0,
                       n_photons=1000, seed=0)
        assert m.optical_thickness == 0.0
        assert m.survivor_fraction == 1.0

    def test_absorption_counts_toward_extinction(self):
        m = measure_ot(MediumParams(1.0, 1.0, 0.0), path_length=1.0,
                       n_photons=1_000_000, seed=1)
        assert m.optical_thickness == pytest.approx(2.0, abs=0.02)

    def test_no_survivors_warns_lower_bound(self):
        with pytest.warns(UserWarning):
            m = measure_ot(MediumParams(0.0, 100.0, 0.0), path_length=1.0,
                           n_photons=10_000, seed=2)
        assert m.lower_bound_only
        assert m.optical_thickness == pytest.approx(math.log(10_000))

    def test_power_meter_values(self):
        assert optical_thickness_from_power(0.339, 5.63e-4) == pytest.approx(
            6.4005, abs=1e-3)
        with pytest.raises(InvalidArgumentError):
            optical_thickness_from_power(0.1, 0.2)


class TestVisibility:
    def test_paper_value(self):
        assert visibility_from_ot(9.0) == pytest.approx(3.0043, abs=1e-3)

    def test_unit_point(self):
        assert visibility_from_ot(abs(math.log(0.05))) == pytest.approx(1.0)

    def test_linearity(self):
        assert visibility_from_ot(2 * abs(math.log(0.05))) == pytest.approx(2.0)

    def test_positive_required(self):
        with pytest.raises(InvalidArgumentError):
            visibility_from_ot(0.0)


class TestPsfStudy:
    def test_vacuum_point_stays_a_point(self):
        em = np.zeros((33, 33))
        em[16, 16] = 1.0
        scene = make_scene(em, MediumParams(0.0, 0.0, 0.0), sensor=33)
        study = psf_study(scene, SimConfig(n_photons=5_000, seed=0))
        assert study.profile[0] == pytest.approx(1.0)
        assert np.all(study.profile[3:] == 0.0)

    def test_requires_single_nonzero_pixel(self):
        scene = make_scene(block_emitter(), MediumParams(0.0, 1.0, 0.0))
        with pytest.raises(InvalidArgumentError):
            psf_study(scene, SimConfig(n_photons=100, seed=0))

    def test_scattered_only_profile_monotone(self):
        em = np.zeros((33, 33))
        em[16, 16] = 1.0
        scene = make_scene(em, MediumParams(2.0, 38.0, 0.0), sensor=33,
                           slab=0.05)
        study = psf_study(scene, SimConfig(n_photons=60_000, seed=1),
                          include_ballistic=False)
        prof = study.profile[:12]
        assert np.all(np.diff(prof) <= 0)


class TestProjectEmitter:
    def test_projection_is_centered_copy(self):
        em = block_emitter()
        scene = make_scene(em, MediumParams(0.0, 0.0, 0.0))
        truth = project_emitter_to_sensor(scene)
        assert np.array_equal(truth.samples, em)


class TestWorkerCount:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("SCATTERFIELD_THREADS", "3")
        assert worker_count(10) == 3
        assert worker_count(2) == 2

    def test_zero_is_auto(self, monkeypatch):
        monkeypatch.setenv("SCATTERFIELD_THREADS", "0")
        assert worker_count(100) >= 1

    def test_invalid_rejected(self, monkeypatch):
        monkeypatch.setenv("SCATTERFIELD_THREADS", "lots")
        with pytest.raises(InvalidArgumentError):
            worker_count(4)


class TestLedger:
    def test_merge_accumulates(self):
        a = TransportLedger(launched=2.0, escaped=1.0, absorbed=1.0)
        b = TransportLedger(launched=3.0, escaped=3.0)
        a.merge(b)
        assert a.launched == 5.0
        assert a.balance() == pytest.approx(1.0)
