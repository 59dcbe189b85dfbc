import math

import numpy as np
import pytest

from gupsim import dispersion as disp
from gupsim.dispersion import DispersionModel
from gupsim.errors import DegenerateFit, DispersionSingularity, GridCoverage, TailLeak
from gupsim.packet import (
    GaussianPacketSpec,
    QuadraticPropagator,
    analytic_field,
    gup_width_exact,
)
from gupsim.spectral import (
    EvolutionSeries,
    FieldSnapshot,
    KGrid,
    auto_grid,
    compute_stats,
    evolve_series,
    fit_velocity,
    measure_broadening,
    measure_group_velocity,
    sample_spectrum,
    synthesize,
    validated_time_window,
    worker_count,
)


def k_space_moments(spec, model, t):
    """Centroid and RMS width from k-space alone.

    For a real spectrum the position operator evolves as x(t) = x(0) + omega'(k) t,
    so <x> = t <omega'> and Var x = alpha + t^2 Var(omega') under |g|^2.
    """
    k = spec.k0 + np.linspace(-12, 12, 200001) * spec.sigma_k
    wt = spec.amplitude(k) ** 2
    v = disp.group_velocity_exact(k, model)
    z = np.trapezoid(wt, k)
    mean = np.trapezoid(v * wt, k) / z
    var = np.trapezoid((v - mean) ** 2 * wt, k) / z
    return mean * t, math.sqrt(spec.alpha + var * t * t)


class TestKGrid:
    def test_midpoints(self):
        g = KGrid(0.0, 1.0, 4)
        assert np.allclose(g.samples, [0.125, 0.375, 0.625, 0.875])
        assert g.dx == pytest.approx(2 * math.pi / 1.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            KGrid(1.0, 1.0, 8)
        with pytest.raises(ValueError):
            KGrid(0.0, 1.0, 1)

    def test_fft_modes_match_numpy(self):
        g = KGrid.fft_modes(16, 10.0)
        assert np.allclose(np.sort(g.samples), np.sort(2 * np.pi * np.fft.fftfreq(16, 10.0 / 16)))
        assert g.dx == pytest.approx(10.0 / 16)

    def test_pole_guard(self):
        m = DispersionModel(-0.25)  # pole at k = 2
        KGrid(0.0, 1.5, 64).check_pole(m)
        with pytest.raises(DispersionSingularity):
            KGrid(1.0, 2.05, 64).check_pole(m)
        with pytest.raises(DispersionSingularity):
            KGrid(-2.05, -1.0, 64).check_pole(m)


class TestSampleSpectrum:
    def test_values(self):
        spec = GaussianPacketSpec(1.0, 0.0)
        g = sample_spectrum(spec, KGrid(-10.5, 10.5, 21))  # nodes at integers
        assert g[10] == 1.0
        assert g[11] == pytest.approx(math.exp(-1.0))

    def test_coverage(self):
        with pytest.raises(GridCoverage):
            sample_spectrum(GaussianPacketSpec(1.0, 0.0), KGrid(-1.0, 1.0, 64))

    def test_truncated_tail_mass(self):
        spec = GaussianPacketSpec(2.0, 1.0)
        half = 6 * spec.sigma_k
        grid = KGrid(spec.k0 - half, spec.k0 + half, 512)
        kept = np.sum(sample_spectrum(spec, grid)) * grid.dk
        total = math.sqrt(math.pi / spec.alpha)
        assert (total - kept) / total < math.exp(-6**2 / 2)
        # the Gaussian tail beyond 6 sigma: erfc(6 / sqrt 2)
        assert (total - kept) / total == pytest.approx(math.erfc(6 / math.sqrt(2)), rel=1e-2)


class TestSynthesize:
    def setup_method(self):
        self.spec = GaussianPacketSpec(1.0, 5.0)
        self.grid = KGrid(-5.0, 15.0, 4096)
        self.g = sample_spectrum(self.spec, self.grid)

    def test_t0_matches_closed_form(self):
        snap = synthesize(self.g, self.grid, DispersionModel(0.3), 0.0)
        prop = QuadraticPropagator(0.0, 0.0, 0.0)
        ref = analytic_field(snap.x, 0.0, self.spec, prop)
        assert np.max(np.abs(snap.values - ref)) < 1e-10

    def test_t0_independent_of_dispersion(self):
        a = synthesize(self.g, self.grid, DispersionModel(0.0), 0.0)
        b = synthesize(self.g, self.grid, DispersionModel(0.01), 0.0)
        assert np.array_equal(a.values, b.values)

    def test_rigid_translation(self):
        m = DispersionModel(0.0)
        dx = self.grid.dx
        shift = 37 * dx  # whole cells so shifted samples line up
        f0 = synthesize(self.g, self.grid, m, 0.0)
        ft = synthesize(self.g, self.grid, m, shift)
        assert np.max(np.abs(ft.values[37:] - f0.values[:-37])) < 1e-10

    def test_fft_matches_direct_sum(self):
        m = DispersionModel(0.002)
        spec = GaussianPacketSpec(4.0, 5.0)
        grid = KGrid(1.0, 9.0, 256)
        g = sample_spectrum(spec, grid)
        a = synthesize(g, grid, m, 3.0, x0=-100.0, method="fft")
        b = synthesize(g, grid, m, 3.0, x0=-100.0, method="direct")
        assert np.max(np.abs(a.values - b.values)) < 1e-11

    def test_direct_on_arbitrary_grid(self):
        m = DispersionModel(0.0)
        x = np.linspace(-3.0, 7.0, 101)
        snap = synthesize(self.g, self.grid, m, 2.0, x=x)
        ref = analytic_field(x, 2.0, self.spec, QuadraticPropagator.from_model(5.0, m))
        assert snap.x0 == -3.0
        assert np.max(np.abs(snap.values - ref)) < 1e-10

    def test_fft_requires_conjugate_grid(self):
        with pytest.raises(ValueError):
            synthesize(self.g, self.grid, DispersionModel(0.0), 0.0, x=np.arange(4.0), method="fft")

    def test_shape_mismatch(self):
        with pytest.raises(GridCoverage):
            synthesize(self.g[:-1], self.grid, DispersionModel(0.0), 0.0)

    def test_pole_on_grid(self):
        with pytest.raises(DispersionSingularity):
            synthesize(self.g, self.grid, DispersionModel(-1 / 36), 1.0)  # pole at k = 6

    def test_narrow_spectrum_matches_quadratic_propagator(self, narrow_spec):
        m = DispersionModel.from_epsilon(1e-3, narrow_spec.k0)
        t_max = validated_time_window(narrow_spec, m)
        grid, x0 = auto_grid(narrow_spec, m, [0.0, t_max])
        g = sample_spectrum(narrow_spec, grid)
        prop = QuadraticPropagator.from_model(narrow_spec.k0, m)
        for t in np.linspace(0, t_max, 4):
            snap = synthesize(g, grid, m, t, x0=x0)
            ref = analytic_field(snap.x, t, narrow_spec, prop)
            rel = np.linalg.norm(snap.values - ref) / np.linalg.norm(ref)
            assert rel < 1e-3

    def test_parseval(self):
        m = DispersionModel(0.004)
        norms = [compute_stats(synthesize(self.g, self.grid, m, t)).norm for t in [0, 3, 10, 30]]
        assert np.ptp(norms) / norms[0] < 1e-10

    def test_mirror_symmetry_under_time_reversal(self):
        # g real and even about k0 = 0 with odd omega: f(x, -t) = f(-x, t)
        spec = GaussianPacketSpec(1.0, 0.0)
        grid = KGrid(-10.0, 10.0, 1024)
        g = sample_spectrum(spec, grid)
        m = DispersionModel(0.003)
        x = np.linspace(-20, 20, 201)
        fwd = synthesize(g, grid, m, 7.0, x=x)
        back = synthesize(g, grid, m, -7.0, x=x)
        assert np.max(np.abs(np.abs(back.values) - np.abs(fwd.values[::-1]))) < 1e-12


class TestStats:
    def test_gaussian_moments(self):
        x = np.linspace(-20, 20, 4001)
        snap = FieldSnapshot(x0=-20.0, dx=0.01, values=np.exp(-x**2 / 4))  # |f|^2 variance 1
        st = compute_stats(snap)
        assert st.centroid == pytest.approx(0.0, abs=1e-12)
        assert st.rms_width == pytest.approx(1.0, abs=1e-6)
        assert st.norm == pytest.approx(math.sqrt(2 * math.pi), rel=1e-10)

    def test_symmetric_centroid(self):
        x = np.linspace(-10, 14, 2401)
        vals = np.exp(-(x - 2.0) ** 2) * (1 + 0.5 * np.cos(3 * (x - 2.0)))
        st = compute_stats(FieldSnapshot(-10.0, 0.01, vals))
        assert st.centroid == pytest.approx(2.0, abs=1e-12)

    def test_tail_leak(self):
        x = np.linspace(-5, 5, 101)
        with pytest.raises(TailLeak):
            compute_stats(FieldSnapshot(-5.0, 0.1, np.exp(-(x - 4.5) ** 2)))

    def test_snapshot_validation(self):
        with pytest.raises(ValueError):
            FieldSnapshot(0.0, 0.0, np.ones(4))
        with pytest.raises(ValueError):
            FieldSnapshot(0.0, 1.0, np.ones(1))


class TestSeries:
    def test_empty(self, free_model):
        s = evolve_series(GaussianPacketSpec(1.0, 1.0), free_model, [])
        assert len(s) == 0 and isinstance(s, EvolutionSeries)

    def test_rejects_unordered_times(self, free_model):
        with pytest.raises(ValueError):
            evolve_series(GaussianPacketSpec(1.0, 1.0), free_model, [0.0, 2.0, 1.0])

    def test_free_width_constant(self, free_model):
        s = evolve_series(GaussianPacketSpec(1.0, 3.0), free_model, [0, 2, 4, 8])
        assert np.ptp(s.widths) / s.widths[0] < 1e-8

    def test_dispersive_width_increases(self, narrow_spec):
        m = DispersionModel.from_epsilon(1e-3, narrow_spec.k0)
        times = np.linspace(0, validated_time_window(narrow_spec, m), 6)
        s = evolve_series(narrow_spec, m, times)
        assert np.all(np.diff(s.widths) > 0)

    def test_threaded_matches_serial(self, narrow_spec):
        m = DispersionModel(0.01)
        times = [0.0, 100.0, 200.0, 300.0]
        a = evolve_series(narrow_spec, m, times, workers=1)
        b = evolve_series(narrow_spec, m, times, workers=4)
        for sa, sb in zip(a.snapshots, b.snapshots):
            assert np.array_equal(sa.values, sb.values)

    def test_matches_k_space_moments(self):
        # wide spectrum, strong dispersion: an oracle that does not use the x-grid
        spec = GaussianPacketSpec(4.0, 2.0)
        m = DispersionModel(0.02)
        times = [0.0, 20.0, 60.0]
        s = evolve_series(spec, m, times)
        for t, st in zip(times, s.stats):
            c, w = k_space_moments(spec, m, t)
            assert st.centroid == pytest.approx(c, abs=1e-7 * max(1.0, abs(c)))
            assert st.rms_width == pytest.approx(w, rel=1e-8)

    def test_worker_cap(self, monkeypatch):
        monkeypatch.setenv("GUPSIM_THREADS", "2")
        assert worker_count(16) == 2
        monkeypatch.delenv("GUPSIM_THREADS")
        assert worker_count(3) == 3


class TestGroupVelocity:
    def test_free(self, free_model):
        s = evolve_series(GaussianPacketSpec(1.0, 5.0), free_model, [0, 1, 2, 5])
        fit = measure_group_velocity(s)
        assert fit.v_g == pytest.approx(1.0, abs=1e-6)
        assert fit.residual < 1e-8

    @pytest.mark.parametrize("eps,expected", [(0.01, 0.97049308891285168121),
                                              (-0.01, 1.0305070911131517192)])
    def test_gup(self, narrow_spec, eps, expected):
        m = DispersionModel.from_epsilon(eps, narrow_spec.k0)
        s = evolve_series(narrow_spec, m, [0, 100, 200, 300, 400])
        assert measure_group_velocity(s).v_g == pytest.approx(expected, rel=5e-3)

    def test_degenerate(self):
        with pytest.raises(DegenerateFit):
            fit_velocity([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])

    def test_needs_three(self, free_model):
        s = evolve_series(GaussianPacketSpec(1.0, 1.0), free_model, [0, 1])
        with pytest.raises(ValueError):
            measure_group_velocity(s)


class TestBroadening:
    def test_free(self, free_model):
        spec = GaussianPacketSpec(1.0, 2.0)
        s = evolve_series(spec, free_model, [0, 1, 3])
        rep = measure_broadening(s, lambda t: gup_width_exact(t, spec, free_model))
        assert rep.max_dev < 1e-6

    def test_length_mismatch(self, free_model):
        s = evolve_series(GaussianPacketSpec(1.0, 2.0), free_model, [0, 1, 3])
        with pytest.raises(ValueError):
            measure_broadening(s, [1.0, 1.0])

    def test_gup_within_one_percent(self, narrow_spec):
        m = DispersionModel.from_epsilon(1e-3, narrow_spec.k0)
        times = np.linspace(0, validated_time_window(narrow_spec, m), 5)
        s = evolve_series(narrow_spec, m, times)
        rep = measure_broadening(s, gup_width_exact(times, narrow_spec, m))
        assert rep.max_dev < 1e-2
        assert rep.mean_dev <= rep.max_dev


def test_validated_window_free_is_infinite(narrow_spec, free_model):
    assert validated_time_window(narrow_spec, free_model) == math.inf
