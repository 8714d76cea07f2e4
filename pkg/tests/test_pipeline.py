import numpy as np
import pytest
from scipy import signal

from timelens import analysis
from timelens.config import preset
from timelens.pipeline import (
    PipelineError,
    RunSummary,
    compress_once,
    enhancement_at,
    run_amplitude_sweep,
    run_aperture_sweep,
    run_compression,
    waveform_table,
)

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def fig3a():
    return preset("fig3a")


@pytest.fixture(scope="module")
def ideal(fig3a):
    return fig3a.with_updates(rf={"chain": "ideal"})


@pytest.fixture(scope="module")
def fig3a_run(fig3a):
    return run_compression(fig3a)


def test_identity_preset_bitwise():
    res = run_compression(preset("identity"))
    np.testing.assert_array_equal(res.spectra.output.samples, res.spectra.input.samples)
    m, lossy = res.summary.results["metrics"], res.summary.results["metrics_lossy"]
    assert m["enhancement"] == 1.0
    assert lossy["enhancement"] == pytest.approx(res.transmission, rel=1e-12)


def test_wrapped_equals_unwrapped_ideal_chain(ideal):
    a = compress_once(ideal, 1.0).output.samples
    b = compress_once(ideal.with_updates(lens={"wrap_modulus": np.inf}), 1.0).output.samples
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_ideal_chain_best_scale(ideal):
    _, sweep = run_amplitude_sweep(ideal, [0.9, 0.95, 1.0, 1.05, 1.1])
    assert sweep.best_scale == 1.0
    _, coarse = run_amplitude_sweep(ideal, [0.5, 1.0, 1.5])
    assert coarse.values[1] > max(coarse.values[0], coarse.values[2])


def test_single_scale_sweep(fig3a):
    summary, sweep = run_amplitude_sweep(fig3a, [0.9])
    assert sweep.best_scale == 0.9
    assert len(summary.tables["amplitude_sweep"].rows) == 1


def test_default_chain_sweep_has_interior_optimum(fig3a):
    summary, sweep = run_amplitude_sweep(fig3a, [0.7, 0.85, 1.0, 1.15, 1.3])
    assert 0 < sweep.best_index < len(sweep.scales) - 1
    assert summary.results["best_scale"] == sweep.best_scale


def test_loss_linearity(fig3a_run):
    m = fig3a_run.summary.results["metrics"]
    lossy = fig3a_run.summary.results["metrics_lossy"]
    t = fig3a_run.transmission
    assert lossy["enhancement"] == pytest.approx(m["enhancement"] * t, rel=1e-12)
    for key in ("efficiency", "fwhm_out_hz", "compression_factor"):
        assert lossy[key] == pytest.approx(m[key], rel=1e-9)
    assert lossy["includes_loss"] and not m["includes_loss"]


def test_warnings_unique(fig3a_run):
    w = fig3a_run.summary.warnings
    assert len(w) == len(set(w))


def test_vanishing_aperture(fig3a):
    assert enhancement_at(fig3a, 1.0, f_cut=0.1e9) == pytest.approx(1.0, abs=0.05)


def test_aperture_sweep_plateau_matches_full_run(fig3a, fig3a_run):
    _, table = run_aperture_sweep(fig3a.with_updates(sweep={"dispersions": ()}), [20e9, 52e9])
    full = fig3a_run.summary.results["metrics"]["enhancement"]
    assert [r[1] for r in table.rows] == [20e9, 52e9]
    assert table.rows[-1][2] == pytest.approx(full, rel=1e-3)


def test_aperture_sweep_needs_two_cuts(fig3a):
    with pytest.raises(PipelineError):
        run_aperture_sweep(fig3a, [10e9])


def test_lens_without_dispersion_fails_with_stage():
    cfg = preset("identity").with_updates(lens={"enabled": True})
    with pytest.raises(PipelineError) as exc:
        run_compression(cfg)
    assert exc.value.stage == "lens"


def test_short_grid_fails_in_cfbg_stage(fig3a):
    cfg = fig3a.with_updates(grid={"span": 8e-9, "n_samples": 2**18})
    with pytest.raises(PipelineError) as exc:
        compress_once(cfg, 1.0)
    assert exc.value.stage == "cfbg"


def test_summary_round_trip(fig3a_run):
    s = fig3a_run.summary
    again = RunSummary.from_dict(s.to_dict())
    assert again.to_json() == s.to_json()


class TestWaveform:
    def test_columns(self, fig3a):
        t = waveform_table(fig3a)
        assert t.columns == ["time_s", "ideal_phase_rad", "precompensated_samples", "post_chain_samples"]

    def test_ideal_chain_post_equals_ideal(self, ideal):
        rows = np.array(waveform_table(ideal).rows)
        np.testing.assert_array_equal(rows[:, 3], rows[:, 1])

    def test_loaded_waveform_uses_dac_levels(self, fig3a):
        pre = np.array(waveform_table(fig3a).rows)[:, 2]
        assert 16 < np.unique(pre).size <= 2 ** round(fig3a.rf.enob)

    def test_post_chain_slope_bounded_by_lowpass(self, fig3a):
        # a signal limited to band B has max|x'| <= 2 pi B max|x|; the chain passes ~f_3dB
        rows = np.array(waveform_table(fig3a).rows)
        fs = 1 / (rows[1, 0] - rows[0, 0])

        def slope_ratio(samples):
            x = signal.resample(samples, samples.size * 32)
            f = np.fft.rfftfreq(x.size, 1 / (fs * 32))
            dx = np.fft.irfft(2j * np.pi * f * np.fft.rfft(x), n=x.size)
            return np.max(np.abs(dx)) / (2 * np.pi * fig3a.rf.f_3db * np.max(np.abs(x)))

        post = slope_ratio(rows[:, 3])
        assert post <= 1.25
        assert post < slope_ratio(rows[:, 1])

    def test_zero_duration_aperture(self, fig3a):
        with pytest.raises(PipelineError, match="empty waveform"):
            waveform_table(fig3a, f_cut=1.0)


def test_comb_counts(fig3a_run):
    out = fig3a_run.spectra.output
    fit = analysis.fit_gaussian_peak(out)
    comb = analysis.comb_sample(out, 20e6, offset=fit.center % 20e6)
    assert comb.modes_above(0.5) >= 5
