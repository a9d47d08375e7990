import numpy as np
import pytest

from satl import (
    FrequencyGrid,
    RateParams,
    SpectrumResult,
    annihilation,
    build_generator,
    classify_peaks,
    estimate_fwhm,
    fit_lorentzian,
    four_level_coherent,
    four_level_incoherent,
    output_spectrum,
    photon_stats,
    reduced_spectrum,
    regression_spectrum,
    schawlow_townes,
    sector_reduced_generator,
    solve_with_adaptive_truncation,
    steady_state,
    three_level_incoherent,
)
from satl.errors import (
    ConfigurationError,
    DoubletDetectedError,
    FitError,
    UnsupportedSchemeError,
    ZeroSignalError,
)
from satl.spectrum import _lorentzian, _ResolventSolver

from oracles import normalized, time_domain_spectrum


def _doublet_point():
    p = RateParams(g=1.414, kappa=0.1, gamma=1.0, Gamma=0.05)
    ss, gen = solve_with_adaptive_truncation(lambda n: three_level_incoherent(p, n), 3)
    return p, ss, gen


def _synthetic(omega, s):
    s = np.asarray(s, dtype=float)
    return SpectrumResult(grid=FrequencyGrid(omega), s_values=s / np.trapezoid(s, omega),
                          normalized=True, raw_integral=1.0, imag_ratio=0.0)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        FrequencyGrid(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(ConfigurationError):
        FrequencyGrid(np.array([0.0, 1.0, 3.0]))
    g = FrequencyGrid.symmetric(2.0, 11)
    assert g.count == 11
    assert g.spacing == pytest.approx(0.4)


def test_zero_signal_raises():
    p = RateParams(g=0.0, kappa=0.5, gamma=1.0, Gamma=0.0)
    model = three_level_incoherent(p, 2)
    gen = build_generator(model)
    ss = steady_state(gen)
    with pytest.raises(ZeroSignalError):
        regression_spectrum(ss, gen, FrequencyGrid.symmetric(3.0, 101))


def test_spectrum_normalized_and_nonnegative():
    _, ss, gen = _doublet_point()
    spec = regression_spectrum(ss, gen, FrequencyGrid.symmetric(7.0, 801))
    assert spec.integral() == pytest.approx(1.0, abs=1e-6)
    assert np.min(spec.s_values) >= 0.0
    assert spec.imag_ratio < 1e-8


def test_spectrum_symmetric_at_resonance():
    _, ss, gen = _doublet_point()
    spec = regression_spectrum(ss, gen, FrequencyGrid.symmetric(7.0, 801))
    assert np.max(np.abs(spec.s_values - spec.s_values[::-1])) < 1e-6


def test_grid_refinement_convergence():
    _, ss, gen = _doublet_point()
    coarse = regression_spectrum(ss, gen, FrequencyGrid.symmetric(7.0, 601))
    fine = regression_spectrum(ss, gen, FrequencyGrid.symmetric(7.0, 1201))
    assert np.max(np.abs(fine.s_values[::2] - coarse.s_values)) < 1e-4


def test_resolvent_linearity():
    _, ss, gen = _doublet_point()
    m = gen.dense()
    solver = _ResolventSolver(m, method="direct")
    rng = np.random.default_rng(4)
    b = rng.normal(size=m.shape[0]) + 1j * rng.normal(size=m.shape[0])
    x1 = solver.solve(0.37, b, 0.01)
    x3 = solver.solve(0.37, 3.0 * b, 0.01)
    np.testing.assert_allclose(x3, 3.0 * x1, rtol=1e-12)


def test_regression_matches_time_domain_quadrature():
    _, ss, gen = _doublet_point()
    om = np.linspace(-4.0, 4.0, 161)
    s_td, tail = time_domain_spectrum(
        gen.dense(), ss.rho, annihilation(ss.model.space).data, om,
        t_max=120.0, dt=0.01)
    assert tail < 1e-8
    spec = regression_spectrum(ss, gen, FrequencyGrid(om))
    rel_l2 = np.linalg.norm(spec.s_values - normalized(om, s_td)) / np.linalg.norm(
        normalized(om, s_td))
    assert rel_l2 < 1e-3


def test_eig_and_direct_methods_agree():
    _, ss, gen = _doublet_point()
    grid = FrequencyGrid.symmetric(7.0, 301)
    direct = regression_spectrum(ss, gen, grid, method="direct")
    eig = regression_spectrum(ss, gen, grid, method="eig")
    assert np.max(np.abs(direct.s_values - eig.s_values)) < 1e-10


# ---------------------------------------------------------------------------
# sector reduction

def test_reduced_sector_size_three_level():
    p = RateParams(g=0.3, kappa=0.1, gamma=1.0, Gamma=0.4)
    for n_max in (2, 3, 5, 8):
        model = three_level_incoherent(p, n_max)
        red = sector_reduced_generator(model)
        assert red.size == 4 * n_max
        assert red.size < (2 * (n_max + 1)) ** 2


def test_reduced_sector_size_four_level():
    # full +1-grading sector: 9 index families, linear in n_max
    p = RateParams(g=0.3, kappa=0.1, gamma=1.0, Gamma=0.4, gamma_f=2.0)
    for n_max in (2, 4, 6):
        model = four_level_incoherent(p, n_max)
        red = sector_reduced_generator(model)
        assert red.size == 9 * n_max
        assert red.size < (3 * (n_max + 1)) ** 2


def test_reduced_equals_full_three_level():
    p = RateParams(g=0.1, kappa=0.1, gamma=1.0, Gamma=1.0)
    model = three_level_incoherent(p, 3)
    gen = build_generator(model)
    ss = steady_state(gen)
    grid = FrequencyGrid.symmetric(3.0, 501)
    full = regression_spectrum(ss, gen, grid, method="direct")
    red = reduced_spectrum(ss, sector_reduced_generator(model, gen), grid, method="direct")
    assert np.max(np.abs(full.s_values - red.s_values)) < 1e-10


def test_reduced_equals_full_four_level():
    p = RateParams(g=0.8, kappa=0.15, gamma=1.0, Gamma=0.9, gamma_f=2.0)
    model = four_level_incoherent(p, 3)
    gen = build_generator(model)
    ss = steady_state(gen)
    grid = FrequencyGrid.symmetric(4.0, 401)
    full = regression_spectrum(ss, gen, grid, method="direct")
    red = reduced_spectrum(ss, sector_reduced_generator(model, gen), grid, method="direct")
    assert np.max(np.abs(full.s_values - red.s_values)) < 1e-10


def test_reduced_family_damping_coefficient():
    """The (n+1,1;n,1) family damps at kappa(2n+1) + Gamma."""
    p = RateParams(g=0.3, kappa=0.12, gamma=1.0, Gamma=0.8)
    model = three_level_incoherent(p, 4)
    red = sector_reduced_generator(model)
    space = model.space
    dim = space.dim
    for n in range(space.n_max):
        pos = space.flat_index(1, n + 1) + space.flat_index(1, n) * dim
        k = int(np.nonzero(red.positions == pos)[0][0])
        assert red.matrix[k, k].real == pytest.approx(-(p.kappa * (2 * n + 1) + p.Gamma))
        assert red.matrix[k, k].imag == 0.0


def test_reduction_rejects_coherent_scheme():
    p = RateParams(g=0.5, kappa=0.1, gamma=1.0, gamma_f=2.0, gamma_4=1.0, E_pump=0.4)
    model = four_level_coherent(p, 2)
    with pytest.raises(UnsupportedSchemeError):
        sector_reduced_generator(model)


def test_output_spectrum_widens_undersized_grid():
    _, ss, gen = _doublet_point()
    spec = output_spectrum(ss, gen, half_span=0.5, points=801)
    assert spec.grid.values[-1] > 0.5
    assert spec.tail_weight() <= 0.005
    assert len(classify_peaks(spec)) == 2


# ---------------------------------------------------------------------------
# peaks and fits

def test_classify_single_lorentzian():
    w = np.linspace(-3, 3, 1201)
    spec = _synthetic(w, _lorentzian(w, 1.0, 0.0, 0.3))
    peaks = classify_peaks(spec)
    assert len(peaks) == 1
    assert peaks[0].omega == pytest.approx(0.0, abs=w[1] - w[0])


def test_classify_doublet():
    _, ss, gen = _doublet_point()
    spec = regression_spectrum(ss, gen, FrequencyGrid.symmetric(7.0, 1601))
    peaks = classify_peaks(spec)
    assert len(peaks) == 2
    separation = peaks[1].omega - peaks[0].omega
    assert abs(separation - 2 * 1.414) / (2 * 1.414) < 0.3


def test_fit_recovers_synthetic_linewidth():
    w = np.linspace(-3, 3, 1501)
    spec = _synthetic(w, _lorentzian(w, 0.8, 0.0, 0.2))
    fit = fit_lorentzian(spec)
    assert abs(fit.fwhm - 0.2) < 1e-6
    assert fit.center == pytest.approx(0.0, abs=1e-9)
    assert fit.residual < 1e-10


def test_fit_rejects_doublet():
    w = np.linspace(-3, 3, 1501)
    s = _lorentzian(w, 1.0, -0.3, 0.2) + _lorentzian(w, 1.0, 0.3, 0.2)
    with pytest.raises(DoubletDetectedError):
        fit_lorentzian(_synthetic(w, s))


def test_fit_rejects_undersized_span():
    w = np.linspace(-0.5, 0.5, 801)
    spec = _synthetic(w, _lorentzian(w, 1.0, 0.0, 0.2))
    with pytest.raises(FitError):
        fit_lorentzian(spec)


def test_estimate_fwhm():
    w = np.linspace(-3, 3, 2001)
    spec = _synthetic(w, _lorentzian(w, 1.0, 0.0, 0.37))
    assert estimate_fwhm(spec) == pytest.approx(0.37, rel=1e-3)


def test_schawlow_townes():
    assert schawlow_townes(0.1, 1.0) == pytest.approx(0.05)
    assert schawlow_townes(0.1, 2.6) == pytest.approx(0.1 / 5.2)
    with pytest.raises(ConfigurationError):
        schawlow_townes(0.1, 0.0)


def test_raw_integral_tracks_mean_photon_number():
    """integral S_raw d(omega) = 2 pi <n> up to truncation of the grid."""
    _, ss, gen = _doublet_point()
    spec = regression_spectrum(ss, gen, FrequencyGrid.symmetric(12.0, 1601))
    mean_n = photon_stats(ss).mean_n
    assert spec.raw_integral == pytest.approx(2 * np.pi * mean_n, rel=2e-3)


def test_fitted_linewidth_exceeds_reference_width_at_small_pump():
    p = RateParams(g=0.6, kappa=0.1, gamma=1.0, Gamma=0.2)
    ss, gen = solve_with_adaptive_truncation(lambda n: three_level_incoherent(p, n), 3)
    spec = output_spectrum(ss, gen, points=1601)
    fwhm_est = estimate_fwhm(spec)
    spec = output_spectrum(ss, gen, half_span=max(25 * fwhm_est, 10 * spec.grid.spacing),
                           points=1601)
    fit = fit_lorentzian(spec)
    st = schawlow_townes(p.kappa, photon_stats(ss).mean_n)
    assert fit.fwhm > st
