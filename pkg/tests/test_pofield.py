import math

import numpy as np
import pytest

from fratool.emcore import phase_deg, phase_distance, polar, wavelength
from fratool.errors import DomainError, PatternError
from fratool.layout import synthesize
from fratool.pofield import (
    AnalysisOptions,
    ApertureField,
    FeedModel,
    analyze_frequency,
    aperture_efficiency,
    aperture_phase_spread,
    band_sweep,
    cone_spillover,
    cosq_directivity,
    cosq_directivity_numeric,
    far_field,
    fit_cosq,
    gain_bandwidths,
    illuminate,
    incident_field,
    metrics,
    pair_kernel,
    radiated_power,
    sphere_quadrature_power,
    spillover_efficiency,
)
from fratool.polarizer import MpgModel
from fratool.unitcell import CellGeometry, PhaseTable, PhaseTableEntry


def grid_aperture(count, spacing, f, amplitudes=None):
    offsets = (np.arange(count) - (count - 1) / 2) * spacing
    x, y = np.meshgrid(offsets, offsets)
    positions = np.column_stack([x.ravel(), y.ravel()])
    co = np.ones(len(positions), dtype=complex) if amplitudes is None else amplitudes
    return ApertureField(positions, co, np.zeros_like(co), co, np.ones_like(co), f)


@pytest.fixture(scope='module')
def uniform_metrics():
    ap = grid_aperture(64, 3.0, 29.0)
    theta = np.linspace(-15, 15, 601)
    pattern = far_field(ap, 29.0, theta, (0.0, 90.0), element_n=0)
    return metrics(pattern, ap, 192.0, element_n=0)


def test_cosq_fit_from_beamwidth():
    assert fit_cosq(40.0) == pytest.approx(5.57, abs=0.01)
    assert fit_cosq(60.0) == pytest.approx(2.41, abs=0.01)
    with pytest.raises(DomainError):
        fit_cosq(180.0)


def test_cosq_directivity():
    assert cosq_directivity(5.57) == pytest.approx(13.85, abs=0.01)
    assert cosq_directivity(0.5) == pytest.approx(6.02, abs=0.01)
    for q in (0.5, 2.0, 5.57, 12.0):
        assert cosq_directivity_numeric(q) == pytest.approx(cosq_directivity(q), abs=0.05)


def test_incident_field_at_aperture_edge(default_geometry):
    feed = FeedModel.from_hpbw(40.0)
    value = incident_field(np.array([[96.0, 0.0]]), feed, default_geometry, 28.0)[0]
    assert abs(value) == pytest.approx(0.0534, abs=5e-4)
    center = incident_field(np.array([[0.0, 0.0]]), feed, default_geometry, 28.0)[0]
    assert abs(center) == pytest.approx(1.0)


def test_spillover_bounded_by_inscribed_and_circumscribed_cones(default_geometry):
    feed = FeedModel.from_hpbw(40.0)
    eta = spillover_efficiency(feed, default_geometry)
    edge = math.degrees(math.atan2(96.0, 80.0))
    corner = math.degrees(math.atan2(96.0 * math.sqrt(2), 80.0))
    assert cone_spillover(feed, edge) < eta < cone_spillover(feed, corner)
    assert spillover_efficiency(FeedModel(200.0), default_geometry) == pytest.approx(1.0)
    assert cone_spillover(feed, 0.0) == 0.0
    assert cone_spillover(feed, 90.0) == pytest.approx(1.0)


def test_uniform_aperture_directivity(uniform_metrics):
    lam = wavelength(29.0)
    expected = 10 * math.log10(4 * math.pi * 192.0 ** 2 / lam ** 2)
    assert uniform_metrics.directivity_dbi == pytest.approx(expected, abs=0.05)
    assert uniform_metrics.illumination_efficiency == pytest.approx(1.0, abs=0.04)


def test_uniform_aperture_beamwidth_and_sidelobes(uniform_metrics):
    assert uniform_metrics.hpbw_xoz == pytest.approx(2.733, abs=0.03)
    assert uniform_metrics.hpbw_yoz == pytest.approx(uniform_metrics.hpbw_xoz)
    assert uniform_metrics.sll_db == pytest.approx(-13.26, abs=0.2)
    assert abs(uniform_metrics.peak_theta_deg) < 1e-9
    assert uniform_metrics.xpol_db == pytest.approx(-300.0)


def test_opposite_pair_has_broadside_null():
    lam = wavelength(28.0)
    positions = np.array([[-lam / 4, 0.0], [lam / 4, 0.0]])
    co = np.array([1.0, -1.0], dtype=complex)
    ap = ApertureField(positions, co, np.zeros(2, complex), co, co, 28.0)
    pattern = far_field(ap, 28.0, [0.0, 30.0, 90.0], (0.0,))
    assert abs(pattern.co[0, 0]) < 1e-12
    assert abs(pattern.co[0, 2]) < 1e-12


def test_scaling_leaves_normalized_quantities_unchanged():
    ap = grid_aperture(5, 6.0, 28.0, np.linspace(0.5, 1.5, 25).astype(complex))
    scaled = ap.scaled(3j)
    theta = [-10.0, 0.0, 10.0]
    base = far_field(ap, 28.0, theta, (0.0,))
    assert np.allclose(far_field(scaled, 28.0, theta, (0.0,)).co, 3j * base.co)
    assert radiated_power(scaled.positions, scaled.co, 28.0) == pytest.approx(
        9 * radiated_power(ap.positions, ap.co, 28.0))


def test_pair_kernel_limit():
    assert float(pair_kernel(0.0, 1.0)) == pytest.approx(2 * math.pi / 3)
    assert float(pair_kernel(1e-6, 1.0)) == pytest.approx(2 * math.pi / 3, rel=1e-9)
    assert float(pair_kernel(0.0, 0.0)) == pytest.approx(2 * math.pi)


def test_pair_power_matches_sphere_quadrature():
    rng = np.random.default_rng(3)
    amplitudes = rng.normal(size=25) + 1j * rng.normal(size=25)
    ap = grid_aperture(5, 6.0, 28.0, amplitudes)
    exact = radiated_power(ap.positions, ap.co, 28.0, element_n=1.0, block=7)
    assert sphere_quadrature_power(ap, 28.0, element_n=1.0) == pytest.approx(exact, rel=1e-4)


def test_coarse_grid_is_rejected():
    ap = grid_aperture(5, 6.0, 28.0)
    pattern = far_field(ap, 28.0, np.linspace(-15, 15, 31), (0.0,))
    with pytest.raises(PatternError):
        metrics(pattern, ap, 30.0)


def test_parabolic_gain_bandwidths():
    freqs = np.arange(25.0, 33.0)
    gains = 32.0 - 3.0 * ((freqs - 29.0) / 2.0) ** 2
    result = gain_bandwidths(freqs, gains)
    assert result.bw3_percent == pytest.approx(100 * 4 / 29, abs=1e-9)
    assert result.bw1_percent == pytest.approx(100 * (2 + 2 / 9) / 29, abs=1e-9)
    assert result.peak_freq == 29.0
    assert not result.truncated


def test_flat_gain_is_truncated():
    result = gain_bandwidths([25.0, 26.0, 27.0, 28.0], [30.0] * 4)
    assert result.truncated
    with pytest.raises(DomainError):
        gain_bandwidths([28.0, 29.0], [30.0, 30.0])


def test_ideal_design_is_phase_coherent(ideal_design, default_geometry):
    ap = illuminate(ideal_design, FeedModel.from_hpbw(40.0), default_geometry, MpgModel(), 28.0)
    assert ap.size == len(ideal_design.active)
    assert aperture_phase_spread(ap) < 1e-6


def test_default_design_at_synthesis_frequency(surrogate_design, surrogate):
    result, pattern = analyze_frequency(surrogate_design, FeedModel.from_hpbw(40.0), MpgModel(), 28.0,
                                        surrogate, AnalysisOptions(), radiation_efficiency=0.91)
    assert result.xpol_db < -100
    assert abs(result.peak_theta_deg) <= 0.1
    assert 28.0 < result.realized_gain_dbi < result.directivity_dbi
    assert 2.0 < result.hpbw_xoz < 5.0
    assert 2.0 < result.hpbw_yoz < 5.0
    assert result.sll_db < -10.0
    assert pattern.co.shape == (2, 601)


def test_reported_gain_closes_on_aperture_efficiency():
    assert aperture_efficiency(31.59, 29.0, 192.0) == pytest.approx(0.333, abs=0.005)


@pytest.fixture(scope='module')
def default_band(surrogate_design, surrogate):
    return band_sweep(surrogate_design, FeedModel.from_hpbw(40.0), MpgModel(), np.arange(25.0, 33.0),
                      surrogate, AnalysisOptions(), radiation_efficiency=0.91)


def test_default_design_gain_at_analysis_frequency(default_band):
    (result,) = [r for r in default_band.results if r.freq == 29.0]
    assert result.realized_gain_dbi == pytest.approx(31.59, abs=1.5)


def test_default_design_holds_its_beam_across_the_band(default_band):
    for result in default_band.results:
        if result.freq < 27.0:
            continue
        assert 2.5 <= result.hpbw_xoz <= 4.6, result.freq
        assert 2.5 <= result.hpbw_yoz <= 4.6, result.freq
        assert result.sll_db <= -18.0, result.freq
        assert result.xpol_db <= -30.0, result.freq


def test_default_design_beam_stays_at_broadside(default_band):
    for result in default_band.results:
        if result.freq >= 26.0:
            assert abs(result.peak_theta_deg) <= 0.05, result.freq


def test_default_design_gain_bandwidth(default_band):
    assert not default_band.bandwidths.truncated
    assert default_band.bandwidths.bw3_percent == pytest.approx(14.38, abs=5.0)
    assert default_band.bandwidths.bw1_percent < default_band.bandwidths.bw3_percent


def test_table_source_is_reused_off_the_synthesis_frequency(default_layout, default_geometry):
    shift = {27.0: -10.0, 28.0: 0.0, 29.0: 10.0}
    entries = [
        PhaseTableEntry(CellGeometry(0.1 + 0.05 * k, 1.0), f, complex(polar(0.8, 5.0 * k + d)), 0.55 + 0j)
        for f, d in shift.items()
        for k in range(73)
    ]
    table = PhaseTable(entries)
    design = synthesize(default_layout, table, 28.0, min_cross_mag=0.75)
    feed = FeedModel.from_hpbw(40.0)
    # |r_yy + r_xy| reaches 1.35 here, which no eigen reflection can represent
    ap = illuminate(design, feed, default_geometry, MpgModel(), 29.0, table)
    assert np.allclose(np.abs(ap.r_xy), 0.8)
    expected = phase_deg(design.cross_reflections()) + 10.0
    assert np.allclose(phase_distance(phase_deg(ap.r_xy), expected), 0.0, atol=1e-9)
    between = illuminate(design, feed, default_geometry, MpgModel(), 28.5, table)
    assert np.allclose(np.abs(between.r_xy), 0.8)
