import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.distance import pdist

from fratool.emcore import phase_deg, phase_distance, polar
from fratool.errors import DomainError, LayoutError, SynthesisError
from fratool.layout import (
    FeedCutout,
    FoldedGeometry,
    Lattice,
    generate_lattice,
    height_zone_index,
    required_phase,
    synthesis_report,
    synthesize,
    virtual_focus,
)
from fratool.unitcell import CellGeometry, IdealSource, PhaseTable, PhaseTableEntry


def test_virtual_focus_and_ratios(default_geometry):
    assert virtual_focus(40.0) == 80.0
    assert default_geometry.f_over_d == pytest.approx(0.4167, abs=1e-4)
    assert default_geometry.f_over_d == pytest.approx(0.41, abs=0.02)
    assert default_geometry.h_over_d == pytest.approx(0.208, abs=0.001)
    with pytest.raises(DomainError):
        virtual_focus(0.0)


def test_default_lattice_has_1984_sites(default_layout):
    assert default_layout.site_count == 1984
    assert 0 < default_layout.omitted_count < 60
    positions = default_layout.positions()
    assert np.abs(positions).max() <= 96.0


def test_minimum_neighbor_distance(default_layout):
    assert pdist(default_layout.positions()).min() == pytest.approx(3.0, abs=1e-9)


def test_elements_are_row_major(default_layout):
    keys = [(s.y, s.x) for s in default_layout.elements]
    assert keys == sorted(keys)


def test_single_element_tiles_are_mirrored():
    geom = FoldedGeometry(feed_cutout=FeedCutout(1.0, 1.0), lattice=Lattice(6.0, 3.0, 1, 1),
                          cutout_clearance=0.0)
    layout = generate_lattice(geom)
    assert layout.site_count == 4
    assert sorted((s.x, s.y) for s in layout.elements) == [(-1.5, -1.5), (-1.5, 1.5), (1.5, -1.5), (1.5, 1.5)]
    assert {s.quadrant for s in layout.elements} == {1, 2, 3, 4}


def test_cutout_sites_are_omitted(default_layout, default_geometry):
    cutout = default_geometry.feed_cutout
    for site in default_layout.elements:
        near = float(cutout.distance(site.x, site.y)) < default_geometry.clearance
        assert site.omitted == near


def test_cutout_swallowing_a_tile_is_rejected():
    geom = FoldedGeometry(feed_cutout=FeedCutout(40.0, 40.0, 0.0), lattice=Lattice(6.0, 3.0, 2, 2))
    with pytest.raises(LayoutError):
        generate_lattice(geom)


def test_invalid_lattice_is_rejected():
    with pytest.raises(LayoutError):
        generate_lattice(FoldedGeometry(lattice=Lattice(6.0, 3.0, 0, 4)))
    with pytest.raises(LayoutError):
        generate_lattice(FoldedGeometry(lattice=Lattice(6.0, 3.0, 40, 31)))


def test_required_phase_values(default_geometry):
    assert required_phase(0.0, 0.0, 28.0, default_geometry) == 0.0
    assert required_phase(96.0, 96.0, 28.0, default_geometry) == pytest.approx(88.6, abs=0.1)
    rng = np.random.default_rng(11)
    x, y = rng.uniform(-96, 96, (2, 200))
    assert_allclose(required_phase(x, y, 28.0, default_geometry), required_phase(-x, -y, 28.0, default_geometry))
    assert_allclose(required_phase(x, y, 28.0, default_geometry), required_phase(-y, x, 28.0, default_geometry),
                    atol=1e-9)


def test_longer_focus_flattens_the_phase_profile():
    x = np.linspace(0.0, 20.0, 21)
    short = required_phase(x, 0.0 * x, 28.0, FoldedGeometry(fold_height_h=30.0))
    long = required_phase(x, 0.0 * x, 28.0, FoldedGeometry(fold_height_h=60.0))
    # below one turn on this span, so wrapping cannot hide the ordering
    assert short.max() < 360.0
    assert np.all(np.diff(short) > 0)
    assert np.all(long[1:] < short[1:])
    assert long[0] == short[0] == 0.0


def test_ideal_synthesis_has_no_phase_error(ideal_design):
    errors = ideal_design.phase_errors()
    assert len(ideal_design.elements) == 1984
    assert np.abs(errors).max() <= 1e-9
    achieved = phase_deg(ideal_design.cross_reflections())
    required = [e.required_phase for e in ideal_design.active]
    assert_allclose(phase_distance(achieved, required), 0.0, atol=1e-9)


def test_surrogate_synthesis(surrogate_design, surrogate):
    report = synthesis_report(surrogate_design)
    entries = surrogate.entries_at(28.0)
    heights = np.array([g.h_u for g in entries.geometries])
    step = 0.0
    for height in np.unique(heights):
        phases = phase_deg(entries.r_xy[heights == height])
        step = max(step, float(np.abs(phase_distance(phases[1:], phases[:-1])).max()))
    assert report.max_phase_error <= step / 2 + 1e-9
    assert report.rms_phase_error <= step / 2
    assert report.rxy_min >= 0.9
    assert sum(count for _, members in report.usage for _, count in members) == report.active_count
    assert {height for height, _ in report.usage} <= {0.2, 0.4}


def test_two_level_quantization(default_layout):
    table = PhaseTable([
        PhaseTableEntry(CellGeometry(1.0, 1.0), 28.0, complex(polar(1.0, 0.0)), 0j),
        PhaseTableEntry(CellGeometry(2.0, 1.0), 28.0, complex(polar(1.0, 180.0)), 0j),
    ])
    with pytest.raises(SynthesisError) as info:
        synthesize(default_layout, table, 28.0)
    assert info.value.achievable_span_deg == pytest.approx(180.0)
    design = synthesize(default_layout, table, 28.0, require_full_coverage=False)
    assert np.abs(design.phase_errors()).max() <= 90.0 + 1e-9


def test_omitted_elements_carry_no_geometry(surrogate_design):
    omitted = [e for e in surrogate_design.elements if e.omitted]
    assert omitted
    assert all(e.geometry is None for e in omitted)


def test_usage_histogram_counts_every_active_element(surrogate_design):
    report = synthesis_report(surrogate_design)
    heights = [height for height, _ in report.usage]
    assert heights == sorted(heights)
    assert set(heights) <= {0.2, 0.4}
    placed = sum(count for _, members in report.usage for _, count in members)
    assert placed == report.active_count
    assert 1 < report.distinct_geometries <= 206


def test_height_zones_split_on_path_excess(default_geometry):
    focal = default_geometry.virtual_focal_f
    edge = np.sqrt((focal + 20.0) ** 2 - focal ** 2)
    zones = height_zone_index([0.0, edge - 0.01, edge + 0.01, 96.0], [0.0] * 4, default_geometry, (20.0,))
    assert zones.tolist() == [0, 0, 1, 1]
    assert height_zone_index([96.0], [96.0], default_geometry, (20.0, 40.0, 60.0)).tolist() == [3]


def test_zoned_synthesis_puts_tall_cells_in_the_centre(surrogate_design, default_geometry):
    focal = default_geometry.virtual_focal_f
    for element in surrogate_design.active:
        excess = np.hypot(np.hypot(element.x, element.y), focal) - focal
        assert element.geometry.h_u == (0.4 if excess <= 20.0 else 0.2)


def test_unzoned_synthesis_draws_from_every_height(default_layout, surrogate):
    design = synthesize(default_layout, surrogate, 28.0)
    assert {e.geometry.h_u for e in design.active} <= {0.2, 0.4}
    assert np.abs(design.phase_errors()).max() <= 6.0


def test_single_height_source_ignores_zoning(default_layout, ideal_design):
    zoned = synthesize(default_layout, IdealSource(), 28.0, height_zones=(20.0,))
    assert [e.geometry for e in zoned.active] == [e.geometry for e in ideal_design.active]


def test_zone_without_coverage_is_rejected(default_layout):
    short = [
        PhaseTableEntry(CellGeometry(0.1 + 0.02 * k, 1.0, 0.2), 28.0, complex(polar(1.0, 2.0 * k)), 0j)
        for k in range(181)
    ]
    tall = [
        PhaseTableEntry(CellGeometry(1.0, 1.0, 0.4), 28.0, complex(polar(1.0, 0.0)), 0j),
        PhaseTableEntry(CellGeometry(2.0, 1.0, 0.4), 28.0, complex(polar(1.0, 180.0)), 0j),
    ]
    table = PhaseTable(short + tall)
    assert table.coverage(28.0) >= 360.0
    with pytest.raises(SynthesisError) as info:
        synthesize(default_layout, table, 28.0, height_zones=(20.0,))
    assert info.value.achievable_span_deg == pytest.approx(180.0)


def test_cell_overlap_ignores_touching_edges():
    g = CellGeometry(2.0, 2.0)
    cutout = FeedCutout(14.0, 4.0, 0.0)
    assert not cutout.overlaps_cell(g, (10.0, 0.0), rotation=0.0)
    assert cutout.overlaps_cell(g, (9.9, 0.0), rotation=0.0)
    assert not cutout.overlaps_cell(g, (0.0, 5.1), rotation=0.0)
    assert cutout.overlaps_cell(g, (0.0, 4.9), rotation=0.0)


def test_cells_reaching_into_the_cutout_are_omitted(ideal_design, default_layout):
    cutout = ideal_design.folded_geometry.feed_cutout
    assert not any(cutout.overlaps_cell(e.geometry, (e.x, e.y)) for e in ideal_design.active)
    assert len(ideal_design.active) <= len(default_layout.active)
    geom = FoldedGeometry(feed_cutout=FeedCutout(1.0, 1.0), lattice=Lattice(6.0, 3.0, 1, 1),
                          cutout_clearance=0.0)
    crowded = synthesize(generate_lattice(geom), IdealSource(), 28.0)
    assert len(crowded.elements) == 4
    assert crowded.active == ()
