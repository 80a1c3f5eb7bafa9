from __future__ import annotations

from typing import Any, List, Mapping, Optional

from .. import __version__
from ..emcore import db
from ..layout import DesignedAperture, SynthesisReport
from ..pofield import PatternMetrics


def _db_or_dash(value: Optional[float]) -> str:
    if value is None or value <= 0:
        return '-'
    return f'{db(value):+.2f} dB'


def _versus(label: str, computed: str, reported: Any) -> str:
    return f'  {label:<28} computed {computed:>12}   reported {reported}'


def build_report(design: DesignedAperture, synthesis: SynthesisReport,
                 reference: Mapping[str, Any], metrics: Optional[PatternMetrics] = None,
                 config_hash: Optional[str] = None) -> str:
    geom = design.folded_geometry
    simulated = reference.get('simulated', {})
    lines: List[str] = [
        f'fratool {__version__} design report',
        f'config hash: {config_hash or "-"}',
        '',
        'Folded geometry',
        f'  fold height H = {geom.fold_height_h:.3f} mm, aperture D = {geom.aperture_d:.3f} mm',
        f'  virtual focus F = {geom.virtual_focal_f:.3f} mm',
        f'  F/D = {geom.f_over_d:.4f} (reported {reference["geometry"]["f_over_d"]})',
        f'  H/D = {geom.h_over_d:.3f} (reported {reference["geometry"]["h_over_d"]})',
        '',
        'Lattice and synthesis',
        f'  sites {len(design.elements)} (reported {reference["lattice"]["element_count"]}), '
        f'active {synthesis.active_count}, omitted by feed cutout {synthesis.omitted_count}',
        f'  synthesis frequency {design.frequency_ghz:.3f} GHz, phase offset {design.phase_offset:.3f} deg',
        f'  phase error rms {synthesis.rms_phase_error:.4f} deg, max {synthesis.max_phase_error:.4f} deg',
        f'  |r_xy| min {synthesis.rxy_min:.4f}, mean {synthesis.rxy_mean:.4f}, max {synthesis.rxy_max:.4f}',
        f'  distinct geometries {synthesis.distinct_geometries}',
    ]
    for height, members in synthesis.usage:
        placed = sum(count for _, count in members)
        lines.append(f'    h_u = {height:.2f} mm: {len(members)} geometries, {placed} elements')

    if metrics is not None:
        budget = metrics.budget
        lines += [
            '',
            f'Radiation at {metrics.freq:.3f} GHz (computed vs reported)',
            _versus('realized gain', f'{metrics.realized_gain_dbi:.2f} dBi',
                    f'{simulated.get("peak_gain_dbi")} dBi at {simulated.get("peak_gain_freq_ghz")} GHz'),
            _versus('aperture efficiency', f'{100 * metrics.aperture_efficiency:.1f} %',
                    f'{100 * simulated.get("aperture_efficiency", 0):.1f} %'),
            _versus('HPBW xoz / yoz', f'{metrics.hpbw_xoz:.2f}/{metrics.hpbw_yoz:.2f} deg',
                    f'{simulated.get("hpbw_deg_min")}-{simulated.get("hpbw_deg_max")} deg'),
            _versus('SLL', f'{metrics.sll_db:.2f} dB', f'below {simulated.get("sll_db_max")} dB'),
            _versus('X-pol', f'{metrics.xpol_db:.2f} dB', f'below {simulated.get("xpol_db_max")} dB'),
            '',
            'Efficiency decomposition',
            f'  directivity          {metrics.directivity_dbi:.2f} dBi',
            f'  illumination         {_db_or_dash(metrics.illumination_efficiency)}',
            f'    taper              {_db_or_dash(budget.taper)}',
            f'    phase coherence    {_db_or_dash(budget.phase_coherence)}',
            f'  spillover            {_db_or_dash(budget.spillover)}',
            f'  polarizer chain      {_db_or_dash(budget.chain)}',
            f'  conversion           {_db_or_dash(budget.conversion)}',
            f'  radiation            {_db_or_dash(budget.radiation)}',
            f'  peak direction       theta = {metrics.peak_theta_deg:.2f} deg',
        ]
    return '\n'.join(lines) + '\n'
