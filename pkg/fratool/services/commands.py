from __future__ import annotations

import json
from functools import wraps
from pathlib import Path
from typing import Optional

import click
from flask import current_app

from .. import __version__
from ..errors import FratoolError
from ..fabricate import (
    assemble_rms_mesh,
    export_stl_binary,
    metallization_manifest,
    mpg_grid_mesh,
    mesh_volume,
    watertight_check,
)
from ..layout import generate_lattice, synthesis_report, synthesize
from ..pofield import analyze_frequency, band_sweep, export_pattern_csv
from ..runconfig import RunConfig, bundled_json, load_run_config
from ..unitcell import export_phase_table, ingest_phase_table
from ..utils.serialization import export_design, export_metrics, import_design, provenance
from .reporting import build_report


def _diagnostic(code: int, kind: str, message: str) -> None:
    click.echo(f'fratool-error code={code} kind={kind} message={json.dumps(message)}', err=True)
    click.echo(f'Error: {message}', err=True)


def handle_errors(command):
    """Turn toolkit errors into one parsable stderr line and an exit code."""
    @wraps(command)
    def wrapped(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except FratoolError as exc:
            current_app.logger.error('%s failed: %s', command.__name__, exc)
            _diagnostic(exc.exit_code, exc.kind, str(exc))
            raise SystemExit(exc.exit_code)
        except OSError as exc:
            current_app.logger.error('%s failed: %s', command.__name__, exc)
            _diagnostic(4, 'io', str(exc))
            raise SystemExit(4)

    return wrapped


def _output_dir(out: Optional[str], config: Optional[RunConfig] = None) -> Path:
    chosen = out or (config.output_dir if config is not None else None) or current_app.config['OUTPUT_DIR']
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _design_for(config: RunConfig, design_path: Optional[str]):
    if design_path:
        return import_design(design_path)
    layout = generate_lattice(config.folded_geometry())
    return synthesize(layout, config.source(), config.f0, config.min_cross_mag, config.phase_offset,
                      height_zones=config.height_zones)


def _freq_label(f: float) -> str:
    return f'{f:.3f}'.rstrip('0').rstrip('.').replace('.', 'p')


config_option = click.option('--config', 'config_path', type=click.Path(dir_okay=False),
                             help='Run configuration JSON (defaults to the bundled prototype).')
design_option = click.option('--design', 'design_path', type=click.Path(dir_okay=False),
                             help='Design JSON written by "synthesize".')
out_option = click.option('--out', type=click.Path(file_okay=False), help='Output directory.')
threads_option = click.option('--threads', type=int, default=None, help='Far-field worker threads.')


def register_cli(app) -> None:
    @app.cli.command('ingest')
    @click.argument('csv', type=click.Path(dir_okay=False))
    @out_option
    @handle_errors
    def ingest_command(csv, out):
        """Validate a unit-cell sweep CSV and report its phase coverage."""
        table = ingest_phase_table(csv)
        target = _output_dir(out)
        summary = {'entries': len(table), 'frequencies_ghz': list(table.frequencies), 'coverage_deg': {}}
        for f in table.frequencies:
            try:
                summary['coverage_deg'][f'{f}'] = table.coverage(f)
            except FratoolError as exc:
                current_app.logger.warning('No usable coverage at %s GHz: %s', f, exc)
                summary['coverage_deg'][f'{f}'] = None
        export_phase_table(table, target / 'phase_table.csv')
        export_metrics(summary, target / 'phase_table_summary.json', current_app.config['METRICS_DIGITS'], None)
        current_app.logger.info('Ingested %s entries from %s.', len(table), csv)
        click.echo(f'{len(table)} entries over {len(table.frequencies)} frequencies')

    @app.cli.command('synthesize')
    @config_option
    @out_option
    @handle_errors
    def synthesize_command(config_path, out):
        """Build the lattice and assign a cell to every element."""
        config = load_run_config(config_path)
        target = _output_dir(out, config)
        layout = generate_lattice(config.folded_geometry())
        source = config.source()
        design = synthesize(layout, source, config.f0, config.min_cross_mag, config.phase_offset,
                            height_zones=config.height_zones)
        report = synthesis_report(design, source.coverage(config.f0, config.min_cross_mag))
        export_design(design, target / 'design.json', config.config_hash)
        export_metrics({
            'site_count': len(design.elements),
            'active_count': report.active_count,
            'omitted_count': report.omitted_count,
            'coverage_deg': report.coverage_deg,
            'phase_offset_deg': report.phase_offset,
            'rms_phase_error_deg': report.rms_phase_error,
            'max_phase_error_deg': report.max_phase_error,
            'rxy_min': report.rxy_min,
            'rxy_mean': report.rxy_mean,
            'rxy_max': report.rxy_max,
            'distinct_geometries': report.distinct_geometries,
        }, target / 'synthesis.json', current_app.config['METRICS_DIGITS'], config.config_hash)
        current_app.logger.info('Design written to %s.', target / 'design.json')
        click.echo(f'{len(design.elements)} elements -> {target / "design.json"}')

    @app.cli.command('analyze')
    @config_option
    @design_option
    @click.option('--freq', type=float, default=None, help='Analysis frequency in GHz.')
    @out_option
    @threads_option
    @handle_errors
    def analyze_command(config_path, design_path, freq, out, threads):
        """Radiation metrics and pattern cuts at one frequency."""
        config = load_run_config(config_path)
        target = _output_dir(out, config)
        design = _design_for(config, design_path)
        f = freq if freq is not None else config.analysis_freq
        options = config.analysis_options(
            threads or current_app.config['DEFAULT_THREADS'],
            current_app.config['FAR_FIELD_CHUNK'],
            current_app.config['POWER_KERNEL_BLOCK'],
        )
        result, pattern = analyze_frequency(design, config.feed(), config.mpg(), f, config.source(),
                                            options, config.radiation_efficiency)
        label = _freq_label(result.freq)
        export_metrics(result.as_dict(), target / f'metrics_{label}GHz.json',
                       current_app.config['METRICS_DIGITS'], config.config_hash)
        header = ' '.join(f'{k}={v}' for k, v in provenance(config.config_hash).items())
        export_pattern_csv(pattern, target / f'pattern_{label}GHz.csv', header)
        click.echo(f'{result.freq} GHz: gain {result.realized_gain_dbi:.2f} dBi, '
                   f'directivity {result.directivity_dbi:.2f} dBi')

    @app.cli.command('sweep')
    @config_option
    @design_option
    @out_option
    @threads_option
    @handle_errors
    def sweep_command(config_path, design_path, out, threads):
        """Realized gain over the configured band and the 1 dB / 3 dB bandwidths."""
        config = load_run_config(config_path)
        target = _output_dir(out, config)
        design = _design_for(config, design_path)
        options = config.analysis_options(
            threads or current_app.config['DEFAULT_THREADS'],
            current_app.config['FAR_FIELD_CHUNK'],
            current_app.config['POWER_KERNEL_BLOCK'],
        )
        sweep = band_sweep(design, config.feed(), config.mpg(), config.f_list, config.source(),
                           options, config.radiation_efficiency)
        bandwidths = sweep.bandwidths
        export_metrics({
            'bw1_percent': bandwidths.bw1_percent,
            'bw3_percent': bandwidths.bw3_percent,
            'peak_freq_ghz': bandwidths.peak_freq,
            'peak_gain_dbi': bandwidths.peak_gain_dbi,
            'truncated': bandwidths.truncated,
            'frequencies': [r.as_dict() for r in sweep.results],
        }, target / 'sweep.json', current_app.config['METRICS_DIGITS'], config.config_hash)
        click.echo(f'3 dB bandwidth {bandwidths.bw3_percent:.2f} %, 1 dB bandwidth {bandwidths.bw1_percent:.2f} %'
                   + (' (truncated)' if bandwidths.truncated else ''))

    @app.cli.command('export-stl')
    @config_option
    @design_option
    @out_option
    @click.option('--force', is_flag=True, help='Export meshes that fail the watertight check.')
    @handle_errors
    def export_stl_command(config_path, design_path, out, force):
        """Binary STL of the RMS and MPG panels plus the metallization manifest."""
        config = load_run_config(config_path)
        target = _output_dir(out, config)
        design = _design_for(config, design_path)
        mpg = config.mpg()
        stamp = ' '.join(f'{k}={v}' for k, v in provenance(config.config_hash).items())
        header = f'fratool {__version__} {config.config_hash}'
        meshes = {
            'rms.stl': assemble_rms_mesh(design, config.substrate_h_s),
            'mpg.stl': mpg_grid_mesh(mpg, config.mpg_panel, config.substrate_h_s, config.strip_h),
        }
        for name, mesh in meshes.items():
            report = watertight_check(mesh)
            if not report.watertight:
                current_app.logger.warning('%s is not watertight (%s boundary edges).',
                                           name, len(report.boundary_edges))
            export_stl_binary(mesh, target / name, force=force, header=header)
            click.echo(f'{name}: {mesh.triangle_count} triangles, volume {mesh_volume(mesh):.3f} mm^3')
        manifest = metallization_manifest(design, mpg, config.substrate_h_s, config.strip_h, config.mpg_panel)
        (target / 'metallization.txt').write_text(
            '\n'.join([f'# {stamp}', *manifest]) + '\n', encoding='utf-8')

    @app.cli.command('report')
    @config_option
    @design_option
    @click.option('--freq', type=float, default=None, help='Analysis frequency in GHz.')
    @click.option('--no-analysis', is_flag=True, help='Skip the radiation analysis.')
    @out_option
    @threads_option
    @handle_errors
    def report_command(config_path, design_path, freq, no_analysis, out, threads):
        """Human-readable summary compared against the reported prototype."""
        config = load_run_config(config_path)
        target = _output_dir(out, config)
        design = _design_for(config, design_path)
        metrics = None
        if not no_analysis:
            options = config.analysis_options(
                threads or current_app.config['DEFAULT_THREADS'],
                current_app.config['FAR_FIELD_CHUNK'],
                current_app.config['POWER_KERNEL_BLOCK'],
            )
            f = freq if freq is not None else config.analysis_freq
            metrics, _ = analyze_frequency(design, config.feed(), config.mpg(), f, config.source(),
                                           options, config.radiation_efficiency)
        text = build_report(design, synthesis_report(design), bundled_json('reference_prototype.json'),
                            metrics, config.config_hash)
        (target / 'report.txt').write_text(text, encoding='utf-8')
        click.echo(text, nl=False)


def init_app(app) -> None:
    register_cli(app)
