import json
import math
from pathlib import Path

import pytest

from fratool.emcore import wavelength
from fratool.errors import DesignFormatError
from fratool.utils.serialization import export_design, import_design

SWEEP_ROWS = [
    'freq_ghz,lx_mm,ly_mm,hu_mm,w1_mm,w2_mm,re_rxy,im_rxy,re_ryy,im_ryy',
    '28,1.0,3.0,0.2,6,6,0.95,0.0,0.0,0.0',
    '28,2.0,4.0,0.2,6,6,0.0,0.95,0.0,0.0',
    '28,3.0,5.0,0.2,6,6,-0.95,0.0,0.0,0.0',
]


def write_json(path, document):
    path.write_text(json.dumps(document), encoding='utf-8')
    return str(path)


def read_json(path):
    return json.loads(path.read_text(encoding='utf-8'))


@pytest.fixture()
def ideal_config(tmp_path):
    return write_json(tmp_path / 'ideal.json', {'source': {'kind': 'ideal'}})


def test_synthesize_writes_design(runner, tmp_path):
    result = runner.invoke(args=['synthesize', '--out', str(tmp_path)])
    assert result.exit_code == 0, result.output
    design = read_json(tmp_path / 'design.json')
    assert design['schema_version'] == 1
    assert len(design['elements']) == 1984
    assert design['provenance']['config_hash']
    summary = read_json(tmp_path / 'synthesis.json')
    assert summary['site_count'] == 1984
    assert summary['active_count'] + summary['omitted_count'] == 1984
    assert summary['coverage_deg'] > 400


def test_output_directory_defaults_to_app_config(runner, app):
    result = runner.invoke(args=['synthesize'])
    assert result.exit_code == 0, result.output
    design = read_json(Path(app.config['OUTPUT_DIR']) / 'design.json')
    assert design['frequency_ghz'] == 28.0


def test_design_round_trip(surrogate_design, tmp_path):
    path = tmp_path / 'design.json'
    export_design(surrogate_design, path, 'abc')
    loaded = import_design(path)
    assert loaded == surrogate_design
    assert loaded.provenance['config_hash'] == 'abc'


def test_unknown_schema_version(runner, tmp_path):
    path = write_json(tmp_path / 'design.json', {'schema_version': 99})
    with pytest.raises(DesignFormatError):
        import_design(path)
    result = runner.invoke(args=['analyze', '--design', path, '--out', str(tmp_path)])
    assert result.exit_code == 2
    assert 'fratool-error code=2 kind=design-format' in result.output


def test_invalid_band_exits_with_config_error(runner, tmp_path):
    config = write_json(tmp_path / 'bad.json', {'band': {'f_list': [28.0, 29.0]}})
    result = runner.invoke(args=['synthesize', '--config', config, '--out', str(tmp_path)])
    assert result.exit_code == 2
    assert 'fratool-error code=2 kind=config' in result.output
    assert not (tmp_path / 'design.json').exists()


def test_height_zones_must_increase(runner, tmp_path):
    config = write_json(tmp_path / 'zones.json', {'cell': {'height_zones_mm': [30.0, 20.0]}})
    result = runner.invoke(args=['synthesize', '--config', config, '--out', str(tmp_path)])
    assert result.exit_code == 2
    assert 'height_zones_mm' in result.output


def test_unknown_config_key(runner, tmp_path):
    config = write_json(tmp_path / 'typo.json', {'feed': {'hpbw': 40}})
    result = runner.invoke(args=['synthesize', '--config', config, '--out', str(tmp_path)])
    assert result.exit_code == 2
    assert "unknown configuration key 'feed.hpbw'" in result.output


def test_missing_config_file(runner, tmp_path):
    result = runner.invoke(args=['synthesize', '--config', str(tmp_path / 'nope.json')])
    assert result.exit_code == 2
    assert 'kind=config' in result.output


def test_report_without_analysis(runner, tmp_path):
    result = runner.invoke(args=['report', '--no-analysis', '--out', str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert 'H/D = 0.208 (reported 0.208)' in result.output
    assert 'F/D = 0.4167' in result.output
    assert 'sites 1984' in result.output
    assert (tmp_path / 'report.txt').read_text(encoding='utf-8') in result.output


def test_analyze_ideal_source(runner, tmp_path, ideal_config, default_layout):
    result = runner.invoke(args=['analyze', '--config', ideal_config, '--freq', '29', '--out', str(tmp_path)])
    assert result.exit_code == 0, result.output
    metrics = read_json(tmp_path / 'metrics_29GHz.json')
    assert metrics['freq_ghz'] == 29.0
    # 18 mm^2 of aperture per lattice site
    uniform = 10 * math.log10(4 * math.pi * 18.0 * len(default_layout.active) / wavelength(29.0) ** 2)
    shaped = uniform + 10 * math.log10(metrics['eff_taper'] * metrics['eff_phase_coherence'])
    assert metrics['directivity_dbi'] == pytest.approx(shaped, abs=0.3)
    assert metrics['realized_gain_dbi'] < metrics['directivity_dbi']
    lines = (tmp_path / 'pattern_29GHz.csv').read_text(encoding='utf-8').splitlines()
    assert lines[0].startswith('# toolkit=fratool')
    assert lines[1] == 'freq_ghz,phi_deg,theta_deg,co_db,cx_db'
    assert len(lines) == 2 + 2 * 601


def test_analysis_is_thread_independent(runner, tmp_path, ideal_config):
    outputs = []
    for threads in ('1', '3'):
        target = tmp_path / f'threads{threads}'
        result = runner.invoke(args=['analyze', '--config', ideal_config, '--threads', threads,
                                     '--out', str(target)])
        assert result.exit_code == 0, result.output
        outputs.append(((target / 'metrics_29GHz.json').read_bytes(),
                        (target / 'pattern_29GHz.csv').read_bytes()))
    assert outputs[0] == outputs[1]


def test_ingest_sweep(runner, tmp_path):
    csv = tmp_path / 'sweep.csv'
    csv.write_text('\n'.join(SWEEP_ROWS) + '\n', encoding='utf-8')
    result = runner.invoke(args=['ingest', str(csv), '--out', str(tmp_path / 'out')])
    assert result.exit_code == 0, result.output
    assert '3 entries over 1 frequencies' in result.output
    summary = read_json(tmp_path / 'out' / 'phase_table_summary.json')
    assert summary['entries'] == 3
    assert (tmp_path / 'out' / 'phase_table.csv').exists()


def test_ingest_rejects_bad_rows(runner, tmp_path):
    csv = tmp_path / 'sweep.csv'
    csv.write_text('\n'.join(SWEEP_ROWS[:2] + ['28,oops,3.0,0.2,6,6,0.95,0,0,0']) + '\n', encoding='utf-8')
    result = runner.invoke(args=['ingest', str(csv), '--out', str(tmp_path)])
    assert result.exit_code == 2
    assert 'line 3: malformed or missing value' in result.output


def test_export_stl(runner, tmp_path, ideal_config):
    result = runner.invoke(args=['export-stl', '--config', ideal_config, '--out', str(tmp_path)])
    assert result.exit_code == 0, result.output
    for name in ('rms.stl', 'mpg.stl'):
        size = (tmp_path / name).stat().st_size
        assert (size - 84) % 50 == 0
        assert size > 84
    manifest = (tmp_path / 'metallization.txt').read_text(encoding='utf-8')
    assert manifest.startswith('# toolkit=fratool')
    assert 'count=181' in manifest
    assert (tmp_path / 'rms.stl').read_bytes()[:8] == b'fratool '
