"""Run configuration: one JSON document describing a complete design run.

Missing keys fall back to the bundled prototype configuration; unknown keys
are rejected so typos do not silently fall back to defaults.
"""
from __future__ import annotations

import copy
import hashlib
import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from .emcore import X_HAT, Y_HAT
from .errors import ConfigError, DomainError, FratoolError
from .layout import FeedCutout, FoldedGeometry, Lattice
from .pofield import AnalysisOptions, FeedModel
from .polarizer import MpgModel, MpgResponse, load_mpg_response
from .unitcell import IdealSource, PhaseSource, SurrogateParams, SurrogateSource, ingest_phase_table

logger = logging.getLogger(__name__)

SOURCE_KINDS = ('surrogate', 'table', 'ideal')
POLARIZATIONS = {'x': X_HAT, 'y': Y_HAT}


def bundled_json(name: str) -> Dict[str, Any]:
    text = resources.files('fratool').joinpath('data', name).read_text(encoding='utf-8')
    return json.loads(text)


def _merge(defaults: Dict[str, Any], given: Dict[str, Any], where: str = '') -> Dict[str, Any]:
    merged = copy.deepcopy(defaults)
    for key, value in given.items():
        path = f'{where}{key}'
        if key not in defaults:
            raise ConfigError(f'unknown configuration key {path!r}')
        if isinstance(defaults[key], dict) and defaults[key] and key != 'params':
            if not isinstance(value, dict):
                raise ConfigError(f'{path!r} must be an object')
            merged[key] = _merge(defaults[key], value, f'{path}.')
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def canonical_json(document: Any) -> str:
    return json.dumps(document, sort_keys=True, separators=(',', ':'), allow_nan=False)


@dataclass(frozen=True)
class RunConfig:
    document: Dict[str, Any]
    base_dir: Path

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.document).encode('utf-8')).hexdigest()

    def _section(self, name: str) -> Dict[str, Any]:
        return self.document[name]

    def _resolve_path(self, value: Optional[str]) -> Optional[Path]:
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def folded_geometry(self) -> FoldedGeometry:
        block = self._section('folded_geometry')
        return FoldedGeometry(
            fold_height_h=float(block['fold_height_h']),
            aperture_d=float(block['aperture_d']),
            feed_cutout=FeedCutout(**{k: float(v) for k, v in block['feed_cutout'].items()}),
            lattice=Lattice(
                period_p=float(block['lattice']['period_p']),
                neighbor_spacing=float(block['lattice']['neighbor_spacing']),
                tile_cols=int(block['lattice']['tile_cols']),
                tile_rows=int(block['lattice']['tile_rows']),
            ),
        )

    @property
    def heights(self) -> Tuple[float, ...]:
        return tuple(float(h) for h in self._section('cell')['heights'])

    @property
    def height_zones(self) -> Tuple[float, ...]:
        return tuple(float(b) for b in self._section('cell')['height_zones_mm'])

    @property
    def substrate_h_s(self) -> float:
        return float(self._section('cell')['substrate_h_s'])

    def feed(self) -> FeedModel:
        block = self._section('feed')
        polarization = POLARIZATIONS.get(block['polarization'])
        if polarization is None:
            raise ConfigError(f"feed polarization must be one of {sorted(POLARIZATIONS)}, got {block['polarization']!r}")
        gain = block['peak_gain_dbi']
        gain = None if gain is None else float(gain)
        if block['q_exponent'] is not None:
            return FeedModel(float(block['q_exponent']), gain, polarization)
        return FeedModel.from_hpbw(float(block['hpbw_deg']), peak_gain_dbi=gain, polarization=polarization)

    def mpg(self) -> MpgModel:
        block = self._section('mpg')
        csv = self._resolve_path(block['response_csv'])
        if csv is not None:
            response = load_mpg_response(csv)
        else:
            low, high = (float(v) for v in block['band_ghz'])
            ryy, txx = float(block['ryy_db']), float(block['txx_db'])
            response = MpgResponse((low, high), (ryy, ryy), (txx, txx))
        return MpgModel(float(block['strip_width']), float(block['pitch']), response)

    @property
    def mpg_panel(self) -> Tuple[float, float]:
        width, length = self._section('mpg')['panel_mm']
        return float(width), float(length)

    @property
    def strip_h(self) -> float:
        return float(self._section('mpg')['strip_h'])

    @property
    def min_cross_mag(self) -> float:
        return float(self._section('source')['min_cross_mag'])

    def source(self) -> PhaseSource:
        block = self._section('source')
        kind = block['kind']
        if kind == 'table':
            return ingest_phase_table(self._resolve_path(block['csv']), self.heights)
        if kind == 'ideal':
            return IdealSource(self.heights[0])
        params = SurrogateParams(**{k: tuple(v) if isinstance(v, list) else v for k, v in block['params'].items()})
        widths = tuple(float(w) for w in self._section('cell')['widths'])
        return SurrogateSource(params, self.heights, widths, float(block['grid_step']))

    @property
    def f0(self) -> float:
        return float(self._section('band')['f0_ghz'])

    @property
    def analysis_freq(self) -> float:
        return float(self._section('band')['analysis_ghz'])

    @property
    def f_list(self) -> Tuple[float, ...]:
        return tuple(float(f) for f in self._section('band')['f_list'])

    @property
    def phase_offset(self) -> Optional[float]:
        value = self.document['phase_offset']
        return None if value is None else float(value)

    @property
    def radiation_efficiency(self) -> float:
        return float(self.document['radiation_efficiency'])

    @property
    def output_dir(self) -> Optional[str]:
        return self.document['output_dir']

    def analysis_options(self, threads: int = 1, chunk: int = 256, block: int = 512) -> AnalysisOptions:
        section = self._section('analysis')
        return AnalysisOptions(
            theta_span=float(section['theta_span']),
            theta_step=float(section['theta_step']),
            phi_cuts=tuple(float(p) for p in section['phi_cuts']),
            element_n=float(section['element_n']),
            chunk=chunk,
            block=block,
            threads=threads,
        )

    def validate(self) -> 'RunConfig':
        """Build every model once so bad values surface as configuration errors."""
        source = self._section('source')
        if source['kind'] not in SOURCE_KINDS:
            raise ConfigError(f"source kind must be one of {SOURCE_KINDS}, got {source['kind']!r}")
        for label, value in (('source.csv', source['csv'] if source['kind'] == 'table' else None),
                             ('mpg.response_csv', self._section('mpg')['response_csv'])):
            path = self._resolve_path(value)
            if path is not None and not path.is_file():
                raise ConfigError(f'{label} refers to a missing file: {path}')
        if source['kind'] == 'table' and source['csv'] is None:
            raise ConfigError('source.csv is required when source.kind is "table"')
        if len(self.f_list) < 3:
            raise ConfigError('band.f_list needs at least three frequencies')
        if not 0 < self.radiation_efficiency <= 1:
            raise ConfigError(f'radiation_efficiency must lie in (0, 1], got {self.radiation_efficiency!r}')
        try:
            zones = self.height_zones
            if any(b <= 0 for b in zones) or any(b <= a for a, b in zip(zones, zones[1:])):
                raise ConfigError(f'cell.height_zones_mm must be positive and increasing, got {list(zones)}')
            self.folded_geometry()
            self.feed()
            self.mpg()
            self.analysis_options()
            if not 0 < self.min_cross_mag:
                raise DomainError('source.min_cross_mag must be positive')
            if source['kind'] == 'surrogate':
                SurrogateParams(**{k: tuple(v) if isinstance(v, list) else v for k, v in source['params'].items()})
        except ConfigError:
            raise
        except (FratoolError, TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f'invalid configuration: {exc}') from exc
        return self


def default_document() -> Dict[str, Any]:
    return bundled_json('default_config.json')


def load_run_config(path: Optional[str | Path] = None) -> RunConfig:
    """Read, merge over the prototype defaults and validate a run configuration."""
    defaults = default_document()
    if path is None:
        return RunConfig(defaults, Path.cwd()).validate()
    path = Path(path)
    try:
        given = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise ConfigError(f'configuration file not found: {path}') from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f'configuration file {path} is not valid JSON: {exc}') from None
    if not isinstance(given, dict):
        raise ConfigError('configuration must be a JSON object')
    config = RunConfig(_merge(defaults, given), path.resolve().parent).validate()
    logger.info('Loaded run configuration %s (hash %s).', path, config.config_hash[:12])
    return config
