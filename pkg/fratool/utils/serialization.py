from __future__ import annotations

import json
import math
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .. import __version__
from ..errors import DesignFormatError, DomainError, ToolkitIOError
from ..layout import DesignedAperture, DesignedElement, FeedCutout, FoldedGeometry, Lattice
from ..unitcell import CellGeometry

SCHEMA_VERSION = 1


def provenance(config_hash: Optional[str]) -> Dict[str, Any]:
    return {'toolkit': 'fratool', 'version': __version__, 'config_hash': config_hash}


def _complex(z: complex) -> Dict[str, float]:
    return {'re': float(z.real), 'im': float(z.imag)}


def design_to_dict(design: DesignedAperture, config_hash: Optional[str] = None) -> Dict[str, Any]:
    geom = design.folded_geometry
    elements = []
    for e in design.elements:
        record: Dict[str, Any] = {'x_mm': e.x, 'y_mm': e.y, 'quadrant': e.quadrant, 'omitted': e.omitted}
        if not e.omitted:
            g = e.geometry
            record.update({
                'geometry': dict(g.as_dict(), period_p=g.period_p, hs=g.substrate_h_s),
                'required_phase_deg': e.required_phase,
                'achieved_rxy': _complex(e.achieved_rxy),
                'achieved_ryy': _complex(e.achieved_ryy),
                'phase_error_deg': e.phase_error,
            })
        elements.append(record)
    return {
        'schema_version': SCHEMA_VERSION,
        'provenance': provenance(config_hash or design.provenance.get('config_hash')),
        'folded_geometry': {
            'fold_height_h': geom.fold_height_h,
            'aperture_d': geom.aperture_d,
            'virtual_focal_f': geom.virtual_focal_f,
            'feed_cutout': asdict(geom.feed_cutout),
            'lattice': asdict(geom.lattice),
            'cutout_clearance': geom.cutout_clearance,
        },
        'frequency_ghz': design.frequency_ghz,
        'phase_offset_deg': design.phase_offset,
        'min_cross_mag': design.min_cross_mag,
        'elements': elements,
    }


def design_from_dict(document: Mapping[str, Any]) -> DesignedAperture:
    version = document.get('schema_version') if isinstance(document, Mapping) else None
    if version != SCHEMA_VERSION:
        raise DesignFormatError(f'unsupported design schema version {version!r}; expected {SCHEMA_VERSION}')
    try:
        block = document['folded_geometry']
        geom = FoldedGeometry(
            fold_height_h=float(block['fold_height_h']),
            aperture_d=float(block['aperture_d']),
            feed_cutout=FeedCutout(**block['feed_cutout']),
            lattice=Lattice(**block['lattice']),
            cutout_clearance=block.get('cutout_clearance'),
        )
        records = document['elements']
        heights = tuple(sorted({float(r['geometry']['hu']) for r in records if not r['omitted']})) or (0.2,)
        elements = []
        for r in records:
            if r['omitted']:
                elements.append(DesignedElement(float(r['x_mm']), float(r['y_mm']), int(r['quadrant']), True))
                continue
            g = r['geometry']
            geometry = CellGeometry(
                float(g['lx']), float(g['ly']), float(g['hu']), float(g['w1']), float(g['w2']),
                float(g.get('period_p', 6.0)), float(g.get('hs', 0.4)), allowed_heights=heights,
            )
            elements.append(DesignedElement(
                float(r['x_mm']), float(r['y_mm']), int(r['quadrant']), False, geometry,
                float(r['required_phase_deg']),
                complex(r['achieved_rxy']['re'], r['achieved_rxy']['im']),
                complex(r['achieved_ryy']['re'], r['achieved_ryy']['im']),
                float(r['phase_error_deg']),
            ))
        return DesignedAperture(
            geom,
            float(document['frequency_ghz']),
            float(document['phase_offset_deg']),
            tuple(elements),
            float(document.get('min_cross_mag', 0.9)),
            dict(document.get('provenance') or {}),
        )
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise DesignFormatError(f'malformed design document: {exc}') from exc


def export_design(design: DesignedAperture, path, config_hash: Optional[str] = None) -> None:
    """Write the design JSON; floats keep their full repr so import is lossless."""
    text = json.dumps(design_to_dict(design, config_hash), indent=1, allow_nan=False)
    _write_text(path, text + '\n')


def import_design(path) -> DesignedAperture:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise ToolkitIOError(f'cannot read design {path}: {exc}') from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DesignFormatError(f'{path} is not valid JSON: {exc}') from None
    return design_from_dict(document)


def fixed(value: Any, digits: int) -> Any:
    """Round floats (recursively) so repeated runs serialize identically."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        rounded = round(value, digits)
        return 0.0 if rounded == 0 else rounded
    if isinstance(value, Mapping):
        return {str(k): fixed(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [fixed(v, digits) for v in value]
    return fixed(float(value), digits)


def export_metrics(document: Mapping[str, Any], path, digits: int, config_hash: Optional[str]) -> None:
    payload = {'provenance': provenance(config_hash), **fixed(dict(document), digits)}
    _write_text(path, json.dumps(payload, indent=1, sort_keys=True) + '\n')


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding='utf-8')
    except OSError as exc:
        raise ToolkitIOError(f'cannot write {path}: {exc}') from exc
