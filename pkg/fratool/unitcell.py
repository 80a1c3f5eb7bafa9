"""Anisotropic polarization-rotating unit cell.

The cell is a cross of two dielectric arms on a grounded substrate whose
eigen axes (u, v) sit at +45 degrees to the global axes. Arm ``l_x`` sets the
u-axis reflection ``r_u`` and arm ``l_y`` sets the v-axis reflection ``r_v``.
Reflections are looked up from three kinds of phase source:

* :class:`PhaseTable`      - ingested sweep data (CSV);
* :class:`SurrogateSource` - an analytic two-resonance surrogate;
* :class:`IdealSource`     - every phase reachable with unit conversion.
"""
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from .emcore import (
    FrequencyLike,
    JonesMatrix,
    ghz,
    phase_deg,
    phase_distance,
    polar,
    rotate_basis,
    wrap_deg,
)
from .errors import BandError, CoverageError, DomainError, IngestionError

logger = logging.getLogger(__name__)

L_MIN = 0.1
L_MAX = 5.2
DEFAULT_HEIGHTS = (0.2, 0.4)
DEFAULT_MIN_CROSS_MAG = 0.9
PASSIVITY_TOL = 1e-6
EIGEN_AXIS_DEG = 45.0
CSV_COLUMNS = (
    'freq_ghz', 'lx_mm', 'ly_mm', 'hu_mm', 'w1_mm', 'w2_mm',
    're_rxy', 'im_rxy', 're_ryy', 'im_ryy',
)
_KEY_DECIMALS = 9


@dataclass(frozen=True)
class CellGeometry:
    l_x: float
    l_y: float
    h_u: float = 0.2
    w_1: float = 6.0
    w_2: float = 6.0
    period_p: float = 6.0
    substrate_h_s: float = 0.4
    allowed_heights: Tuple[float, ...] = field(default=DEFAULT_HEIGHTS, compare=False, repr=False)

    def __post_init__(self):
        for name in ('l_x', 'l_y', 'w_1', 'w_2', 'period_p', 'substrate_h_s', 'h_u'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f'{name} must be positive, got {value!r} mm')
        if self.l_x > self.period_p or self.l_y > self.period_p:
            raise DomainError(
                f'arm lengths ({self.l_x}, {self.l_y}) mm exceed the period {self.period_p} mm'
            )
        if not any(math.isclose(self.h_u, h, abs_tol=1e-9) for h in self.allowed_heights):
            raise DomainError(f'h_u={self.h_u} mm is not one of {self.allowed_heights}')

    @property
    def key(self) -> Tuple[float, float, float, float, float]:
        return tuple(
            round(v, _KEY_DECIMALS) for v in (self.l_x, self.l_y, self.h_u, self.w_1, self.w_2)
        )

    @property
    def group(self) -> Tuple[float, float, float]:
        return self.key[2:]

    @property
    def arm_sum(self) -> float:
        return self.l_x + self.l_y

    def as_dict(self) -> Dict[str, float]:
        return {'lx': self.l_x, 'ly': self.l_y, 'hu': self.h_u, 'w1': self.w_1, 'w2': self.w_2}


@dataclass(frozen=True)
class EigenReflection:
    r_u: complex
    r_v: complex
    freq: float

    def __post_init__(self):
        for name in ('r_u', 'r_v'):
            if abs(getattr(self, name)) > 1.0 + 1e-9:
                raise DomainError(f'|{name}| = {abs(getattr(self, name)):.6f} exceeds 1 (not passive)')

    @classmethod
    def from_cross(cls, r_xy: complex, r_yy: complex, freq: float) -> 'EigenReflection':
        """Invert the symmetric +45 degree eigenbasis relation."""
        return cls(complex(r_yy + r_xy), complex(r_yy - r_xy), freq)


class ConversionRatio(NamedTuple):
    cross_mag: float
    co_mag: float
    cross_phase_deg: float


def rms_jones(eig: EigenReflection) -> JonesMatrix:
    return rotate_basis(JonesMatrix.diag(eig.r_u, eig.r_v), EIGEN_AXIS_DEG)


def conversion_ratio(eig: EigenReflection) -> ConversionRatio:
    cross = (eig.r_u - eig.r_v) / 2
    co = (eig.r_u + eig.r_v) / 2
    return ConversionRatio(abs(cross), abs(co), float(phase_deg(cross)))


@dataclass(frozen=True)
class PhaseTableEntry:
    geometry: CellGeometry
    freq: float
    r_xy: complex
    r_yy: complex

    def __post_init__(self):
        power = abs(self.r_xy) ** 2 + abs(self.r_yy) ** 2
        if power > 1.0 + PASSIVITY_TOL:
            raise DomainError(f'|r_xy|^2 + |r_yy|^2 = {power:.6f} violates passivity')


@dataclass(frozen=True)
class SourceEntries:
    """Candidate cells of a source at one frequency, in parameter order."""

    geometries: Tuple[CellGeometry, ...]
    r_xy: np.ndarray
    r_yy: np.ndarray

    def __len__(self) -> int:
        return len(self.geometries)


@dataclass(frozen=True)
class Resolution:
    geometries: Tuple[CellGeometry, ...]
    r_xy: np.ndarray
    r_yy: np.ndarray


def unwrap_along(phases: np.ndarray) -> np.ndarray:
    """Unwrap phases following the dominant direction of travel.

    Every step is taken modulo 360 in the direction most raw steps move, so
    a monotone family keeps its full extent even across large raw steps.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size < 2:
        return phases.copy()
    steps = np.diff(phases)
    rising = np.count_nonzero(steps > 0)
    falling = np.count_nonzero(steps < 0)
    if rising == falling:
        trend = 1.0 if steps.sum() >= 0 else -1.0
    else:
        trend = 1.0 if rising > falling else -1.0
    oriented = trend * wrap_deg(trend * steps)
    return np.concatenate([[phases[0]], phases[0] + np.cumsum(oriented)])


class PhaseSource(ABC):
    """Anything that can answer "which cell gives this cross-polar phase"."""

    @abstractmethod
    def entries_at(self, f: FrequencyLike) -> SourceEntries:
        ...

    @abstractmethod
    def eigen(self, geometry: CellGeometry, f: FrequencyLike) -> EigenReflection:
        ...

    def reflections(self, geometries: Sequence[CellGeometry], f: FrequencyLike) -> Tuple[np.ndarray, np.ndarray]:
        """(r_xy, r_yy) of placed cells re-evaluated at ``f``."""
        eigen = [self.eigen(g, f) for g in geometries]
        r_u = np.array([e.r_u for e in eigen], dtype=complex)
        r_v = np.array([e.r_v for e in eigen], dtype=complex)
        return (r_u - r_v) / 2, (r_u + r_v) / 2

    def available_heights(self, f: FrequencyLike) -> Tuple[float, ...]:
        return tuple(sorted({g.h_u for g in self.entries_at(f).geometries}))

    def resolve(self, targets_deg, f: FrequencyLike, min_cross_mag: float = DEFAULT_MIN_CROSS_MAG,
                block: int = 256, heights: Optional[Sequence[float]] = None) -> Resolution:
        _check_threshold(min_cross_mag)
        entries = self.entries_at(f)
        mags = np.abs(entries.r_xy)
        candidates = np.flatnonzero((mags >= min_cross_mag) & _height_mask(entries, heights))
        if candidates.size == 0:
            span = None
            if len(entries) >= 2:
                span = _coverage_of(entries, np.arange(len(entries)))
            best = float(mags.max()) if len(entries) else 0.0
            where = '' if heights is None else f' with h_u in {tuple(heights)}'
            raise CoverageError(
                f'no cell{where} reaches |r_xy| >= {min_cross_mag} at {ghz(f)} GHz (best {best:.4f})',
                achievable_span_deg=span,
            )
        arm_sums = np.array([entries.geometries[i].arm_sum for i in candidates])
        # larger |r_xy| first, then shorter arms; argmin keeps the first tie
        preference = np.lexsort((arm_sums, -np.round(mags[candidates], 12)))
        ordered = candidates[preference]
        phases = phase_deg(entries.r_xy[ordered])

        targets = np.atleast_1d(np.asarray(targets_deg, dtype=float))
        chosen = np.empty(targets.size, dtype=int)
        for start in range(0, targets.size, block):
            chunk = targets[start:start + block]
            distance = np.round(np.abs(phase_distance(chunk[:, None], phases[None, :])), 9)
            chosen[start:start + block] = ordered[np.argmin(distance, axis=1)]
        return Resolution(
            tuple(entries.geometries[i] for i in chosen),
            entries.r_xy[chosen],
            entries.r_yy[chosen],
        )

    def coverage(self, f: FrequencyLike, min_cross_mag: float = DEFAULT_MIN_CROSS_MAG,
                 heights: Optional[Sequence[float]] = None) -> float:
        _check_threshold(min_cross_mag)
        entries = self.entries_at(f)
        qualifying = np.flatnonzero((np.abs(entries.r_xy) >= min_cross_mag) & _height_mask(entries, heights))
        if qualifying.size < 2:
            raise CoverageError(
                f'{qualifying.size} cell(s) reach |r_xy| >= {min_cross_mag} at {ghz(f)} GHz; need 2'
            )
        return _coverage_of(entries, qualifying)

    def covered_midpoint(self, f: FrequencyLike, min_cross_mag: float = DEFAULT_MIN_CROSS_MAG) -> float:
        """Centre of the widest covered phase interval, wrapped to [0, 360)."""
        entries = self.entries_at(f)
        qualifying = np.flatnonzero(np.abs(entries.r_xy) >= min_cross_mag)
        best_span, best_mid = -1.0, 0.0
        for indices in _groups(entries, qualifying):
            unwrapped = unwrap_along(wrap_deg(phase_deg(entries.r_xy[indices])))
            span = float(unwrapped.max() - unwrapped.min())
            if span > best_span:
                best_span = span
                best_mid = 0.5 * float(unwrapped.max() + unwrapped.min())
        return wrap_deg(best_mid)


def _check_threshold(min_cross_mag: float) -> None:
    if not min_cross_mag > 0:
        raise DomainError(f'min_cross_mag must be positive, got {min_cross_mag!r}')


def _height_mask(entries: SourceEntries, heights: Optional[Sequence[float]]) -> np.ndarray:
    if heights is None:
        return np.ones(len(entries), dtype=bool)
    values = np.array([g.h_u for g in entries.geometries], dtype=float)
    return np.isclose(values[:, None], np.asarray(heights, dtype=float)[None, :], rtol=0, atol=1e-9).any(axis=1)


def _groups(entries: SourceEntries, indices: np.ndarray) -> List[np.ndarray]:
    buckets: Dict[Tuple[float, float, float], List[int]] = {}
    for i in indices:
        buckets.setdefault(entries.geometries[i].group, []).append(int(i))
    ordered = []
    for key in sorted(buckets):
        members = buckets[key]
        members.sort(key=lambda i: entries.geometries[i].key)
        ordered.append(np.array(members, dtype=int))
    return ordered


def _coverage_of(entries: SourceEntries, indices: np.ndarray) -> float:
    best = 0.0
    for members in _groups(entries, indices):
        if members.size < 2:
            continue
        unwrapped = unwrap_along(wrap_deg(phase_deg(entries.r_xy[members])))
        best = max(best, float(unwrapped.max() - unwrapped.min()))
    return best


def lookup_geometry(target_phase_deg: float, f: FrequencyLike, source: PhaseSource,
                    min_cross_mag: float = DEFAULT_MIN_CROSS_MAG) -> CellGeometry:
    return source.resolve([target_phase_deg], f, min_cross_mag).geometries[0]


def phase_coverage(source: PhaseSource, f: FrequencyLike,
                   min_cross_mag: float = DEFAULT_MIN_CROSS_MAG) -> float:
    return source.coverage(f, min_cross_mag)


class PhaseTable(PhaseSource):
    """Validated sweep data indexed by frequency, then geometry."""

    def __init__(self, entries: Sequence[PhaseTableEntry]):
        if not entries:
            raise IngestionError('no entries')
        self._entries = tuple(entries)
        self._index: Dict[Tuple[float, tuple], int] = {}
        for i, entry in enumerate(self._entries):
            key = (round(entry.freq, _KEY_DECIMALS), entry.geometry.key)
            if key in self._index:
                raise IngestionError(f'duplicate entry for {key}')
            self._index[key] = i
        self._frequencies = tuple(sorted({round(e.freq, _KEY_DECIMALS) for e in self._entries}))
        self._cache: Dict[float, SourceEntries] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def entries(self) -> Tuple[PhaseTableEntry, ...]:
        return self._entries

    @property
    def frequencies(self) -> Tuple[float, ...]:
        return self._frequencies

    def _slice(self, freq_key: float) -> Dict[tuple, PhaseTableEntry]:
        return {e.geometry.key: e for e in self._entries if round(e.freq, _KEY_DECIMALS) == freq_key}

    def entries_at(self, f: FrequencyLike) -> SourceEntries:
        value = round(ghz(f), _KEY_DECIMALS)
        if value in self._cache:
            return self._cache[value]
        if value < self._frequencies[0] or value > self._frequencies[-1]:
            raise BandError(
                f'{value} GHz is outside the tabulated band '
                f'{self._frequencies[0]}-{self._frequencies[-1]} GHz'
            )
        if value in self._frequencies:
            rows = self._slice(value)
            geometries = [rows[k].geometry for k in rows]
            r_xy = np.array([rows[k].r_xy for k in rows], dtype=complex)
            r_yy = np.array([rows[k].r_yy for k in rows], dtype=complex)
        else:
            upper = next(fq for fq in self._frequencies if fq > value)
            lower = max(fq for fq in self._frequencies if fq < value)
            t = (value - lower) / (upper - lower)
            below, above = self._slice(lower), self._slice(upper)
            shared = [k for k in below if k in above]
            geometries = [below[k].geometry for k in shared]
            r_xy = np.array([_interpolate(below[k].r_xy, above[k].r_xy, t) for k in shared], dtype=complex)
            r_yy = np.array([_interpolate(below[k].r_yy, above[k].r_yy, t) for k in shared], dtype=complex)
        order = sorted(range(len(geometries)), key=lambda i: (geometries[i].group, geometries[i].key))
        entries = SourceEntries(
            tuple(geometries[i] for i in order), r_xy[order], r_yy[order]
        )
        self._cache[value] = entries
        return entries

    def _nearest(self, geometries: Sequence[CellGeometry], f: FrequencyLike) -> Tuple[SourceEntries, np.ndarray]:
        entries = self.entries_at(f)
        keys = np.array([g.key for g in entries.geometries])
        exact = {g.key: i for i, g in enumerate(entries.geometries)}
        nearest = [
            exact[g.key] if g.key in exact
            else int(np.argmin(np.linalg.norm(keys - np.array(g.key), axis=1)))
            for g in geometries
        ]
        return entries, np.array(nearest, dtype=int)

    def eigen(self, geometry: CellGeometry, f: FrequencyLike) -> EigenReflection:
        entries, nearest = self._nearest([geometry], f)
        return EigenReflection.from_cross(entries.r_xy[nearest[0]], entries.r_yy[nearest[0]], ghz(f))

    def reflections(self, geometries: Sequence[CellGeometry], f: FrequencyLike) -> Tuple[np.ndarray, np.ndarray]:
        # tabulated pairs are passive by |r_xy|^2 + |r_yy|^2 <= 1 and are used as measured
        entries, nearest = self._nearest(geometries, f)
        return entries.r_xy[nearest], entries.r_yy[nearest]


def _interpolate(a: complex, b: complex, t: float) -> complex:
    """Linear in magnitude and in (shortest-path) unwrapped phase."""
    magnitude = (1 - t) * abs(a) + t * abs(b)
    start = float(phase_deg(a))
    return complex(polar(magnitude, start + t * phase_distance(phase_deg(b), start)))


def ingest_phase_table(source, allowed_heights: Tuple[float, ...] = DEFAULT_HEIGHTS) -> PhaseTable:
    """Read a sweep CSV (path or text stream) into a validated :class:`PhaseTable`."""
    try:
        frame = pd.read_csv(source, dtype=str, skipinitialspace=True, skip_blank_lines=False,
                            encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise IngestionError('no entries') from None
    except pd.errors.ParserError as exc:
        raise IngestionError(f'malformed CSV: {exc}') from None

    columns = tuple(c.strip() for c in frame.columns)
    if columns != CSV_COLUMNS:
        raise IngestionError(f'header {columns} does not match {CSV_COLUMNS}')
    frame.columns = list(columns)
    # blank lines stay as empty rows so the index tracks the file line
    frame = frame.dropna(how='all')
    if frame.empty:
        raise IngestionError('no entries')

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    problems: List[Tuple[int, str]] = []
    entries: List[PhaseTableEntry] = []
    seen: Dict[Tuple[float, tuple], int] = {}
    for index, row in zip(numeric.index, numeric.itertuples(index=False)):
        line = int(index) + 2
        values = np.array(row, dtype=float)
        if not np.all(np.isfinite(values)):
            problems.append((line, 'malformed or missing value'))
            continue
        freq, lx, ly, hu, w1, w2, re_xy, im_xy, re_yy, im_yy = values
        try:
            geometry = CellGeometry(lx, ly, hu, w1, w2, allowed_heights=allowed_heights)
            entry = PhaseTableEntry(geometry, freq, complex(re_xy, im_xy), complex(re_yy, im_yy))
        except DomainError as exc:
            problems.append((line, str(exc)))
            continue
        if freq <= 0:
            problems.append((line, 'non-positive frequency'))
            continue
        key = (round(freq, _KEY_DECIMALS), geometry.key)
        if key in seen:
            problems.append((line, f'duplicate key (first seen on line {seen[key]})'))
            continue
        seen[key] = line
        entries.append(entry)

    if problems:
        raise IngestionError('phase table rejected', rows=problems)
    logger.info('Ingested %s phase-table entries over %s frequencies.',
                len(entries), len({e.freq for e in entries}))
    return PhaseTable(entries)


def export_phase_table(table: PhaseTable, target) -> None:
    rows = [
        (e.freq, e.geometry.l_x, e.geometry.l_y, e.geometry.h_u, e.geometry.w_1, e.geometry.w_2,
         e.r_xy.real, e.r_xy.imag, e.r_yy.real, e.r_yy.imag)
        for e in table
    ]
    pd.DataFrame(rows, columns=list(CSV_COLUMNS)).to_csv(target, index=False, lineterminator='\n')


@dataclass(frozen=True)
class SurrogateParams:
    """Two cascaded arctangent resonances per arm.

    ``slopes`` are the peak phase slopes (deg/mm) at each resonance centre;
    ``height_shift`` delays the whole curve per mm of extra cell height and
    ``height_center_shift`` pulls the second resonance to shorter arms.

    Away from ``reference_freq`` an arm's electrical length grows
    ``arm_dispersion`` times faster than the frequency ratio, and every mm of
    extra height adds ``height_dispersion`` degrees of lag per GHz. Taller
    cells therefore lose phase faster with frequency than short ones.
    """

    centers: Tuple[float, float] = (1.6, 3.8)
    slopes: Tuple[float, float] = (210.0, 175.0)
    spans: Tuple[float, float] = (330.0, 330.0)
    height_shift: float = 150.0
    height_center_shift: float = 2.0
    width_center_shift: float = 0.1
    reference_phase_deg: float = 180.0
    reference_height: float = 0.2
    reference_width: float = 6.0
    reference_freq: float = 28.0
    arm_dispersion: float = 4.0
    height_dispersion: float = 90.0
    loss_floor: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.loss_floor < 1.0:
            raise DomainError(f'loss_floor must lie in [0, 1), got {self.loss_floor!r}')
        if min(self.slopes) <= 0 or min(self.spans) <= 0:
            raise DomainError('surrogate slopes and spans must be positive')
        if not self.arm_dispersion >= 0:
            raise DomainError(f'arm_dispersion must not be negative, got {self.arm_dispersion!r}')
        if not math.isfinite(self.height_dispersion):
            raise DomainError(f'height_dispersion must be finite, got {self.height_dispersion!r}')

    def length_scale(self, f: FrequencyLike) -> float:
        scale = 1.0 + self.arm_dispersion * (ghz(f) / self.reference_freq - 1.0)
        if scale <= 0:
            raise BandError(f'{ghz(f)} GHz is below the frequency range of the surrogate')
        return scale

    def axis_phase(self, length, h_u: float, width: float, f: FrequencyLike):
        electrical = np.asarray(length, dtype=float) * self.length_scale(f)
        centers = (
            self.centers[0] + self.width_center_shift * (width - self.reference_width),
            self.centers[1] - self.height_center_shift * (h_u - self.reference_height),
        )
        lag = self.height_shift + self.height_dispersion * (ghz(f) - self.reference_freq)
        phase = self.reference_phase_deg - lag * (h_u - self.reference_height)
        for center, slope, span in zip(centers, self.slopes, self.spans):
            half_width = span / (math.pi * slope)
            phase = phase - span / math.pi * np.arctan((electrical - center) / half_width)
        return phase

    def span_deg(self, h_u: float = 0.2, width: float = 6.0, f: FrequencyLike = 28.0) -> float:
        return float(self.axis_phase(L_MIN, h_u, width, f) - self.axis_phase(L_MAX, h_u, width, f))


def surrogate_eigen(geometry: CellGeometry, f: FrequencyLike,
                    p: SurrogateParams | None = None) -> EigenReflection:
    p = p or SurrogateParams()
    for name in ('l_x', 'l_y'):
        value = getattr(geometry, name)
        if value < L_MIN - 1e-9 or value > L_MAX + 1e-9:
            raise DomainError(f'{name}={value} mm is outside the sweep range [{L_MIN}, {L_MAX}] mm')
    magnitude = 1.0 - p.loss_floor
    phase_u = p.axis_phase(geometry.l_x, geometry.h_u, geometry.w_1, f)
    phase_v = p.axis_phase(geometry.l_y, geometry.h_u, geometry.w_2, f)
    return EigenReflection(complex(polar(magnitude, phase_u)), complex(polar(magnitude, phase_v)), ghz(f))


class SurrogateSource(PhaseSource):
    """Surrogate sampled as a design family.

    For every height and every ``l_x`` on a regular grid the partner ``l_y``
    is solved so the eigen phases differ by exactly 180 degrees; the cross
    phase of each family member then equals the u-axis phase.
    """

    def __init__(self, params: SurrogateParams | None = None,
                 heights: Tuple[float, ...] = DEFAULT_HEIGHTS,
                 widths: Tuple[float, float] = (6.0, 6.0),
                 step: float = 0.05):
        self.params = params or SurrogateParams()
        self.heights = tuple(heights)
        self.widths = tuple(widths)
        self.step = step
        count = int(round((L_MAX - L_MIN) / step)) + 1
        self.arm_grid = np.round(L_MIN + step * np.arange(count), 9)
        self._cache: Dict[float, SourceEntries] = {}
        for h in self.heights:
            span = self.params.span_deg(h, self.widths[0], self.params.reference_freq)
            if span <= 400.0:
                raise DomainError(f'surrogate phase span {span:.1f} deg at h_u={h} does not exceed 400 deg')

    def _partner(self, target: float, h_u: float, f: float) -> float | None:
        width = self.widths[1]
        top = float(self.params.axis_phase(L_MIN, h_u, width, f))
        bottom = float(self.params.axis_phase(L_MAX, h_u, width, f))
        # highest admissible level gives the shortest partner arm
        level = target - 360.0 * math.ceil((target - top) / 360.0)
        if level < bottom:
            return None
        return brentq(
            lambda length: float(self.params.axis_phase(length, h_u, width, f)) - level,
            L_MIN, L_MAX, xtol=1e-13, rtol=1e-15,
        )

    def entries_at(self, f: FrequencyLike) -> SourceEntries:
        value = round(ghz(f), _KEY_DECIMALS)
        if value in self._cache:
            return self._cache[value]
        geometries: List[CellGeometry] = []
        for h in self.heights:
            phases = self.params.axis_phase(self.arm_grid, h, self.widths[0], value)
            for l_x, phase_u in zip(self.arm_grid, phases):
                l_y = self._partner(float(phase_u) + 180.0, h, value)
                if l_y is None:
                    continue
                geometries.append(
                    CellGeometry(float(l_x), float(l_y), h, self.widths[0], self.widths[1],
                                 allowed_heights=self.heights)
                )
        eigen = [surrogate_eigen(g, value, self.params) for g in geometries]
        r_u = np.array([e.r_u for e in eigen], dtype=complex)
        r_v = np.array([e.r_v for e in eigen], dtype=complex)
        entries = SourceEntries(tuple(geometries), (r_u - r_v) / 2, (r_u + r_v) / 2)
        self._cache[value] = entries
        logger.debug('Surrogate family at %s GHz: %s cells.', value, len(entries))
        return entries

    def eigen(self, geometry: CellGeometry, f: FrequencyLike) -> EigenReflection:
        return surrogate_eigen(geometry, f, self.params)


class IdealSource(PhaseSource):
    """Every cross phase realizable with |r_xy| = 1 at every frequency."""

    def __init__(self, h_u: float = 0.2):
        self.h_u = h_u

    def _geometry(self, phase: float) -> CellGeometry:
        scale = (L_MAX - L_MIN) / 360.0
        return CellGeometry(L_MIN + scale * phase, L_MIN + scale * wrap_deg(phase + 180.0), self.h_u,
                            allowed_heights=(self.h_u,))

    def _phase(self, geometry: CellGeometry) -> float:
        return (geometry.l_x - L_MIN) * 360.0 / (L_MAX - L_MIN)

    def entries_at(self, f: FrequencyLike) -> SourceEntries:
        phases = np.arange(0.0, 361.0)
        geometries = tuple(self._geometry(p) for p in phases)
        return SourceEntries(geometries, polar(1.0, phases).astype(complex), np.zeros(phases.size, complex))

    def eigen(self, geometry: CellGeometry, f: FrequencyLike) -> EigenReflection:
        return EigenReflection.from_cross(complex(polar(1.0, self._phase(geometry))), 0j, ghz(f))

    def available_heights(self, f: FrequencyLike) -> Tuple[float, ...]:
        return (self.h_u,)

    def _check(self, min_cross_mag: float, heights: Optional[Sequence[float]]) -> None:
        _check_threshold(min_cross_mag)
        if min_cross_mag > 1.0:
            raise CoverageError(f'no cell reaches |r_xy| >= {min_cross_mag}', achievable_span_deg=360.0)
        if heights is not None and not any(math.isclose(self.h_u, h, abs_tol=1e-9) for h in heights):
            raise CoverageError(f'ideal cells have h_u={self.h_u}, not one of {tuple(heights)}')

    def resolve(self, targets_deg, f: FrequencyLike, min_cross_mag: float = DEFAULT_MIN_CROSS_MAG,
                block: int = 256, heights: Optional[Sequence[float]] = None) -> Resolution:
        self._check(min_cross_mag, heights)
        targets = np.atleast_1d(wrap_deg(np.atleast_1d(np.asarray(targets_deg, dtype=float))))
        return Resolution(
            tuple(self._geometry(float(t)) for t in targets),
            polar(1.0, targets).astype(complex),
            np.zeros(targets.size, dtype=complex),
        )

    def coverage(self, f: FrequencyLike, min_cross_mag: float = DEFAULT_MIN_CROSS_MAG,
                 heights: Optional[Sequence[float]] = None) -> float:
        self._check(min_cross_mag, heights)
        return 360.0

    def covered_midpoint(self, f: FrequencyLike, min_cross_mag: float = DEFAULT_MIN_CROSS_MAG) -> float:
        return 180.0
