"""Folded geometry, triangular lattice and phase synthesis of the RMS."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .emcore import FrequencyLike, ghz, phase_deg, phase_distance, wavelength, wrap_deg
from .errors import DomainError, LayoutError, SynthesisError
from .unitcell import DEFAULT_MIN_CROSS_MAG, EIGEN_AXIS_DEG, CellGeometry, PhaseSource, Resolution
from .utils.usage import usage_histogram

logger = logging.getLogger(__name__)

QUADRANT_SIGNS = {1: (1.0, 1.0), 2: (-1.0, 1.0), 3: (-1.0, -1.0), 4: (1.0, -1.0)}


@dataclass(frozen=True)
class FeedCutout:
    width: float = 18.5
    length: float = 14.9
    rotation: float = 45.0

    @property
    def area(self) -> float:
        return self.width * self.length

    def corners(self) -> np.ndarray:
        """Counter-clockwise corners in the global frame."""
        half = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float) * [self.width / 2, self.length / 2]
        return _rotated(half, self.rotation)

    def overlaps_cell(self, geometry: CellGeometry, center: Sequence[float],
                      rotation: float = EIGEN_AXIS_DEG) -> bool:
        """Whether either arm of a cell placed at ``center`` reaches into the cutout."""
        arms = arm_rectangles(geometry)
        reach = max(float(np.hypot(*arm[2])) for arm in arms)
        if float(self.distance(*center)) >= reach:
            return False
        corners = self.corners()
        offset = np.asarray(center, dtype=float)
        return any(_convex_overlap(_rotated(arm, rotation) + offset, corners) for arm in arms)

    def distance(self, x, y) -> np.ndarray:
        """Euclidean distance from points to the cutout rectangle (0 inside)."""
        angle = math.radians(self.rotation)
        c, s = math.cos(angle), math.sin(angle)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u = np.abs(c * x + s * y) - self.width / 2
        v = np.abs(-s * x + c * y) - self.length / 2
        return np.hypot(np.maximum(u, 0.0), np.maximum(v, 0.0))


def _rotated(points: np.ndarray, degrees: float) -> np.ndarray:
    angle = math.radians(degrees)
    c, s = math.cos(angle), math.sin(angle)
    return points @ np.array([[c, s], [-s, c]])


def arm_rectangles(g: CellGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """Corner loops of the two arms whose union is the cross footprint."""
    loops = [
        np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]])
        for hx, hy in ((g.l_x / 2, g.w_1 / 2), (g.w_2 / 2, g.l_y / 2))
    ]
    return loops[0], loops[1]


def _convex_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test; polygons that only touch do not overlap."""
    for poly in (a, b):
        edges = np.roll(poly, -1, axis=0) - poly
        normals = np.column_stack([-edges[:, 1], edges[:, 0]])
        on_a = a @ normals.T
        on_b = b @ normals.T
        apart = (on_a.max(axis=0) <= on_b.min(axis=0) + 1e-9) | (on_b.max(axis=0) <= on_a.min(axis=0) + 1e-9)
        if apart.any():
            return False
    return True


@dataclass(frozen=True)
class Lattice:
    period_p: float = 6.0
    neighbor_spacing: float = 3.0
    tile_cols: int = 16
    tile_rows: int = 31


@dataclass(frozen=True)
class FoldedGeometry:
    fold_height_h: float = 40.0
    aperture_d: float = 192.0
    feed_cutout: FeedCutout = field(default_factory=FeedCutout)
    lattice: Lattice = field(default_factory=Lattice)
    cutout_clearance: Optional[float] = None

    def __post_init__(self):
        if not self.fold_height_h > 0:
            raise LayoutError(f'fold height must be positive, got {self.fold_height_h!r} mm')
        if not self.aperture_d > 0:
            raise LayoutError(f'aperture must be positive, got {self.aperture_d!r} mm')
        cut = self.feed_cutout
        if cut.width <= 0 or cut.length <= 0:
            raise LayoutError('feed cutout dimensions must be positive')
        if np.abs(cut.corners()).max() >= self.aperture_d / 2:
            raise LayoutError('feed cutout does not fit inside the aperture')

    @property
    def virtual_focal_f(self) -> float:
        return virtual_focus(self.fold_height_h)

    @property
    def f_over_d(self) -> float:
        return self.virtual_focal_f / self.aperture_d

    @property
    def h_over_d(self) -> float:
        return self.fold_height_h / self.aperture_d

    @property
    def clearance(self) -> float:
        if self.cutout_clearance is not None:
            return self.cutout_clearance
        return self.lattice.neighbor_spacing / 2


def virtual_focus(h: float) -> float:
    """Mirror image of the feed in the grid plane sits at twice the fold height."""
    if not h > 0:
        raise DomainError(f'fold height must be positive, got {h!r} mm')
    return 2.0 * h


@dataclass(frozen=True)
class Site:
    x: float
    y: float
    quadrant: int
    omitted: bool = False


@dataclass(frozen=True)
class ApertureLayout:
    geometry: FoldedGeometry
    elements: Tuple[Site, ...]

    @property
    def site_count(self) -> int:
        return len(self.elements)

    @property
    def active(self) -> Tuple[Site, ...]:
        return tuple(s for s in self.elements if not s.omitted)

    @property
    def omitted_count(self) -> int:
        return sum(1 for s in self.elements if s.omitted)

    def positions(self) -> np.ndarray:
        return np.array([(s.x, s.y) for s in self.elements], dtype=float).reshape(-1, 2)


def generate_lattice(geom: FoldedGeometry) -> ApertureLayout:
    lat = geom.lattice
    if lat.period_p <= 0 or lat.neighbor_spacing <= 0:
        raise LayoutError('lattice period and neighbor spacing must be positive')
    if lat.tile_cols < 1 or lat.tile_rows < 1:
        raise LayoutError(f'tile must hold at least one element, got {lat.tile_cols}x{lat.tile_rows}')

    margin = lat.neighbor_spacing / 2
    rows, cols = np.meshgrid(np.arange(lat.tile_rows), np.arange(lat.tile_cols), indexing='ij')
    tile_x = (margin + lat.period_p * cols + lat.neighbor_spacing * (rows % 2)).ravel()
    tile_y = (margin + lat.neighbor_spacing * rows).ravel()
    half = geom.aperture_d / 2
    if tile_x.max() > half or tile_y.max() > half:
        raise LayoutError(
            f'tile extends to ({tile_x.max()}, {tile_y.max()}) mm, beyond the aperture half-width {half} mm'
        )

    sites: List[Site] = []
    for quadrant, (sx, sy) in QUADRANT_SIGNS.items():
        xs, ys = sx * tile_x, sy * tile_y
        blocked = geom.feed_cutout.distance(xs, ys) < geom.clearance
        if blocked.all():
            raise LayoutError(f'feed cutout swallows every element of quadrant {quadrant}')
        sites.extend(Site(float(x), float(y), quadrant, bool(b)) for x, y, b in zip(xs, ys, blocked))

    sites.sort(key=lambda s: (s.y, s.x))
    layout = ApertureLayout(geom, tuple(sites))
    if layout.omitted_count:
        logger.warning('Feed cutout removes %s of %s lattice sites.', layout.omitted_count, layout.site_count)
    logger.info('Generated %s lattice sites (%s active).', layout.site_count, len(layout.active))
    return layout


def required_phase(x, y, f: FrequencyLike, geom: FoldedGeometry, phase_offset: float = 0.0):
    focal = geom.virtual_focal_f
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    path = np.sqrt(x ** 2 + y ** 2 + focal ** 2) - focal
    return wrap_deg(360.0 / wavelength(f) * path + phase_offset)


@dataclass(frozen=True)
class DesignedElement:
    x: float
    y: float
    quadrant: int
    omitted: bool
    geometry: Optional[CellGeometry] = None
    required_phase: float = 0.0
    achieved_rxy: complex = 0j
    achieved_ryy: complex = 0j
    phase_error: float = 0.0


@dataclass(frozen=True)
class DesignedAperture:
    folded_geometry: FoldedGeometry
    frequency_ghz: float
    phase_offset: float
    elements: Tuple[DesignedElement, ...]
    min_cross_mag: float = DEFAULT_MIN_CROSS_MAG
    provenance: Dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def active(self) -> Tuple[DesignedElement, ...]:
        return tuple(e for e in self.elements if not e.omitted)

    @property
    def layout(self) -> ApertureLayout:
        return ApertureLayout(
            self.folded_geometry,
            tuple(Site(e.x, e.y, e.quadrant, e.omitted) for e in self.elements),
        )

    def positions(self) -> np.ndarray:
        return np.array([(e.x, e.y) for e in self.active], dtype=float).reshape(-1, 2)

    def cross_reflections(self) -> np.ndarray:
        return np.array([e.achieved_rxy for e in self.active], dtype=complex)

    def co_reflections(self) -> np.ndarray:
        return np.array([e.achieved_ryy for e in self.active], dtype=complex)

    def phase_errors(self) -> np.ndarray:
        return np.array([e.phase_error for e in self.active], dtype=float)


@dataclass(frozen=True)
class SynthesisReport:
    active_count: int
    omitted_count: int
    rms_phase_error: float
    max_phase_error: float
    rxy_min: float
    rxy_mean: float
    rxy_max: float
    phase_offset: float
    coverage_deg: Optional[float]
    usage: List[Tuple[float, List[Tuple[CellGeometry, int]]]]

    @property
    def distinct_geometries(self) -> int:
        return sum(len(members) for _, members in self.usage)


def synthesis_report(design: DesignedAperture, coverage_deg: Optional[float] = None) -> SynthesisReport:
    errors = design.phase_errors()
    mags = np.abs(design.cross_reflections())
    empty = errors.size == 0
    return SynthesisReport(
        active_count=len(design.active),
        omitted_count=len(design.elements) - len(design.active),
        rms_phase_error=0.0 if empty else float(np.sqrt(np.mean(errors ** 2))),
        max_phase_error=0.0 if empty else float(np.abs(errors).max()),
        rxy_min=0.0 if empty else float(mags.min()),
        rxy_mean=0.0 if empty else float(mags.mean()),
        rxy_max=0.0 if empty else float(mags.max()),
        phase_offset=design.phase_offset,
        coverage_deg=coverage_deg,
        usage=usage_histogram(e.geometry for e in design.active),
    )


def height_zone_index(xs, ys, geom: FoldedGeometry, height_zones: Sequence[float]) -> np.ndarray:
    """Zone of each site: the number of boundaries its feed path excess exceeds.

    The path excess is ``R - F`` in mm, the extra feed distance to a site
    compared with the aperture centre.
    """
    focal = geom.virtual_focal_f
    excess = np.sqrt(np.asarray(xs, dtype=float) ** 2 + np.asarray(ys, dtype=float) ** 2 + focal ** 2) - focal
    return np.searchsorted(np.asarray(height_zones, dtype=float), excess, side='left')


def synthesize(layout: ApertureLayout, source: PhaseSource, f0: FrequencyLike = 28.0,
               min_cross_mag: float = DEFAULT_MIN_CROSS_MAG, phase_offset: Optional[float] = None,
               require_full_coverage: bool = True,
               height_zones: Optional[Sequence[float]] = None) -> DesignedAperture:
    """Assign a cell to every active site so its cross phase matches the required phase.

    With ``phase_offset=None`` the aperture centre is placed at the middle of
    the source's covered phase interval.

    ``height_zones`` are increasing path-excess boundaries in mm. Zone 0
    (innermost) is drawn from the tallest cell height, each further zone from
    the next shorter one; zones beyond the last height reuse the shortest.
    A source with a single height ignores the zoning.
    """
    f0 = ghz(f0)
    coverage = source.coverage(f0, min_cross_mag)
    if require_full_coverage and coverage < 360.0:
        raise SynthesisError(
            f'phase coverage {coverage:.1f} deg at {f0} GHz is below 360 deg',
            achievable_span_deg=coverage,
        )
    if phase_offset is None:
        phase_offset = source.covered_midpoint(f0, min_cross_mag)
    phase_offset = float(phase_offset)

    geom = layout.geometry
    active = [s for s in layout.elements if not s.omitted]
    xs = np.array([s.x for s in active], dtype=float)
    ys = np.array([s.y for s in active], dtype=float)
    targets = np.atleast_1d(required_phase(xs, ys, f0, geom, phase_offset))
    clipped: List[bool] = []
    if active:
        resolution = _resolve_zoned(source, targets, xs, ys, f0, geom, min_cross_mag,
                                    height_zones, require_full_coverage)
        achieved = np.atleast_1d(phase_deg(resolution.r_xy))
        errors = np.atleast_1d(phase_distance(achieved, targets))
        # a cell whose arms reach into the feed hole is removed whole
        clipped = [
            geom.feed_cutout.overlaps_cell(g, (x, y)) for g, x, y in zip(resolution.geometries, xs, ys)
        ]
        if any(clipped):
            logger.warning('Omitting %s elements whose cells overlap the feed cutout.', sum(clipped))

    designed: List[DesignedElement] = []
    position = 0
    for site in layout.elements:
        if site.omitted:
            designed.append(DesignedElement(site.x, site.y, site.quadrant, True))
            continue
        if clipped[position]:
            designed.append(DesignedElement(site.x, site.y, site.quadrant, True))
            position += 1
            continue
        designed.append(DesignedElement(
            site.x, site.y, site.quadrant, False,
            geometry=resolution.geometries[position],
            required_phase=float(targets[position]),
            achieved_rxy=complex(resolution.r_xy[position]),
            achieved_ryy=complex(resolution.r_yy[position]),
            phase_error=float(errors[position]),
        ))
        position += 1

    design = DesignedAperture(geom, f0, phase_offset, tuple(designed), min_cross_mag)
    report = synthesis_report(design, coverage)
    logger.info(
        'Synthesized %s elements at %s GHz: coverage %.1f deg, rms error %.3f deg, max error %.3f deg.',
        report.active_count, f0, coverage, report.rms_phase_error, report.max_phase_error,
    )
    return design


def _resolve_zoned(source: PhaseSource, targets: np.ndarray, xs: np.ndarray, ys: np.ndarray, f0: float,
                   geom: FoldedGeometry, min_cross_mag: float, height_zones: Optional[Sequence[float]],
                   require_full_coverage: bool) -> Resolution:
    heights = sorted(source.available_heights(f0), reverse=True)
    if not height_zones or len(heights) < 2:
        return source.resolve(targets, f0, min_cross_mag)

    zones = np.minimum(height_zone_index(xs, ys, geom, height_zones), len(heights) - 1)
    geometries: List[Optional[CellGeometry]] = [None] * targets.size
    r_xy = np.zeros(targets.size, dtype=complex)
    r_yy = np.zeros(targets.size, dtype=complex)
    for zone in np.unique(zones):
        height = heights[zone]
        members = np.flatnonzero(zones == zone)
        zone_coverage = source.coverage(f0, min_cross_mag, heights=(height,))
        if require_full_coverage and zone_coverage < 360.0:
            raise SynthesisError(
                f'h_u={height} mm covers only {zone_coverage:.1f} deg at {f0} GHz',
                achievable_span_deg=zone_coverage,
            )
        part = source.resolve(targets[members], f0, min_cross_mag, heights=(height,))
        for slot, index in enumerate(members):
            geometries[index] = part.geometries[slot]
        r_xy[members] = part.r_xy
        r_yy[members] = part.r_yy
        logger.info('Height zone %s: %s elements on h_u=%s mm.', int(zone), members.size, height)
    return Resolution(tuple(geometries), r_xy, r_yy)
