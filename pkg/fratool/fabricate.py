"""Watertight triangle meshes and binary STL for the printed panels.

Every solid is a prism over a planar polygon whose boundary loops run with
the material on their left. Assemblies are multi-shell: the substrate and
each element or strip are separate closed shells, so volumes add.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import AssemblyError, DomainError, MeshError, ToolkitIOError
from .layout import DesignedAperture, FeedCutout
from .polarizer import MpgModel
from .unitcell import EIGEN_AXIS_DEG, CellGeometry

logger = logging.getLogger(__name__)

STL_HEADER = b'fratool binary STL'
STL_DTYPE = np.dtype([
    ('normal', '<f4', (3,)),
    ('vertices', '<f4', (3, 3)),
    ('attribute', '<u2'),
])
MIN_TRIANGLE_AREA = 1e-9


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray

    @classmethod
    def empty(cls) -> 'Mesh':
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])

    def translated(self, offset: Sequence[float]) -> 'Mesh':
        return Mesh(self.vertices + np.asarray(offset, dtype=float), self.triangles)

    def corners(self) -> np.ndarray:
        """(T, 3, 3) triangle vertex coordinates."""
        return self.vertices[self.triangles]

    def normals(self) -> np.ndarray:
        tri = self.corners()
        normal = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        length = np.linalg.norm(normal, axis=1, keepdims=True)
        return np.divide(normal, length, out=np.zeros_like(normal), where=length > 0)


def merge_meshes(meshes: Iterable[Mesh]) -> Mesh:
    vertices, triangles, offset = [], [], 0
    for mesh in meshes:
        vertices.append(mesh.vertices)
        triangles.append(mesh.triangles + offset)
        offset += mesh.vertices.shape[0]
    if not vertices:
        return Mesh.empty()
    return Mesh(np.concatenate(vertices), np.concatenate(triangles))


def prism(loops: Sequence[np.ndarray], top_triangles: np.ndarray, z0: float, z1: float) -> Mesh:
    """Extrude a triangulated polygon between two heights.

    ``loops`` list the boundary loops (material on the left); ``top_triangles``
    index the concatenated loop vertices, counter-clockwise seen from +z.
    """
    if not z1 > z0:
        raise DomainError(f'prism height must be positive, got {z1 - z0!r} mm')
    points = np.concatenate([np.asarray(loop, dtype=float) for loop in loops])
    n = points.shape[0]
    bottom = np.column_stack([points, np.full(n, z0)])
    top = np.column_stack([points, np.full(n, z1)])
    top_triangles = np.asarray(top_triangles, dtype=np.int64)

    faces = [top_triangles + n, top_triangles[:, ::-1]]
    start = 0
    for loop in loops:
        count = len(loop)
        current = start + np.arange(count)
        following = start + (np.arange(count) + 1) % count
        faces.append(np.column_stack([current, following, following + n]))
        faces.append(np.column_stack([current, following + n, current + n]))
        start += count
    return Mesh(np.concatenate([bottom, top]), np.concatenate(faces))


def _rotate(points: np.ndarray, degrees: float) -> np.ndarray:
    angle = math.radians(degrees)
    c, s = math.cos(angle), math.sin(angle)
    return points @ np.array([[c, s], [-s, c]])


def _quads(quads: Iterable[Tuple[int, int, int, int]]) -> np.ndarray:
    return np.array([t for a, b, c, d in quads for t in ((a, b, c), (a, c, d))], dtype=np.int64)


def box(x0: float, x1: float, y0: float, y1: float, z0: float, z1: float) -> Mesh:
    if not (x1 > x0 and y1 > y0):
        raise DomainError('box footprint must have positive extent')
    loop = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    return prism([loop], _quads([(0, 1, 2, 3)]), z0, z1)


def cross_footprint(g: CellGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """Boundary loop and triangulation of the union of the two arms.

    The union of two centred rectangles is either the larger rectangle or
    a twelve-sided cross cut into a centre square and four arms.
    """
    first = (g.l_x / 2, g.w_1 / 2)
    second = (g.w_2 / 2, g.l_y / 2)
    if min(first + second) <= 0:
        raise DomainError('cross arms need positive length and width')
    for outer, inner in ((first, second), (second, first)):
        if inner[0] <= outer[0] and inner[1] <= outer[1]:
            hx, hy = outer
            loop = np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]])
            return loop, _quads([(0, 1, 2, 3)])

    wide, tall = (first, second) if first[0] > second[0] else (second, first)
    wx, wy = wide
    tx, ty = tall
    loop = np.array([
        [wx, -wy], [wx, wy], [tx, wy], [tx, ty], [-tx, ty], [-tx, wy],
        [-wx, wy], [-wx, -wy], [-tx, -wy], [-tx, -ty], [tx, -ty], [tx, -wy],
    ])
    triangles = _quads([
        (11, 0, 1, 2),
        (5, 2, 3, 4),
        (7, 8, 5, 6),
        (9, 10, 11, 8),
        (8, 11, 2, 5),
    ])
    return loop, triangles


def cross_volume(g: CellGeometry) -> float:
    """Inclusion-exclusion volume of the cross."""
    overlap = min(g.l_x, g.w_2) * min(g.w_1, g.l_y)
    return (g.l_x * g.w_1 + g.w_2 * g.l_y - overlap) * g.h_u


def cross_solid(g: CellGeometry, center: Sequence[float] = (0.0, 0.0),
                rotation: float = EIGEN_AXIS_DEG, base_z: float | None = None) -> Mesh:
    loop, triangles = cross_footprint(g)
    loop = _rotate(loop, rotation) + np.asarray(center, dtype=float)
    z0 = g.substrate_h_s if base_z is None else base_z
    return prism([loop], triangles, z0, z0 + g.h_u)


def _zipper(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Triangulate the ring between two convex loops around the origin.

    ``outer`` and ``inner`` are counter-clockwise; indices refer to outer
    vertices followed by inner vertices.
    """
    n, m = len(outer), len(inner)
    reference = math.atan2(outer[0, 1], outer[0, 0])

    def relative(p):
        return (math.atan2(p[1], p[0]) - reference) % (2 * math.pi)

    outer_angle = [relative(p) for p in outer] + [2 * math.pi]
    outer_angle[0] = 0.0
    start = min(range(m), key=lambda j: relative(inner[j]))
    inner_order = [(start + j) % m for j in range(m)] + [start]
    inner_angle = [relative(inner[j]) for j in inner_order[:-1]] + [relative(inner[start]) + 2 * math.pi]

    triangles = []
    i = j = 0
    while i < n or j < m:
        advance_outer = j == m or (i < n and outer_angle[i + 1] <= inner_angle[j + 1])
        a = i % n
        b = n + inner_order[j]
        if advance_outer:
            triangles.append((a, (i + 1) % n, b))
            i += 1
        else:
            triangles.append((n + inner_order[j + 1], b, a))
            j += 1
    return np.array(triangles, dtype=np.int64)


def slab_with_cutout(aperture_d: float, substrate_h_s: float, cutout: FeedCutout) -> Mesh:
    half = aperture_d / 2
    outer = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    inner = cutout.corners()
    triangles = _zipper(outer, inner)
    # hole boundary runs clockwise so the slab stays on its left
    hole = inner[::-1]
    remap = np.arange(8)
    remap[4:] = 4 + (3 - np.arange(4))
    return prism([outer, hole], remap[triangles], 0.0, substrate_h_s)


def assemble_rms_mesh(design: DesignedAperture, substrate_h_s: float | None = None,
                      aperture_d: float | None = None) -> Mesh:
    geom = design.folded_geometry
    aperture_d = geom.aperture_d if aperture_d is None else aperture_d
    if substrate_h_s is None:
        heights = {e.geometry.substrate_h_s for e in design.active}
        substrate_h_s = heights.pop() if len(heights) == 1 else 0.4
    cutout = geom.feed_cutout
    shells = [slab_with_cutout(aperture_d, substrate_h_s, cutout)]
    for index, element in enumerate(design.elements):
        if element.omitted:
            continue
        if cutout.overlaps_cell(element.geometry, (element.x, element.y)):
            raise AssemblyError(f'element {index} at ({element.x}, {element.y}) overlaps the feed cutout')
        shells.append(cross_solid(element.geometry, (element.x, element.y), EIGEN_AXIS_DEG, substrate_h_s))
    mesh = merge_meshes(shells)
    logger.info('Assembled RMS mesh: %s shells, %s triangles.', len(shells), mesh.triangle_count)
    return mesh


def rms_volume(design: DesignedAperture, substrate_h_s: float = 0.4) -> float:
    geom = design.folded_geometry
    slab = (geom.aperture_d ** 2 - geom.feed_cutout.area) * substrate_h_s
    return slab + sum(cross_volume(e.geometry) for e in design.active)


def strip_count(panel_width: float, pitch: float) -> int:
    return int(math.floor(panel_width / pitch + 1e-9)) + 1


def mpg_grid_mesh(mpg: MpgModel, panel: Tuple[float, float] = (180.0, 180.0),
                  substrate_h_s: float = 0.4, strip_h: float = 0.1) -> Mesh:
    """Substrate panel plus strips running along y, centred on the panel."""
    width, length = panel
    if not (width > 0 and length > 0):
        raise DomainError(f'panel must have positive size, got {panel!r}')
    count = strip_count(width, mpg.pitch)
    centers = (np.arange(count) - (count - 1) / 2) * mpg.pitch
    half = mpg.strip_width / 2
    shells = [box(-width / 2, width / 2, -length / 2, length / 2, 0.0, substrate_h_s)]
    shells.extend(
        box(c - half, c + half, -length / 2, length / 2, substrate_h_s, substrate_h_s + strip_h)
        for c in centers
    )
    logger.info('MPG panel %sx%s mm with %s strips.', width, length, count)
    return merge_meshes(shells)


def mesh_volume(mesh: Mesh) -> float:
    tri = mesh.corners()
    return float(np.einsum('ij,ij->i', tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


@dataclass(frozen=True)
class WatertightReport:
    boundary_edges: List[Tuple[int, int]] = field(default_factory=list)
    non_manifold_edges: List[Tuple[int, int]] = field(default_factory=list)
    inconsistent_edges: List[Tuple[int, int]] = field(default_factory=list)
    degenerate_triangles: List[int] = field(default_factory=list)

    @property
    def watertight(self) -> bool:
        return not (self.boundary_edges or self.non_manifold_edges
                    or self.inconsistent_edges or self.degenerate_triangles)


def watertight_check(mesh: Mesh) -> WatertightReport:
    tri = mesh.triangles
    directed = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    undirected = np.sort(directed, axis=1)
    keys, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    forward = (directed[:, 0] < directed[:, 1]).astype(int)
    forward_count = np.bincount(inverse, weights=forward, minlength=len(keys))

    boundary = [tuple(map(int, k)) for k in keys[counts == 1]]
    non_manifold = [tuple(map(int, k)) for k in keys[counts > 2]]
    paired = counts == 2
    inconsistent = [tuple(map(int, k)) for k in keys[paired & (forward_count[:len(keys)] != 1)]]

    corners = mesh.corners()
    area = 0.5 * np.linalg.norm(np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1)
    degenerate = [int(i) for i in np.flatnonzero(area <= MIN_TRIANGLE_AREA)]
    return WatertightReport(boundary, non_manifold, inconsistent, degenerate)


def export_stl_binary(mesh: Mesh, path, force: bool = False, header: str | None = None) -> None:
    """Write little-endian binary STL; ``header`` goes into the 80-byte preamble."""
    report = watertight_check(mesh)
    if not report.watertight and not force:
        raise MeshError(
            f'mesh is not watertight ({len(report.boundary_edges)} boundary, '
            f'{len(report.non_manifold_edges)} non-manifold edges); use --force to export anyway'
        )
    records = np.zeros(mesh.triangle_count, dtype=STL_DTYPE)
    records['normal'] = mesh.normals()
    records['vertices'] = mesh.corners()
    try:
        with open(path, 'wb') as handle:
            preamble = STL_HEADER if header is None else header.encode('ascii', 'replace')
            handle.write(preamble[:80].ljust(80, b'\0'))
            handle.write(np.array([mesh.triangle_count], dtype='<u4').tobytes())
            handle.write(records.tobytes())
    except OSError as exc:
        raise ToolkitIOError(f'cannot write {path}: {exc}') from exc


def load_stl_binary(path) -> Mesh:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ToolkitIOError(f'cannot read {path}: {exc}') from exc
    if len(data) < 84:
        raise MeshError(f'{path} is too short to be a binary STL')
    count = int(np.frombuffer(data, dtype='<u4', count=1, offset=80)[0])
    if len(data) != 84 + count * STL_DTYPE.itemsize:
        raise MeshError(f'{path} declares {count} triangles but holds {len(data) - 84} bytes of records')
    records = np.frombuffer(data, dtype=STL_DTYPE, count=count, offset=84)
    points = records['vertices'].reshape(-1, 3).astype(float)
    vertices, inverse = np.unique(points, axis=0, return_inverse=True)
    return Mesh(vertices, inverse.reshape(-1, 3).astype(np.int64))


def metallization_manifest(design: DesignedAperture | None = None, mpg: MpgModel | None = None,
                           substrate_h_s: float = 0.4, strip_h: float = 0.1,
                           panel: Tuple[float, float] = (180.0, 180.0)) -> List[str]:
    """Face groups to be silver-coated after printing, one per line."""
    lines = []
    if design is not None:
        geom = design.folded_geometry
        area = geom.aperture_d ** 2 - geom.feed_cutout.area
        lines.append(f'rms ground-plane face=substrate-bottom z=0 area_mm2={area:.3f}')
    if mpg is not None:
        count = strip_count(panel[0], mpg.pitch)
        lines.append(
            f'mpg strips count={count} width_mm={mpg.strip_width} pitch_mm={mpg.pitch} '
            f'face=strip-top z={substrate_h_s + strip_h:.3f}'
        )
    return lines
