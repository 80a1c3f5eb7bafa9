from __future__ import annotations

from collections import Counter
from typing import Iterable, List, Tuple

from ..unitcell import CellGeometry


def group_by_height(geometries: Iterable[CellGeometry]) -> List[Tuple[float, List[CellGeometry]]]:
    grouped: List[Tuple[float, List[CellGeometry]]] = []
    current_height: float | None = None
    bucket: List[CellGeometry] = []
    for geometry in sorted(geometries, key=lambda g: g.key[2:] + g.key[:2]):
        if geometry.h_u != current_height:
            if bucket:
                grouped.append((current_height, bucket))
            current_height = geometry.h_u
            bucket = []
        bucket.append(geometry)
    if bucket:
        grouped.append((current_height, bucket))
    return grouped


def usage_histogram(geometries: Iterable[CellGeometry]) -> List[Tuple[float, List[Tuple[CellGeometry, int]]]]:
    """Distinct geometries and how often each is placed, grouped by cell height."""
    histogram = []
    for height, members in group_by_height(geometries):
        counts = Counter(members)
        histogram.append((height, sorted(counts.items(), key=lambda item: item[0].key)))
    return histogram
