"""
Spatial scan orders for patch grids.
"""

from .hilbert import hilbert_matrix, hilbert_path, is_four_connected
from .orders import (
    Corner,
    Progression,
    Rotation,
    ScanDirection,
    ScanGrid,
    ScanOrder,
    center_hilbert_order,
    circular_hilbert_order,
    circular_ring_order,
    enumerate_directions,
    format_visit_matrix,
    scan_order_stack,
    visit_matrix,
)

__all__ = [
    "Corner",
    "Progression",
    "Rotation",
    "ScanDirection",
    "ScanGrid",
    "ScanOrder",
    "center_hilbert_order",
    "circular_hilbert_order",
    "circular_ring_order",
    "enumerate_directions",
    "format_visit_matrix",
    "hilbert_matrix",
    "hilbert_path",
    "is_four_connected",
    "scan_order_stack",
    "visit_matrix",
]
