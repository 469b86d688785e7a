"""
Selective state-space kernels, SPSS blocks and the decoder.
"""

from .bench import format_csv, scan_runtime_benchmark
from .decoder import SPSSDecoder
from .kernels import discretize, linear_recurrence, selective_scan_parallel, selective_scan_sequential
from .ops import SelectiveScan, selective_scan
from .spss import SPSSBlock

__all__ = [
    "SPSSBlock",
    "SPSSDecoder",
    "SelectiveScan",
    "discretize",
    "format_csv",
    "linear_recurrence",
    "scan_runtime_benchmark",
    "selective_scan",
    "selective_scan_parallel",
    "selective_scan_sequential",
]
