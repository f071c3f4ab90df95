"""Light-field disparity estimation by occlusion-aware iterative refinement."""
from .cost import CostParams
from .io import DatasetBundle, load_hci_bundle, read_pfm, write_outputs, write_pfm
from .lightfield import DiscreteLightField, LFGeometry, OrientationMap
from .metrics import MetricsReport, evaluate
from .refine import AnnealSchedule, Heuristics, refine
from .structure_tensor import init_orientation_map

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "CostParams", "DatasetBundle", "DiscreteLightField",
    "Heuristics", "LFGeometry", "MetricsReport", "OrientationMap",
    "evaluate", "init_orientation_map", "load_hci_bundle", "read_pfm",
    "refine", "write_outputs", "write_pfm",
]
