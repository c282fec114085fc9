"""Sagittal-plane knee and foot motion estimation from a knee-mounted depth camera and IMU."""
from .config import RunConfig
from .dataset import Dataset, load_dataset, write_dataset
from .errors import ProsvioError
from .pipeline import EstimateRecord, Estimator, run, write_outputs

__version__ = "0.1.0"

__all__ = ["Dataset", "EstimateRecord", "Estimator", "ProsvioError", "RunConfig",
           "load_dataset", "run", "write_dataset", "write_outputs"]
