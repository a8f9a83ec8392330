from src.dataset.records import (
    MEASUREMENT_COLUMNS,
    Dataset,
    MeasurementRecord,
    load_measurements,
    save_measurements,
)
from src.dataset.split import SplitPlan, load_split, make_split, save_split
from src.dataset.standardize import Standardizer, apply, fit_standardizer

__all__ = [
    "MEASUREMENT_COLUMNS",
    "Dataset",
    "MeasurementRecord",
    "SplitPlan",
    "Standardizer",
    "apply",
    "fit_standardizer",
    "load_measurements",
    "load_split",
    "make_split",
    "save_measurements",
    "save_split",
]
