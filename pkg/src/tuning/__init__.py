from src.tuning.cv import ConfigResult, CvReport, grid_search, kfold_split
from src.tuning.grid import DEFAULT_GRIDS, HyperGrid, grid_expand, load_grid
from src.tuning.training import train_predictor

__all__ = [
    "DEFAULT_GRIDS",
    "ConfigResult",
    "CvReport",
    "HyperGrid",
    "grid_expand",
    "grid_search",
    "kfold_split",
    "load_grid",
    "train_predictor",
]
