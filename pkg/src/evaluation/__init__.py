from src.evaluation.metrics import adjusted_r2, ape, mape, mape_ci95, r2

__all__ = ["adjusted_r2", "ape", "mape", "mape_ci95", "r2"]
