"""
默认超参数网格

每个模型一张网格（axis 名称 → 候选值列表），均为小规模的示例网格（≤ 300 个配置），
并非对原始实验网格的复原。TOML 中无法表示 None，深度不限用 -1 表示。
"""

DEFAULT_GRID_AXES: dict[str, dict[str, list]] = {
    "ols": {
        "stepwise": [True],
        "stop_delta": [0.0005, 0.002],
    },
    "mlp": {
        "hidden_layers": [[32, 32], [64, 32]],
        "activation": ["relu", "tanh"],
        "learning_rate": [0.01, 0.003],
        "epochs": [300],
        "batch_size": [32],
        "momentum": [0.9],
        "log_target": [True],
    },
    "svr": {
        "kernel": ["rbf", "linear"],
        "gamma": [0.1, 0.5],
        "cost_C": [1.0, 10.0],
        "epsilon": [0.05],
        "log_target": [True],
    },
    "rf": {
        "n_estimators": [60],
        "max_depth": [-1, 16],
        "min_samples_split": [4],
        "min_samples_leaf": [1, 2],
        "max_features": [4, 11],
        "log_target": [True],
    },
    "gbt": {
        "n_rounds": [400],
        "learning_rate": [0.1, 0.3],
        "max_depth": [4, 6],
        "min_samples_leaf": [1],
        "lambda_reg": [1.0],
        "subsample": [0.8],
        "early_stopping_rounds": [25],
        "log_target": [True],
    },
}
