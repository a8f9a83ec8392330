"""
默认设备画像

合成时延规律的系数（单位 ms）。两个画像分别模拟较快的 AGX 级设备与较慢的 TX2 级设备，
hardware 字段仅作为不透明元数据记录，不参与计算。
"""

DEFAULT_DEVICE_PROFILES: dict[str, dict] = {
    "agx-like": {
        "name": "agx-like",
        "flops_coef": 2.2e-9,
        "activation_coef": 1.1e-7,
        "neuron_coef": 2.0e-11,
        "param_coef": 4.0e-8,
        "layer_coef": 0.035,
        "cross_coef": 6.0e-9,
        "noise_cv": 0.05,
        "hardware": {
            "gpu": "512-core Volta, 64 tensor cores",
            "cpu": "8-core ARM v8.2 64-bit",
            "memory": "32 GB LPDDR4x, 137 GB/s",
        },
    },
    "tx2-like": {
        "name": "tx2-like",
        "flops_coef": 6.5e-9,
        "activation_coef": 3.0e-7,
        "neuron_coef": 5.0e-11,
        "param_coef": 1.1e-7,
        "layer_coef": 0.08,
        "cross_coef": 1.5e-8,
        "noise_cv": 0.05,
        "hardware": {
            "gpu": "256-core Pascal",
            "cpu": "dual Denver 2 + quad ARM A57",
            "memory": "8 GB LPDDR4, 59.7 GB/s",
        },
    },
}
