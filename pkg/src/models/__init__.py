from src.models.base import Regressor, RegressorConfig
from src.models.ensembles import (
    GbtConfig,
    GbtModel,
    RfConfig,
    RfModel,
    feature_importance,
    fit_gbt,
    fit_rf,
    predict_gbt,
    predict_rf,
)
from src.models.factory import PredictorFactory
from src.models.mlp import MlpConfig, MlpModel, forward, init_mlp, loss_and_gradients, train_mlp
from src.models.ols import OlsConfig, OlsModel, StepwiseReport, fit_ols, predict_ols, stepwise_select
from src.models.svr import SvrConfig, SvrModel, fit_svr, kernel_eval, kkt_violations, predict_svr
from src.models.trees import RegressionTree, fit_tree

# 注册模型类型
PredictorFactory.register("ols", OlsModel, "raw", "多元线性回归，可选逐步特征选择")
PredictorFactory.register("mlp", MlpModel, "log1p", "多层感知机，小批量 SGD + 动量")
PredictorFactory.register("svr", SvrModel, "log1p", "ε-SVR，SMO 求解")
PredictorFactory.register("rf", RfModel, "raw", "随机森林")
PredictorFactory.register("gbt", GbtModel, "raw", "梯度提升树，支持早停")

MODEL_KINDS = tuple(PredictorFactory.kinds())

__all__ = [
    "MODEL_KINDS",
    "GbtConfig",
    "GbtModel",
    "MlpConfig",
    "MlpModel",
    "OlsConfig",
    "OlsModel",
    "PredictorFactory",
    "RegressionTree",
    "Regressor",
    "RegressorConfig",
    "RfConfig",
    "RfModel",
    "StepwiseReport",
    "SvrConfig",
    "SvrModel",
    "feature_importance",
    "fit_gbt",
    "fit_ols",
    "fit_rf",
    "fit_svr",
    "fit_tree",
    "forward",
    "init_mlp",
    "kernel_eval",
    "kkt_violations",
    "loss_and_gradients",
    "predict_gbt",
    "predict_ols",
    "predict_rf",
    "predict_svr",
    "stepwise_select",
    "train_mlp",
]
