"""
统一异常定义

所有面向用户的错误都继承 LatprophError，CLI 据此区分用户错误（退出码 1）与内部错误（退出码 2）。
"""


class LatprophError(Exception):
    """异常基类，携带可选的定位信息（图层 id、行号、文件等）"""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = {k: v for k, v in context.items() if v is not None}

    def __str__(self):
        if not self.context:
            return self.message
        where = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({where})"


# ============================================================
# 模型图
# ============================================================


class GraphSyntaxError(LatprophError):
    """模型描述文档格式错误"""

    def __init__(self, message: str, line: int | None = None, column: int | None = None, **context):
        super().__init__(message, line=line, column=column, **context)
        self.line = line
        self.column = column


class GraphValidationError(LatprophError):
    """图结构校验失败：重复 id、悬空引用、环、多个 Input 等"""

    def __init__(self, message: str, layer_id: str | None = None, **context):
        super().__init__(message, layer=layer_id, **context)
        self.layer_id = layer_id


class ShapeError(LatprophError):
    """形状推断失败"""

    def __init__(self, message: str, layer_id: str | None = None, shapes: tuple | None = None):
        super().__init__(message, layer=layer_id, shapes=shapes)
        self.layer_id = layer_id
        self.shapes = shapes


class UnknownFeatureError(LatprophError):
    """特征名不在 11 个规范特征之内"""


# ============================================================
# 数据集
# ============================================================


class DataIOError(LatprophError):
    """文件读写失败"""


class SchemaError(LatprophError):
    """CSV 表头或列数不符合约定"""

    def __init__(self, message: str, row: int | None = None, **context):
        super().__init__(message, row=row, **context)
        self.row = row


class InvariantError(LatprophError):
    """记录违反数据不变量（非正时延、重复键等）"""

    def __init__(self, message: str, row: int | None = None, **context):
        super().__init__(message, row=row, **context)
        self.row = row


class InsufficientDiversityError(LatprophError):
    """数据集的家族/变体/输入尺寸不足以构造 NIS/NCV/NCA 划分"""


class EmptyTrainError(LatprophError):
    """训练集为空"""


# ============================================================
# 模型与调参
# ============================================================


class DimensionError(LatprophError):
    """输入维度不匹配"""


class RankDeficientError(LatprophError):
    """设计矩阵列线性相关"""

    def __init__(self, message: str, column: str | int | None = None):
        super().__init__(message, column=column)
        self.column = column


class DegenerateError(LatprophError):
    """退化输入：样本过少、常数目标等"""


class ConfigError(LatprophError):
    """超参数配置非法"""


class DivergenceError(LatprophError):
    """训练损失发散"""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message, epoch=epoch)
        self.epoch = epoch


class EarlyStopWithoutValidError(ConfigError):
    """启用早停但未提供验证集"""


class AllConfigsFailedError(LatprophError):
    """网格中所有配置均训练失败"""


class NoConvergenceWarning(UserWarning):
    """SVR 在 max_iterations 内未满足 KKT 容差"""


class PreconditionError(LatprophError):
    """调用前置条件不满足"""


# ============================================================
# 评估与序列化
# ============================================================


class NonPositiveTargetError(LatprophError):
    """MAPE 的真实值必须为正"""


class EmptySpaceError(LatprophError):
    """评估空间（NIS/NCV/NCA）没有样本"""

    def __init__(self, message: str, space: str | None = None):
        super().__init__(message, space=space)
        self.space = space


class ContainerError(LatprophError):
    """预测器容器无法识别"""


class VersionError(ContainerError):
    """容器格式版本不受支持"""

    def __init__(self, found: int, supported: int):
        super().__init__(f"Predictor container version {found} is newer than supported version {supported}")
        self.found = found
        self.supported = supported


class ChecksumError(ContainerError):
    """容器内容被截断或损坏"""


# ============================================================
# 合成数据
# ============================================================


class GenerationRetryExceeded(LatprophError):
    """构造式生成器多次重试仍未得到合法图（出现即说明存在 bug）"""
