"""
错误类型
所有数值模块抛出的异常都继承自 LabError，外层（命令、场景）统一捕获
"""


class LabError(Exception):
    """实验室异常基类"""


class DimensionError(LabError):
    """点或测度的维数不一致"""


class DomainError(LabError):
    """参数超出定义域（如 t<0、p<1）"""


class PreconditionError(LabError):
    """调用前置条件不满足"""


class UnsupportedField(LabError):
    """该标量场没有可用的解析负梯度射线"""


class EmptyCollection(LabError):
    """集合为空（场列表、H_n 等）"""


class InvalidWeight(LabError):
    """权重为负或不可解析"""


class NotNormalized(LabError):
    """权重之和偏离 1 超过容差"""


class EmptyMeasure(LabError):
    """测度没有支撑点"""


class MapRangeError(LabError):
    """推前映射产生了非有限坐标"""


class SolverStalled(LabError):
    """单纯形迭代超过上限"""


class InstanceTooLarge(LabError):
    """穷举规模超出上限"""


class DegeneratePath(LabError):
    """测地线长度为 0"""


class NumericalInconsistency(LabError):
    """数值结果违反应当成立的单调性"""


class SphereSamplingFailed(LabError):
    """预算内没有采到落在球面带内的候选"""


class SequenceTooClose(LabError):
    """序列中的测度离基点不足 sigma"""


class NoUsablePairs(LabError):
    """所有测度对都退化（距离过小）"""


class InvalidRay(LabError):
    """射线没有通过校准检查"""


class ParseError(LabError):
    """JSON 结构不符合约定格式"""


class IoError(LabError):
    """报告写入失败"""


class InvalidMeasure(LabError):
    """文件中第 index 个测度不合法"""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DescentStalled(LabError):
    """贪心下降在第 step 步找不到可接受的候选"""

    def __init__(self, message, step, best_gap, polyline=None):
        super().__init__(message)
        self.step = step
        self.best_gap = best_gap
        self.polyline = polyline
