"""
欧氏基空间 R^d
点、直线测地线、射线，以及几类解析已知的基空间粘性解（Busemann 场及其最小值）
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import DimensionError, DomainError, EmptyCollection, NoUsablePairs, UnsupportedField

UNIT_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


def as_point(coords) -> np.ndarray:
    """把坐标转换为一维浮点数组并检查有限性"""
    x = np.atleast_1d(np.asarray(coords, dtype=float))
    if x.ndim != 1 or x.size == 0:
        raise DimensionError(f"点必须是非空一维向量，收到形状 {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"点坐标必须有限: {x}")
    return x


def as_unit_vector(direction) -> np.ndarray:
    """
    单位向量：范数偏离 1 不超过 1e-9 时自动归一化，否则拒绝
    """
    v = as_point(direction)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > RENORMALIZE_TOL:
        raise DomainError(f"方向向量范数为 {norm}，不是单位向量")
    if abs(norm - 1.0) > 0.0:
        v = v / norm
    return v


def _check_same_dim(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionError(f"维数不一致: {a.shape} 与 {b.shape}")


@dataclass(frozen=True, eq=False)
class BaseRay:
    """基空间中的射线 t -> origin + t*speed*direction"""

    origin: np.ndarray
    direction: np.ndarray
    speed: float = 1.0

    def __post_init__(self):
        origin = as_point(self.origin)
        direction = as_unit_vector(self.direction)
        _check_same_dim(origin, direction)
        if not self.speed > 0:
            raise DomainError(f"射线速度必须为正: {self.speed}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "speed", float(self.speed))

    @property
    def dim(self) -> int:
        return self.origin.size

    def to_dict(self):
        return {"origin": self.origin.tolist(), "direction": self.direction.tolist(), "speed": self.speed}


def base_geodesic_eval(a, b, t: float) -> np.ndarray:
    """线段测地线 (1-t)a + tb"""
    a, b = as_point(a), as_point(b)
    _check_same_dim(a, b)
    if t < 0.0 or t > 1.0:
        raise DomainError(f"测地线参数 t 必须在 [0,1] 内: {t}")
    return (1.0 - t) * a + t * b


def ray_eval(ray: BaseRay, t: float) -> np.ndarray:
    if t < 0:
        raise DomainError(f"射线参数 t 必须非负: {t}")
    return ray.origin + (t * ray.speed) * ray.direction


class BaseScalarField:
    """
    基空间上的 1-Lipschitz 标量场
    子类实现 evaluate；有解析负梯度射线的子类实现 negative_gradient_ray
    """

    kind = "field"
    dim: Optional[int] = None
    lipschitz = 1.0
    has_ray = False

    def evaluate(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """对 (n,d) 点阵逐行求值"""
        return np.array([self.evaluate(x) for x in points], dtype=float)

    def negative_gradient_ray(self, x: np.ndarray) -> BaseRay:
        raise UnsupportedField(f"{self.kind} 场没有注册的射线生成器")

    def check_point(self, x) -> np.ndarray:
        x = as_point(x)
        if self.dim is not None and x.size != self.dim:
            raise DimensionError(f"{self.kind} 场维数为 {self.dim}，点维数为 {x.size}")
        return x

    def to_dict(self):
        return {"type": self.kind}


class BusemannField(BaseScalarField):
    """u(x) = -<x,v> + c"""

    kind = "busemann"
    has_ray = True

    def __init__(self, direction, offset: float = 0.0):
        self.direction = as_unit_vector(direction)
        self.offset = float(offset)
        self.dim = self.direction.size

    def evaluate(self, x) -> float:
        x = self.check_point(x)
        return -float(np.dot(x, self.direction)) + self.offset

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return -(np.asarray(points, dtype=float) @ self.direction) + self.offset

    def negative_gradient_ray(self, x) -> BaseRay:
        # 最速下降方向恒为 +v
        return BaseRay(self.check_point(x), self.direction, 1.0)

    def to_dict(self):
        return {"type": self.kind, "direction": self.direction.tolist(), "offset": self.offset}


class MinOfFields(BaseScalarField):
    """逐点最小值 min_k u_k(x)"""

    kind = "min"

    def __init__(self, fields: Sequence[BaseScalarField]):
        if not fields:
            raise EmptyCollection("min_combine 需要至少一个场")
        dims = {f.dim for f in fields if f.dim is not None}
        if len(dims) > 1:
            raise DimensionError(f"成员场维数不一致: {sorted(dims)}")
        self.fields = list(fields)
        self.dim = dims.pop() if dims else None
        self.lipschitz = max(f.lipschitz for f in self.fields)
        self.has_ray = all(f.has_ray for f in self.fields)

    def member_values(self, x) -> np.ndarray:
        x = self.check_point(x)
        return np.array([f.evaluate(x) for f in self.fields], dtype=float)

    def evaluate(self, x) -> float:
        return float(np.min(self.member_values(x)))

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        values = np.vstack([f.evaluate_many(points) for f in self.fields])
        return values.min(axis=0)

    def negative_gradient_ray(self, x) -> BaseRay:
        # 平局时取下标最小的成员
        index = int(np.argmin(self.member_values(x)))
        return self.fields[index].negative_gradient_ray(x)

    def to_dict(self):
        return {"type": self.kind, "fields": [f.to_dict() for f in self.fields]}


class DistanceToPoints(BaseScalarField):
    """u(x) = sign * min_k |x - a_k|"""

    kind = "distance"

    def __init__(self, points, sign: int = 1):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 0:
            raise EmptyCollection("DistanceTo 需要至少一个点")
        if sign not in (1, -1):
            raise DomainError(f"sign 只能是 +1 或 -1: {sign}")
        self.points = pts
        self.sign = int(sign)
        self.dim = pts.shape[1]

    def evaluate(self, x) -> float:
        x = self.check_point(x)
        return self.sign * float(np.min(np.linalg.norm(self.points - x, axis=1)))

    def to_dict(self):
        return {"type": self.kind, "points": self.points.tolist(), "sign": self.sign}


class CustomField(BaseScalarField):
    """自定义求值函数，Lipschitz 常数由调用方声明"""

    kind = "custom"

    def __init__(self, evaluator: Callable[[np.ndarray], float], lipschitz: float = 1.0,
                 dim: Optional[int] = None, ray_generator: Optional[Callable[[np.ndarray], BaseRay]] = None,
                 name: str = "custom"):
        self.evaluator = evaluator
        self.lipschitz = float(lipschitz)
        self.dim = dim
        self.ray_generator = ray_generator
        self.has_ray = ray_generator is not None
        self.name = name

    def evaluate(self, x) -> float:
        return float(self.evaluator(self.check_point(x)))

    def negative_gradient_ray(self, x) -> BaseRay:
        if self.ray_generator is None:
            raise UnsupportedField(f"自定义场 {self.name} 没有注册的射线生成器")
        return self.ray_generator(self.check_point(x))

    def to_dict(self):
        return {"type": self.kind, "name": self.name, "lipschitz": self.lipschitz}


def eval_base_field(u: BaseScalarField, x) -> float:
    return u.evaluate(x)


def base_negative_gradient_ray(u: BaseScalarField, x) -> BaseRay:
    return u.negative_gradient_ray(x)


def min_combine(fields: Sequence[BaseScalarField]) -> BaseScalarField:
    if not fields:
        raise EmptyCollection("min_combine 需要至少一个场")
    if len(fields) == 1:
        return fields[0]
    return MinOfFields(fields)


def custom_field(evaluator, lipschitz: float = 1.0, dim: Optional[int] = None, ray_generator=None,
                 name: str = "custom") -> CustomField:
    return CustomField(evaluator, lipschitz, dim, ray_generator, name)


def kinked_field() -> CustomField:
    """
    一维折线场：x<=0 时为 0，x>0 时为 -x
    全局斜率处处为 1，但在 x<0 处局部斜率为 0，因此不是粘性解
    """
    return CustomField(lambda x: min(0.0, -float(x[0])), lipschitz=1.0, dim=1, name="kinked")


def base_lipschitz_ratio(u: BaseScalarField, pairs) -> float:
    """max |u(x)-u(y)| / |x-y|，距离过小的点对跳过"""
    best = None
    for x, y in pairs:
        x, y = as_point(x), as_point(y)
        dist = float(np.linalg.norm(x - y))
        if dist <= 1e-10:
            continue
        ratio = abs(u.evaluate(x) - u.evaluate(y)) / dist
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise NoUsablePairs("所有点对距离都小于 1e-10")
    return best


def field_from_config(config: dict) -> BaseScalarField:
    """
    从 JSON 配置构造基空间场
    Args:
        config: {"type": "busemann"|"min"|"distance", ...}
    """
    kind = config.get("type")
    if kind == "busemann":
        return BusemannField(config["direction"], config.get("offset", 0.0))
    if kind == "min":
        return min_combine([field_from_config(c) for c in config.get("fields", [])])
    if kind == "distance":
        return DistanceToPoints(config["points"], config.get("sign", 1))
    if kind == "kinked":
        return kinked_field()
    logging.error(f"[Config] 未知的场类型: {kind}")
    raise UnsupportedField(f"未知的场类型: {kind}")
