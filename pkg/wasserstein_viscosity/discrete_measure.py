"""
R^d 上的有限支撑概率测度（稠密类 D）
构造时校验、合并重复支撑点、剔除零权重
"""

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .base_space import as_point
from .errors import (DimensionError, DomainError, EmptyCollection, EmptyMeasure, InvalidWeight,
                     MapRangeError, NotNormalized, ParseError)

MERGE_TOL = 1e-12
PRUNE_TOL = 1e-15
SUM_TOL = 1e-9
EXACT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """sum_i w_i delta_{x_i}；请通过 validate_measure 构造"""

    support: np.ndarray
    weights: np.ndarray

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    @property
    def size(self) -> int:
        return self.support.shape[0]

    def atoms(self):
        """按坐标字典序排列的 (点, 权重) 列表，用于比较"""
        order = np.lexsort(self.support.T[::-1])
        return [(tuple(self.support[i]), float(self.weights[i])) for i in order]

    def key(self) -> bytes:
        """精确的字节键，用于缓存"""
        return self.support.tobytes() + b"|" + self.weights.tobytes()

    def to_dict(self):
        return measure_to_json(self)

    def __repr__(self):
        atoms = ", ".join(f"{w:.6g}@{list(np.round(x, 6))}" for x, w in zip(self.support, self.weights))
        return f"DiscreteMeasure({atoms})"


def _merge_atoms(support: np.ndarray, weights: np.ndarray):
    kept_points, kept_weights = [], []
    for x, w in zip(support, weights):
        for k, y in enumerate(kept_points):
            if np.linalg.norm(x - y) <= MERGE_TOL:
                kept_weights[k] += w
                break
        else:
            kept_points.append(x)
            kept_weights.append(float(w))
    return np.array(kept_points, dtype=float), np.array(kept_weights, dtype=float)


def validate_measure(support, weights) -> DiscreteMeasure:
    """
    校验并规范化原始支撑点与权重
    Args:
        support: (n,d) 坐标；一维列表按 d=1 处理
        weights: 长度为 n 的非负权重
    Returns:
        DiscreteMeasure: 合并重复点、剔除极小权重、必要时重新归一化后的测度
    """
    points = np.asarray(support, dtype=float)
    if points.size == 0:
        raise EmptyMeasure("测度支撑为空")
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.ndim != 2:
        raise DimensionError(f"支撑点必须是 (n,d) 矩阵，收到形状 {points.shape}")
    if not np.all(np.isfinite(points)):
        raise DomainError("支撑点坐标必须有限")
    try:
        w = np.asarray(weights, dtype=float).reshape(-1)
    except (TypeError, ValueError) as e:
        raise InvalidWeight(f"权重无法解析: {e}")
    if w.size != points.shape[0]:
        raise DimensionError(f"支撑点 {points.shape[0]} 个，权重 {w.size} 个")
    if not np.all(np.isfinite(w)):
        raise InvalidWeight("权重必须有限")
    if np.any(w < 0):
        raise InvalidWeight(f"存在负权重: {w[w < 0].tolist()}")

    total = float(np.sum(w))
    if abs(total - 1.0) > SUM_TOL:
        raise NotNormalized(f"权重之和为 {total!r}，偏离 1 超过 {SUM_TOL}")

    points, w = _merge_atoms(points, w)
    keep = w >= PRUNE_TOL
    if not np.any(keep):
        raise EmptyMeasure("剔除零权重后测度为空")
    points, w = points[keep], w[keep]

    total = float(np.sum(w))
    if abs(total - 1.0) > EXACT_SUM_TOL:
        logging.warning(f"[Measure] 权重之和为 {total!r}，已重新归一化")
        w = w / total
    return DiscreteMeasure(points, w)


def dirac(x) -> DiscreteMeasure:
    x = as_point(x)
    return DiscreteMeasure(x.reshape(1, -1), np.array([1.0]))


def mean(m: DiscreteMeasure) -> np.ndarray:
    return m.weights @ m.support


def p_moment(m: DiscreteMeasure, p: float, x0) -> float:
    """sum_i w_i |x_i - x0|^p"""
    if p < 1:
        raise DomainError(f"p 必须不小于 1: {p}")
    x0 = as_point(x0)
    if x0.size != m.dim:
        raise DimensionError(f"参考点维数 {x0.size} 与测度维数 {m.dim} 不一致")
    dists = np.linalg.norm(m.support - x0, axis=1)
    return float(m.weights @ dists ** p)


def push_forward(m: DiscreteMeasure, f: Callable[[np.ndarray], np.ndarray]) -> DiscreteMeasure:
    """f_# m：逐点映射支撑，权重不变，再合并校验"""
    images = np.array([np.atleast_1d(np.asarray(f(x), dtype=float)) for x in m.support])
    if not np.all(np.isfinite(images)):
        raise MapRangeError("推前映射产生了非有限坐标")
    return validate_measure(images, m.weights)


def translate(m: DiscreteMeasure, v) -> DiscreteMeasure:
    v = as_point(v)
    if v.size != m.dim:
        raise DimensionError(f"平移向量维数 {v.size} 与测度维数 {m.dim} 不一致")
    return DiscreteMeasure(m.support + v, m.weights.copy())


def escaping_mixture(n: int, p: float = 2.0) -> DiscreteMeasure:
    """(1-1/n^p) delta_0 + (1/n^p) delta_{n^2}，n=1 时退化为 delta_1"""
    tail = 1.0 / float(n) ** p
    return validate_measure([[0.0], [float(n) ** 2]], [1.0 - tail, tail])


def measure_to_json(m: DiscreteMeasure) -> dict:
    return {"dim": m.dim, "support": m.support.tolist(), "weights": m.weights.tolist()}


def measure_from_json(data: dict) -> DiscreteMeasure:
    """按 {"dim": d, "support": [...], "weights": [...]} 格式解析"""
    if not isinstance(data, dict):
        raise ParseError(f"测度必须是 JSON 对象，收到 {type(data).__name__}")
    for key in ("support", "weights"):
        if key not in data:
            raise ParseError(f"测度缺少字段 '{key}'")
    m = validate_measure(data["support"], data["weights"])
    if "dim" in data and int(data["dim"]) != m.dim:
        raise ParseError(f"dim 字段为 {data['dim']}，但支撑点维数为 {m.dim}")
    return m


@dataclass(frozen=True)
class MeasureSetSequence:
    """按下标惰性生成的集合序列 H_n 与平移量 c_n"""

    generator: Callable[[int], List[DiscreteMeasure]]
    shifts: Callable[[int], float]

    def sets(self, n: int) -> List[DiscreteMeasure]:
        members = list(self.generator(n))
        if not members:
            raise EmptyCollection(f"H_{n} 为空")
        return members

    def shift(self, n: int) -> float:
        return float(self.shifts(n))
