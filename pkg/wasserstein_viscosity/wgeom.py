"""
Wasserstein 空间几何
位移插值测地线、射线、截断极限形式的 Busemann 函数、球面采样、(CS) 条件诊断、dl_C 极限
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .base_space import BaseRay, as_point, as_unit_vector, ray_eval
from .discrete_measure import DiscreteMeasure, MeasureSetSequence, dirac, translate, validate_measure
from .errors import (DegeneratePath, DomainError, InvalidRay, NumericalInconsistency, PreconditionError,
                     SequenceTooClose, SphereSamplingFailed)
from .ot_exact import Coupling, wasserstein_distance, wasserstein_exact

GEODESIC_TOL = 1e-8
MONOTONE_TOL = 1e-9
BUSEMANN_LIMITATION = "倍增增量只约束观测到的增量，不约束未观测的尾部"


@dataclass(frozen=True, eq=False)
class WassersteinPath:
    """由最优耦合给出的单位速度测地线 t in [0, length]"""

    source: DiscreteMeasure
    target: DiscreteMeasure
    coupling: Coupling
    p: float
    length: float
    degenerate: bool = False
    non_unique: bool = False

    def eval(self, t: float) -> DiscreteMeasure:
        return path_eval(self, t)

    def check_geodesic(self, pairs: Sequence[Tuple[float, float]]) -> float:
        """max |W_p(eval(s), eval(t)) - |t-s||"""
        worst = 0.0
        for s, t in pairs:
            dist = wasserstein_distance(self.eval(s), self.eval(t), self.p)
            worst = max(worst, abs(dist - abs(t - s)))
        return worst


def displacement_path(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0, strict: bool = False) -> WassersteinPath:
    """
    位移插值：耦合中的每一对原子沿线段匀速移动
    Args:
        strict: 为 True 时长度为 0 抛出 DegeneratePath，否则返回带标记的常值路径
    """
    result = wasserstein_exact(mu, nu, p)
    non_unique = p == 1
    if non_unique:
        logging.warning("[Geodesic] p=1 时位移插值仍是测地线但不唯一")
    if result.value == 0.0:
        if strict:
            raise DegeneratePath("起点与终点重合，测地线长度为 0")
        logging.warning("[Geodesic] 测地线长度为 0，返回常值路径")
        return WassersteinPath(mu, nu, result.plan, float(p), 0.0, degenerate=True, non_unique=non_unique)
    return WassersteinPath(mu, nu, result.plan, float(p), result.value, non_unique=non_unique)


def path_eval(path: WassersteinPath, t: float) -> DiscreteMeasure:
    slack = 1e-12 * max(1.0, path.length)
    if t < 0 or t > path.length + slack:
        raise DomainError(f"t={t} 不在 [0, {path.length}] 内")
    if path.degenerate:
        return path.source
    s = min(t / path.length, 1.0)
    src, dst = path.source.support, path.target.support
    points = np.array([(1.0 - s) * src[i] + s * dst[j] for i, j, _ in path.coupling.entries])
    masses = np.array([mass for _, _, mass in path.coupling.entries])
    return validate_measure(points, masses)


@dataclass(frozen=True, eq=False)
class WassersteinRay:
    """
    gamma(t) = sum_i lambda_i delta_{gamma^i(t)}，每个原子沿各自的单位速度射线运动
    构造时用求解器检查 W_p(gamma(s), gamma(t)) = |t-s|；trusted 只留给按构造即为单位速度的射线（平移射线、提升射线）
    """

    base: DiscreteMeasure
    rays: Tuple[BaseRay, ...]
    p: float = 2.0
    trusted: bool = field(default=False, repr=False)

    def __post_init__(self):
        if len(self.rays) != self.base.size:
            raise PreconditionError(f"射线数 {len(self.rays)} 与原子数 {self.base.size} 不一致")
        for ray, x in zip(self.rays, self.base.support):
            if abs(ray.speed - 1.0) > 1e-12:
                raise InvalidRay(f"原子射线必须是单位速度，收到 {ray.speed}")
            if np.linalg.norm(ray.origin - x) > 1e-12:
                raise InvalidRay("原子射线的起点必须是对应的支撑点")
        if not self.trusted:
            err = self.verify_unit_speed()
            if err > GEODESIC_TOL:
                raise InvalidRay(f"射线不是单位速度：误差 {err:.3e}")

    def eval(self, t: float) -> DiscreteMeasure:
        if t < 0:
            raise DomainError(f"射线参数 t 必须非负: {t}")
        points = np.array([ray_eval(ray, t) for ray in self.rays])
        return validate_measure(points, self.base.weights)

    def verify_unit_speed(self, times: Sequence[float] = (0.0, 1.0, 5.0, 10.0)) -> float:
        """用求解器检查 W_p(eval(s), eval(t)) = |t-s|，返回最大误差"""
        worst = 0.0
        samples = [self.eval(t) for t in times]
        for a in range(len(times)):
            for b in range(a + 1, len(times)):
                dist = wasserstein_distance(samples[a], samples[b], self.p)
                worst = max(worst, abs(dist - abs(times[b] - times[a])))
        return worst

    def to_dict(self):
        return {"p": self.p, "weights": self.base.weights.tolist(), "rays": [r.to_dict() for r in self.rays]}


def make_ray(base: DiscreteMeasure, rays: Sequence[BaseRay], p: float = 2.0) -> WassersteinRay:
    """由任意原子射线组装，构造时做单位速度认证"""
    return WassersteinRay(base, tuple(rays), float(p))


def translation_ray(omega: DiscreteMeasure, direction, p: float = 2.0) -> WassersteinRay:
    """所有原子沿同一方向平移"""
    v = as_unit_vector(direction)
    return WassersteinRay(omega, tuple(BaseRay(x, v, 1.0) for x in omega.support), float(p), trusted=True)


def dirac_ray(direction, origin=None, p: float = 2.0) -> WassersteinRay:
    """gamma(t) = delta_{x0 + t v}"""
    v = as_unit_vector(direction)
    x0 = np.zeros_like(v) if origin is None else as_point(origin)
    return translation_ray(dirac(x0), v, p)


@dataclass
class BusemannEstimate:
    value: float
    truncation: float
    tail_gap: float
    converged: bool
    last_sample: float
    extrapolated: float
    samples: List[Tuple[float, float]] = field(default_factory=list)
    limitation: str = BUSEMANN_LIMITATION

    def to_dict(self):
        return {
            "value": self.value,
            "truncation": self.truncation,
            "tail_gap": self.tail_gap,
            "converged": self.converged,
            "last_sample": self.last_sample,
            "extrapolated": self.extrapolated,
            "trace": [[t, g] for t, g in self.samples],
            "limitation": self.limitation,
        }


def doubling_schedule(first: float, last: float) -> List[float]:
    """first, 2*first, 4*first, ...，不超过 last；last 本身总是最后一项"""
    points = []
    t = float(first)
    while t < last:
        points.append(t)
        t *= 2.0
    points.append(float(last))
    return points


def busemann_estimate(ray: WassersteinRay, omega: DiscreteMeasure, tol: float = 1e-6, t_max: float = 1e6,
                      extrapolate: bool = True) -> BusemannEstimate:
    """
    b_gamma(omega) = lim [W_p(omega, gamma(t)) - t]
    按 t = 1, 2, 4, ... 采样直到相邻增量不超过 tol 或到达 t_max
    g(t) 单调不增（三角不等式），违反时说明求解器有问题
    """
    if tol <= 0:
        raise DomainError(f"tol 必须为正: {tol}")
    if t_max < 1:
        raise DomainError(f"t_max 必须不小于 1: {t_max}")
    samples: List[Tuple[float, float]] = []
    converged = False
    for t in doubling_schedule(1.0, t_max):
        g = wasserstein_distance(omega, ray.eval(t), ray.p) - t
        if samples:
            g_prev = samples[-1][1]
            if g > g_prev + MONOTONE_TOL:
                raise NumericalInconsistency(f"Busemann 采样在 t={t} 处上升: {g_prev!r} -> {g!r}")
            samples.append((t, g))
            if abs(g - g_prev) <= tol:
                converged = True
                break
        else:
            samples.append((t, g))

    last_t, last_g = samples[-1]
    if len(samples) >= 2:
        prev_t, prev_g = samples[-2]
        tail_gap = abs(last_g - prev_g)
        # 尾部按 C/t 衰减时的 Richardson 外推
        extrapolated = (last_t * last_g - prev_t * prev_g) / (last_t - prev_t)
    else:
        tail_gap = float("inf")
        extrapolated = last_g
    if not converged:
        logging.debug(f"[Geodesic] Busemann 估计在 t={last_t} 未收敛，增量 {tail_gap:.3e}")
    return BusemannEstimate(
        value=extrapolated if extrapolate else last_g,
        truncation=last_t,
        tail_gap=tail_gap,
        converged=converged,
        last_sample=last_g,
        extrapolated=extrapolated,
        samples=samples,
    )


@dataclass
class SphereSample:
    measure: DiscreteMeasure
    distance: float
    strategy: str


SPHERE_STRATEGIES = ("translate", "atom", "path")


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    while np.linalg.norm(v) < 1e-12:
        v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _in_band(dist: float, r: float, band: Tuple[float, float]) -> bool:
    return band[0] * r <= dist <= band[1] * r


def sphere_sample(omega: DiscreteMeasure, r: float, p: float = 2.0, budget: int = 12,
                  rng: Optional[np.random.Generator] = None, strategies: Sequence[str] = SPHERE_STRATEGIES,
                  dictionary: Optional[Sequence[DiscreteMeasure]] = None,
                  band: Tuple[float, float] = (0.9, 1.1)) -> List[SphereSample]:
    """
    在 dB_r(omega) 附近生成候选测度，每个候选带求解器认证的精确距离
    策略: translate 整体平移 / atom 单原子位移 / path 沿到字典测度的测地线走 r
    """
    if r <= 0:
        raise DomainError(f"半径必须为正: {r}")
    if budget < 1:
        raise DomainError(f"budget 必须不小于 1: {budget}")
    rng = rng if rng is not None else np.random.default_rng(0)
    found: List[SphereSample] = []
    for attempt in range(budget):
        strategy = strategies[attempt % len(strategies)]
        candidate = None
        if strategy == "translate":
            candidate = translate(omega, r * _random_unit(rng, omega.dim))
        elif strategy == "atom":
            i = int(rng.integers(omega.size))
            direction = _random_unit(rng, omega.dim)
            step = r / omega.weights[i] ** (1.0 / p)
            for _ in range(3):
                support = omega.support.copy()
                support[i] = support[i] + step * direction
                candidate = validate_measure(support, omega.weights)
                dist = wasserstein_distance(omega, candidate, p)
                if _in_band(dist, r, band) or dist <= 0:
                    break
                step *= r / dist
        elif strategy == "path":
            if dictionary:
                target = dictionary[int(rng.integers(len(dictionary)))]
            else:
                shift = 3.0 * r * _random_unit(rng, omega.dim)
                target = validate_measure(omega.support + shift + rng.normal(scale=r, size=omega.support.shape),
                                          omega.weights)
            path = displacement_path(omega, target, p)
            if path.length >= r:
                candidate = path.eval(r)
        else:
            raise DomainError(f"未知的采样策略: {strategy}")
        if candidate is None:
            continue
        dist = wasserstein_distance(omega, candidate, p)
        if _in_band(dist, r, band):
            found.append(SphereSample(candidate, dist, strategy))
    if not found:
        logging.warning(f"[Geodesic] 半径 {r} 的球面采样在 {budget} 次尝试后失败")
        raise SphereSamplingFailed(f"半径 {r} 处没有落在 [{band[0]}r, {band[1]}r] 的候选")
    return found


@dataclass
class CsReport:
    verdict: str
    params: dict
    matrix: List[List[float]]
    min_offdiag: float
    best_cluster: int
    heuristic: bool = True

    def to_dict(self):
        return {
            "op": "cs_diagnostic",
            "verdict": self.verdict,
            "heuristic": self.heuristic,
            "params": self.params,
            "min_offdiag": self.min_offdiag,
            "best_cluster": self.best_cluster,
            "matrix": self.matrix,
        }


def cs_diagnostic(seq: Callable[[int], DiscreteMeasure], sigma: float, omega0: DiscreteMeasure, N: int,
                  eps: float, K: int, p: float = 2.0, start: int = 1) -> CsReport:
    """
    (CS) 条件的启发式诊断：
    取 omega0 到 seq(n) 的测地线在弧长 sigma 处的点 s_n，若某个 s_n 周围 eps 内至少有 K-1 个其他点则 PASS
    有限个点无法判定相对紧性，结论只是启发式的
    """
    if sigma <= 0:
        raise DomainError(f"sigma 必须为正: {sigma}")
    if not N >= K >= 2:
        raise PreconditionError(f"需要 N >= K >= 2，收到 N={N}, K={K}")
    indices = list(range(start, start + N))
    sphere_points = []
    for n in indices:
        member = seq(n)
        dist = wasserstein_distance(omega0, member, p)
        if dist <= sigma:
            raise SequenceTooClose(f"seq({n}) 与基点距离 {dist} 不超过 sigma={sigma}")
        sphere_points.append(displacement_path(omega0, member, p).eval(sigma))

    matrix = np.zeros((N, N))
    for a in range(N):
        for b in range(a + 1, N):
            matrix[a, b] = matrix[b, a] = wasserstein_distance(sphere_points[a], sphere_points[b], p)
    off = matrix[~np.eye(N, dtype=bool)]
    neighbours = (matrix <= eps).sum(axis=1) - 1
    best_cluster = int(neighbours.max())
    verdict = "PASS" if best_cluster >= K - 1 else "FAIL"
    params = {"sigma": sigma, "N": N, "eps": eps, "K": K, "p": p, "start": start}
    logging.info(f"[Geodesic] (CS) 诊断 {verdict}：最大邻居数 {best_cluster}，最小非对角距离 {off.min():.6g}")
    return CsReport(verdict, params, matrix.tolist(), float(off.min()), best_cluster)


@dataclass
class DlcResult:
    value: float
    converged: bool
    samples: List[Tuple[int, float]]

    def to_dict(self):
        return {"op": "dlc_limit", "value": self.value, "converged": self.converged,
                "trace": [[n, a] for n, a in self.samples]}


def dlc_limit(seq: MeasureSetSequence, omega: DiscreteMeasure, p: float = 2.0, tol: float = 1e-6,
              n_max: int = 1024) -> DlcResult:
    """a_n = min_{h in H_n} W_p(omega, h) - c_n，n 按倍增取到 n_max"""
    if n_max < 2:
        raise PreconditionError(f"n_max 必须不小于 2: {n_max}")
    samples: List[Tuple[int, float]] = []
    for n in doubling_schedule(1, n_max):
        n = int(n)
        members = seq.sets(n)
        nearest = min(wasserstein_distance(omega, h, p) for h in members)
        samples.append((n, nearest - seq.shift(n)))
    converged = abs(samples[-1][1] - samples[-2][1]) <= tol
    return DlcResult(samples[-1][1], converged, samples)
