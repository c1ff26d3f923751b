"""
Wasserstein 空间上的函数
提升算子、斜率估计、球面校准粘性检验、dl_G 检验、epsilon 负梯度贪心下降、提升场的负梯度射线、Busemann 表示公式检查

所有"球面/下水平集上的下确界"都以见证搜索实现：候选测度的距离由求解器认证。
只有存在解析完备性论证的场（见 MeasureField.analytic）才会给出 FAIL，否则给出 INCONCLUSIVE。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .base_space import BaseScalarField, CustomField, field_from_config
from .discrete_measure import DiscreteMeasure, MeasureSetSequence, measure_from_json, measure_to_json
from .errors import (DescentStalled, DimensionError, EmptyCollection, InvalidRay, NoUsablePairs,
                     PreconditionError, SphereSamplingFailed, UnsupportedField)
from .ot_exact import wasserstein_distance
from .wgeom import (WassersteinRay, busemann_estimate, displacement_path, dlc_limit, sphere_sample)

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"
DEGENERATE_DIST = 1e-10
LIPSCHITZ_TOL = 1e-9
CALIBRATION_TOL = 1e-8


class MeasureField:
    """
    P_p(R^d) 上的 1-Lipschitz 函数
    analytic 为 True 表示"找不到见证"可以解释为真正的否定
    """

    kind = "field"
    analytic = False

    def __init__(self, p: float = 2.0):
        self.p = float(p)

    def evaluate(self, omega: DiscreteMeasure) -> float:
        raise NotImplementedError

    def descent_candidate(self, omega: DiscreteMeasure, r: float) -> Optional[DiscreteMeasure]:
        """沿解析下降方向走距离 r 得到的测度；没有解析方向时返回 None"""
        return None

    def to_dict(self):
        return {"type": self.kind, "p": self.p}


class LiftedField(MeasureField):
    """u_hat(omega) = sum_i lambda_i u(x_i)"""

    kind = "lifted"

    def __init__(self, base: BaseScalarField, p: float = 2.0):
        super().__init__(p)
        self.base = base

    @property
    def analytic(self) -> bool:
        return self.base.has_ray

    def evaluate(self, omega: DiscreteMeasure) -> float:
        if self.base.dim is not None and omega.dim != self.base.dim:
            raise DimensionError(f"基场维数 {self.base.dim} 与测度维数 {omega.dim} 不一致")
        return float(omega.weights @ self.base.evaluate_many(omega.support))

    def descent_candidate(self, omega, r):
        try:
            return lifted_ray(self, omega).eval(r)
        except (UnsupportedField, InvalidRay):
            return None

    def to_dict(self):
        return {"type": self.kind, "p": self.p, "base": self.base.to_dict()}


class DistanceField(MeasureField):
    """omega -> W_p(omega, target) - offset"""

    kind = "distance"

    def __init__(self, target: DiscreteMeasure, offset: float = 0.0, p: float = 2.0):
        super().__init__(p)
        self.target = target
        self.offset = float(offset)

    def evaluate(self, omega):
        return wasserstein_distance(omega, self.target, self.p) - self.offset

    def descent_candidate(self, omega, r):
        # 朝目标的测地线上弧长 r 处，要求目标严格在半径 r 之外
        path = displacement_path(omega, self.target, self.p)
        if path.length > r:
            return path.eval(r)
        return None

    def to_dict(self):
        return {"type": self.kind, "p": self.p, "target": measure_to_json(self.target), "offset": self.offset}


class BusemannMeasureField(MeasureField):
    """b_gamma，按测度缓存估计值"""

    kind = "busemann"

    def __init__(self, ray: WassersteinRay, tol: float = 1e-6, t_max: float = 1e6, extrapolate: bool = True):
        super().__init__(ray.p)
        self.ray = ray
        self.tol = tol
        self.t_max = t_max
        self.extrapolate = extrapolate
        self._memo: Dict[bytes, float] = {}

    def evaluate(self, omega):
        key = omega.key()
        if key not in self._memo:
            est = busemann_estimate(self.ray, omega, self.tol, self.t_max, self.extrapolate)
            self._memo[key] = est.value
        return self._memo[key]

    def to_dict(self):
        return {"type": self.kind, "p": self.p, "ray": self.ray.to_dict(), "tol": self.tol, "t_max": self.t_max}


class DlcLimitField(MeasureField):
    """u(omega) = lim [W_p(omega, H_n) - c_n]"""

    kind = "dlc"

    def __init__(self, seq: MeasureSetSequence, p: float = 2.0, tol: float = 1e-6, n_max: int = 1024):
        super().__init__(p)
        self.seq = seq
        self.tol = tol
        self.n_max = n_max

    def evaluate(self, omega):
        return dlc_limit(self.seq, omega, self.p, self.tol, self.n_max).value

    def descent_candidate(self, omega, r):
        """沿测地线朝 H_{n_max} 中最近的成员走 r"""
        members = self.seq.sets(self.n_max)
        nearest = min(members, key=lambda h: wasserstein_distance(omega, h, self.p))
        path = displacement_path(omega, nearest, self.p)
        if path.length <= r:
            return None
        return path.eval(r)

    def to_dict(self):
        return {"type": self.kind, "p": self.p, "tol": self.tol, "n_max": self.n_max}


class InfField(MeasureField):
    """逐点最小值"""

    kind = "inf"

    def __init__(self, fields: Sequence[MeasureField]):
        super().__init__(fields[0].p)
        self.fields = list(fields)

    @property
    def analytic(self) -> bool:
        return all(f.analytic for f in self.fields)

    def member_values(self, omega) -> List[float]:
        return [f.evaluate(omega) for f in self.fields]

    def evaluate(self, omega):
        return min(self.member_values(omega))

    def descent_candidate(self, omega, r):
        index = int(np.argmin(self.member_values(omega)))
        return self.fields[index].descent_candidate(omega, r)

    def to_dict(self):
        return {"type": self.kind, "p": self.p, "fields": [f.to_dict() for f in self.fields]}


class ConstantField(MeasureField):
    kind = "constant"
    analytic = True

    def __init__(self, c: float = 0.0, p: float = 2.0):
        super().__init__(p)
        self.c = float(c)

    def evaluate(self, omega):
        return self.c

    def to_dict(self):
        return {"type": self.kind, "p": self.p, "c": self.c}


def lift(u: BaseScalarField, p: float = 2.0) -> LiftedField:
    return LiftedField(u, p)


def eval_field(U: MeasureField, omega: DiscreteMeasure) -> float:
    return U.evaluate(omega)


def inf_of_fields(fields: Sequence[MeasureField]) -> MeasureField:
    if not fields:
        raise EmptyCollection("inf_of_fields 需要至少一个场")
    exponents = {f.p for f in fields}
    if len(exponents) > 1:
        raise PreconditionError(f"成员场的 p 不一致: {sorted(exponents)}")
    if len(fields) == 1:
        return fields[0]
    return InfField(fields)


def lipschitz_ratio(U: MeasureField, pairs: Sequence[Tuple[DiscreteMeasure, DiscreteMeasure]]) -> float:
    """max |U(a)-U(b)| / W_p(a,b)，距离不超过 1e-10 的测度对跳过"""
    best = None
    for a, b in pairs:
        dist = wasserstein_distance(a, b, U.p)
        if dist <= DEGENERATE_DIST:
            continue
        ratio = abs(U.evaluate(a) - U.evaluate(b)) / dist
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise NoUsablePairs("没有可用的测度对")
    return best


def lifted_ray(U: MeasureField, omega: DiscreteMeasure) -> WassersteinRay:
    """每个原子沿基场的负梯度射线运动"""
    if not isinstance(U, LiftedField):
        raise UnsupportedField(f"{U.kind} 场不是提升场，没有解析射线")
    rays = tuple(U.base.negative_gradient_ray(x) for x in omega.support)
    # 内置基场的射线逐原子校准，提升后按构造即为单位速度；自定义射线生成器仍需认证
    return WassersteinRay(omega, rays, U.p, trusted=not isinstance(U.base, CustomField))


def _witness(measure: DiscreteMeasure, distance: float, u_omega: float, u_x: float, source: str) -> dict:
    drop = u_omega - u_x
    return {
        "measure": measure_to_json(measure),
        "distance": distance,
        "u_omega": u_omega,
        "u_x": u_x,
        "drop": drop,
        "ratio": drop / distance,
        "source": source,
    }


def replay_witness(U: MeasureField, omega: DiscreteMeasure, witness: dict) -> float:
    """从头重新计算见证的 drop / distance"""
    x = measure_from_json(witness["measure"])
    return (U.evaluate(omega) - U.evaluate(x)) / wasserstein_distance(omega, x, U.p)


def _candidates(U: MeasureField, omega: DiscreteMeasure, r: float, budget: int, rng,
                use_analytic: bool = True) -> Tuple[List[Tuple[DiscreteMeasure, float, str]], bool]:
    """
    解析候选在前，球面采样在后
    Returns:
        (候选列表 [(测度, 认证距离, 来源)], 采样是否失败)
    """
    found = []
    analytic = U.descent_candidate(omega, r) if use_analytic else None
    if analytic is not None:
        dist = wasserstein_distance(omega, analytic, U.p)
        if dist > DEGENERATE_DIST:
            found.append((analytic, dist, "analytic"))
    sampling_failed = False
    try:
        for s in sphere_sample(omega, r, U.p, budget, rng):
            found.append((s.measure, s.distance, s.strategy))
    except SphereSamplingFailed:
        sampling_failed = True
    return found, sampling_failed


@dataclass
class SlopeEstimate:
    """斜率的下界估计：value 等于见证的比值"""

    value: float
    radii: List[float]
    witness: Optional[dict]
    skipped: List[float] = field(default_factory=list)

    def to_dict(self):
        return {"value": self.value, "radii": self.radii, "witness": self.witness, "skipped": self.skipped}


def local_slope_estimate(U: MeasureField, omega: DiscreteMeasure, radii: Sequence[float] = (1.0, 0.5, 0.25),
                         budget: int = 8, rng: Optional[np.random.Generator] = None) -> SlopeEstimate:
    """
    |du|(omega) = limsup (U(omega)-U(x))^+ / W_p(omega,x) 的下界
    对每个半径取球面候选，返回所有比值的最大值
    """
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError(f"半径必须为正且严格递减: {radii}")
    rng = rng if rng is not None else np.random.default_rng(0)
    u0 = U.evaluate(omega)
    best, witness, skipped = 0.0, None, []
    for r in radii:
        found, failed = _candidates(U, omega, r, budget, rng)
        if failed:
            logging.warning(f"[Viscosity] 半径 {r} 的球面采样失败，已跳过")
            skipped.append(r)
        for measure, dist, source in found:
            u_x = U.evaluate(measure)
            ratio = max(u0 - u_x, 0.0) / dist
            if witness is None or ratio > best:
                best = ratio
                witness = _witness(measure, dist, u0, u_x, source)
                witness["ratio"] = ratio
    return SlopeEstimate(best, radii, witness, skipped)


def global_slope_estimate(U: MeasureField, omega: DiscreteMeasure,
                          dictionary: Sequence[DiscreteMeasure]) -> SlopeEstimate:
    """l_u(omega) = sup_x (U(omega)-U(x))^+ / W_p(omega,x) 在字典上的下界"""
    u0 = U.evaluate(omega)
    best, witness = 0.0, None
    for x in dictionary:
        dist = wasserstein_distance(omega, x, U.p)
        if dist <= DEGENERATE_DIST:
            continue
        u_x = U.evaluate(x)
        ratio = max(u0 - u_x, 0.0) / dist
        if witness is None or ratio > best:
            best = ratio
            witness = _witness(x, dist, u0, u_x, "dictionary")
            witness["ratio"] = ratio
    if witness is None:
        raise NoUsablePairs("字典中没有与 omega 可区分的测度")
    return SlopeEstimate(best, [], witness)


@dataclass
class Verdict:
    op: str
    verdict: str
    params: dict
    witness: Optional[dict] = None
    details: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self):
        return {"op": self.op, "verdict": self.verdict, "witness": self.witness, "params": self.params,
                "details": self.details}


def viscosity_sphere_test(U: MeasureField, omega: DiscreteMeasure, radii: Sequence[float] = (1.0, 0.5, 0.1),
                          eps: float = 1e-3, budget: int = 12,
                          rng: Optional[np.random.Generator] = None) -> Verdict:
    """
    U(omega) = inf_{x in dB_r(omega)} [U(x) + W_p(x, omega)]
    由 1-Lipschitz 性，不等式 U(x)+d >= U(omega) 自动成立，只需搜索近似校准的 x：
    U(omega) - U(x) >= d (1 - eps)
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    u0 = U.evaluate(omega)
    details, witness = [], None
    all_pass, any_empty = True, False
    for r in radii:
        found, _ = _candidates(U, omega, r, budget, rng)
        if not found:
            any_empty = True
            all_pass = False
            details.append({"radius": r, "status": INCONCLUSIVE, "candidates": 0})
            continue
        best_gap, best = math.inf, None
        for measure, dist, source in found:
            u_x = U.evaluate(measure)
            best_gap = min(best_gap, dist - (u0 - u_x))
            candidate = _witness(measure, dist, u0, u_x, source)
            if best is None or candidate["ratio"] > best["ratio"]:
                best = candidate
        calibrated = best["drop"] >= best["distance"] * (1.0 - eps)
        all_pass = all_pass and calibrated
        details.append({"radius": r, "status": PASS if calibrated else FAIL, "candidates": len(found),
                        "best_gap": best_gap, "witness": best})
        if calibrated and witness is None:
            witness = best
    if any_empty:
        verdict = INCONCLUSIVE
    elif all_pass:
        verdict = PASS
    else:
        verdict = FAIL if U.analytic else INCONCLUSIVE
    params = {"radii": list(radii), "eps": eps, "budget": budget, "p": U.p, "field": U.kind}
    logging.info(f"[Viscosity] 球面校准检验 {verdict} (field={U.kind})")
    return Verdict("viscosity_sphere_test", verdict, params, witness, details)


def dlg_test(U: MeasureField, omega: DiscreteMeasure, levels: Sequence[float], budget: int = 8,
             eps: float = 1e-6, rng: Optional[np.random.Generator] = None) -> Verdict:
    """
    U(omega) = c + W_p(omega, {U <= c}) 对每个 c < U(omega)
    下界方向由 1-Lipschitz 性自动成立；搜索 U(w) <= c 且 W_p(omega, w) <= U(omega) - c + eps 的见证 w
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    u0 = U.evaluate(omega)
    bad = [c for c in levels if not c < u0]
    if bad:
        raise PreconditionError(f"水平值必须严格小于 U(omega)={u0}: {bad}")
    details = []
    for c in levels:
        reach = u0 - c
        found, _ = _candidates(U, omega, reach, budget, rng)
        hit = None
        for measure, dist, source in found:
            u_x = U.evaluate(measure)
            if u_x <= c + LIPSCHITZ_TOL and dist <= reach + eps:
                hit = _witness(measure, dist, u0, u_x, source)
                break
        if hit is not None:
            status = PASS
        else:
            status = FAIL if U.analytic else INCONCLUSIVE
        details.append({"level": c, "status": status, "witness": hit})
    statuses = {d["status"] for d in details}
    if statuses == {PASS}:
        verdict = PASS
    elif FAIL in statuses:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    params = {"levels": list(levels), "eps": eps, "budget": budget, "p": U.p, "field": U.kind}
    return Verdict("dlg_test", verdict, params, details[0]["witness"] if details else None, details)


@dataclass
class DescentPolyline:
    vertices: List[DiscreteMeasure]
    times: List[float]
    values: List[float]
    epsilon: float
    drops: List[float] = field(default_factory=list)

    def max_defect(self) -> float:
        """max_{i<j} [(t_j - t_i) - (U_i - U_j)]，epsilon 负梯度不等式要求它不超过 epsilon"""
        worst = -math.inf
        for i in range(len(self.times)):
            for j in range(i + 1, len(self.times)):
                worst = max(worst, (self.times[j] - self.times[i]) - (self.values[i] - self.values[j]))
        return worst if worst > -math.inf else 0.0

    def satisfies_inequality(self, tol: float = LIPSCHITZ_TOL) -> bool:
        return self.max_defect() <= self.epsilon + tol

    def escape_distances(self, p: float) -> List[float]:
        """W_p(v_0, v_k)，对通过检验的场应不小于 t_k - epsilon"""
        return [wasserstein_distance(self.vertices[0], v, p) for v in self.vertices]

    def to_dict(self):
        return {"epsilon": self.epsilon, "times": self.times, "values": self.values, "drops": self.drops,
                "vertices": [measure_to_json(v) for v in self.vertices]}


def greedy_descent(U: MeasureField, omega: DiscreteMeasure, eps: float = 1e-2, steps: int = 20, r: float = 1.0,
                   budget: int = 8, rng: Optional[np.random.Generator] = None) -> DescentPolyline:
    """
    从 v_k 出发寻找 v_{k+1}，使 U(v_k) - U(v_{k+1}) >= d - eps / 2^{k+1}
    各步预算几何递减，累加后整条折线满足 epsilon 负梯度不等式
    解析候选可接受时直接采用，否则在球面候选中取校准缺口最小者（同值取下标最小）
    """
    if eps <= 0:
        raise PreconditionError(f"eps 必须为正: {eps}")
    if steps < 1:
        raise PreconditionError(f"steps 必须不小于 1: {steps}")
    rng = rng if rng is not None else np.random.default_rng(0)
    poly = DescentPolyline([omega], [0.0], [U.evaluate(omega)], eps)
    for k in range(steps):
        allowance = eps / 2 ** (k + 1)
        current, u_cur = poly.vertices[-1], poly.values[-1]
        chosen, best_gap = None, math.inf

        analytic = U.descent_candidate(current, r)
        if analytic is not None:
            dist = wasserstein_distance(current, analytic, U.p)
            u_next = U.evaluate(analytic)
            best_gap = dist - (u_cur - u_next)
            if dist > DEGENERATE_DIST and best_gap <= allowance:
                chosen = (analytic, dist, u_next)

        if chosen is None:
            found, _ = _candidates(U, current, r, budget, rng, use_analytic=False)
            for measure, dist, _source in found:
                u_next = U.evaluate(measure)
                gap = dist - (u_cur - u_next)
                if gap < best_gap:
                    best_gap = gap
                    if gap <= allowance:
                        chosen = (measure, dist, u_next)

        if chosen is None:
            logging.warning(f"[Viscosity] 贪心下降在第 {k + 1} 步停滞，最佳缺口 {best_gap:.3e}")
            raise DescentStalled(f"第 {k + 1} 步没有可接受的候选", step=k + 1, best_gap=best_gap, polyline=poly)
        measure, dist, u_next = chosen
        poly.vertices.append(measure)
        poly.times.append(poly.times[-1] + dist)
        poly.values.append(u_next)
        poly.drops.append(u_cur - u_next)
    return poly


def calibration_errors(U: MeasureField, ray: WassersteinRay, times: Sequence[float] = (0.0, 1.0, 5.0, 10.0)):
    """
    沿射线的两项校准误差
    Returns:
        (max |U 下降 - dt|, max |W_p 跨度 - dt|)
    """
    samples = [ray.eval(t) for t in times]
    values = [U.evaluate(m) for m in samples]
    drop_err, span_err = 0.0, 0.0
    for a in range(len(times)):
        for b in range(a + 1, len(times)):
            dt = times[b] - times[a]
            drop_err = max(drop_err, abs((values[a] - values[b]) - dt))
            span_err = max(span_err, abs(wasserstein_distance(samples[a], samples[b], U.p) - dt))
    return drop_err, span_err


def representation_check(U: MeasureField, omega: DiscreteMeasure, rays: Sequence[WassersteinRay],
                         tol: float = 1e-6, t_max: float = 1e4) -> Verdict:
    """
    u(omega) = inf_gamma [u(gamma(0)) + b_gamma(omega)]
    (a) 每条给定射线满足 U(omega) <= U(gamma(0)) + b_gamma(omega) + tol
    (b) 从 omega 出发的自身射线满足 |b(omega)| <= tol，下确界被取到
    """
    for index, ray in enumerate(rays):
        start = ray.eval(0.0)
        u_start = U.evaluate(start)
        for t in (1.0, 10.0):
            if abs((u_start - U.evaluate(ray.eval(t))) - t) > CALIBRATION_TOL * max(1.0, t):
                raise InvalidRay(f"第 {index} 条射线在 t={t} 处没有通过校准检查")

    u0 = U.evaluate(omega)
    details, all_ok = [], True
    for index, ray in enumerate(rays):
        b = busemann_estimate(ray, omega, tol, t_max).value
        bound = U.evaluate(ray.eval(0.0)) + b
        ok = u0 <= bound + tol
        all_ok = all_ok and ok
        details.append({"ray": index, "busemann": b, "bound": bound, "holds": ok})

    own = None
    try:
        own_value = busemann_estimate(lifted_ray(U, omega), omega, tol, t_max).value
        own = {"busemann": own_value, "holds": abs(own_value) <= tol}
    except UnsupportedField:
        logging.info(f"[Viscosity] {U.kind} 场无法构造自身射线，只检查不等式")

    if own is None:
        verdict = INCONCLUSIVE if all_ok else FAIL
    else:
        verdict = PASS if all_ok and own["holds"] else FAIL
    params = {"tol": tol, "t_max": t_max, "rays": len(rays), "p": U.p, "field": U.kind, "u_omega": u0}
    return Verdict("representation_check", verdict, params, own, details)


def sublevel_witness_sequence(U: MeasureField, corpus: Sequence[DiscreteMeasure]) -> MeasureSetSequence:
    """
    H_n 取语料中每个测度沿自身射线到达水平 -n 的点（已在下水平集内的测度取其自身），c_n = n
    对 dl_G 场，dl_C 极限 lim [W_p(omega, H_n) - n] 应还原 U(omega)
    """
    rays = [(mu, U.evaluate(mu), lifted_ray(U, mu)) for mu in corpus]

    def witnesses(n):
        members = []
        for mu, u_mu, ray in rays:
            reach = u_mu + n
            members.append(ray.eval(reach) if reach > 0 else mu)
        return members

    return MeasureSetSequence(witnesses, lambda n: float(n))


def measure_field_from_config(config: dict, p: float = 2.0) -> MeasureField:
    """
    从 JSON 配置构造测度场
    Args:
        config: {"type": "lifted"|"distance"|"constant"|"inf", ...}；基空间场配置按提升场处理
    """
    kind = config.get("type")
    if kind == "lifted":
        return lift(field_from_config(config["base"]), p)
    if kind == "distance" and "target" in config:
        return DistanceField(measure_from_json(config["target"]), config.get("offset", 0.0), p)
    if kind == "constant":
        return ConstantField(config.get("c", 0.0), p)
    if kind == "inf":
        return inf_of_fields([measure_field_from_config(c, p) for c in config.get("fields", [])])
    return lift(field_from_config(config), p)
