"""
离散测度之间的精确 p-Wasserstein 距离与最优耦合
运输单纯形（北西角初始化 + MODI 位势 + Bland 规则）、一维分位数预言机、小规模顶点穷举、HiGHS 线性规划
"""

import logging
from collections import deque
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .discrete_measure import DiscreteMeasure
from .errors import DimensionError, DomainError, InstanceTooLarge, SolverStalled

ZERO_CLAMP = 1e-12
MARGINAL_TOL = 1e-10
BRUTE_PERMUTATION_MAX = 7
BRUTE_TOTAL_MAX = 10


@dataclass(frozen=True, eq=False)
class Coupling:
    """运输计划 pi，只保存严格正的元素 (i, j, mass)"""

    source: DiscreteMeasure
    target: DiscreteMeasure
    entries: Tuple[Tuple[int, int, float], ...]

    @property
    def rows(self) -> int:
        return self.source.size

    @property
    def cols(self) -> int:
        return self.target.size

    def dense(self) -> np.ndarray:
        plan = np.zeros((self.rows, self.cols))
        for i, j, mass in self.entries:
            plan[i, j] += mass
        return plan

    def marginal_errors(self) -> Tuple[float, float]:
        plan = self.dense()
        row_err = float(np.max(np.abs(plan.sum(axis=1) - self.source.weights)))
        col_err = float(np.max(np.abs(plan.sum(axis=0) - self.target.weights)))
        return row_err, col_err

    def is_valid(self, tol: float = MARGINAL_TOL) -> bool:
        row_err, col_err = self.marginal_errors()
        return row_err <= tol and col_err <= tol and all(mass > 0 for _, _, mass in self.entries)

    def to_list(self) -> List[list]:
        return [[int(i), int(j), float(mass)] for i, j, mass in self.entries]


@dataclass(frozen=True, eq=False)
class TransportResult:
    value: float
    cost: float
    p: float
    plan: Coupling
    solver: str

    def to_dict(self):
        return {"value": self.value, "p": self.p, "solver": self.solver, "plan": self.plan.to_list()}


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float):
    if p < 1:
        raise DomainError(f"p 必须不小于 1: {p}")
    if mu.dim != nu.dim:
        raise DimensionError(f"测度维数不一致: {mu.dim} 与 {nu.dim}")


def cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> np.ndarray:
    """C_ij = |x_i - y_j|^p"""
    dist = cdist(mu.support, nu.support)
    return dist if p == 1 else dist ** p


def _finish(mu, nu, p, plan: np.ndarray, cost: np.ndarray, solver: str) -> TransportResult:
    total = float(np.sum(plan * cost))
    value = max(total, 0.0) ** (1.0 / p)
    if value < ZERO_CLAMP:
        value, total = 0.0, 0.0
    rows, cols = np.nonzero(plan > 0)
    entries = tuple((int(i), int(j), float(plan[i, j])) for i, j in zip(rows, cols))
    return TransportResult(value, total, float(p), Coupling(mu, nu, entries), solver)


def _product_plan(mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    return np.outer(mu.weights, nu.weights)


class TransportationSimplex:
    """
    运输问题的原始单纯形法
    北西角规则给出初始基（n+m-1 个基变量，含退化零），MODI 位势计算检验数，
    Bland 规则选择进基与出基变量以防止循环
    """

    def __init__(self, supply: np.ndarray, demand: np.ndarray, cost: np.ndarray, max_iter: Optional[int] = None):
        self.supply = np.asarray(supply, dtype=float)
        self.demand = np.asarray(demand, dtype=float)
        self.cost = np.asarray(cost, dtype=float)
        self.n, self.m = self.cost.shape
        self.max_iter = max_iter if max_iter is not None else 10 * (self.n + self.m) ** 2
        self.tol = 1e-12 * max(1.0, float(np.max(self.cost)))
        self.iterations = 0

    def northwest_corner(self):
        s, d = self.supply.copy(), self.demand.copy()
        plan = np.zeros((self.n, self.m))
        basis = []
        i = j = 0
        while True:
            q = min(s[i], d[j])
            plan[i, j] = q
            basis.append((i, j))
            s[i] -= q
            d[j] -= q
            if i == self.n - 1 and j == self.m - 1:
                break
            if i == self.n - 1:
                j += 1
            elif j == self.m - 1:
                i += 1
            elif s[i] <= d[j]:
                # 行先耗尽（同时耗尽时向下，留下退化的零基变量）
                i += 1
            else:
                j += 1
        return plan, basis

    def _adjacency(self, basis):
        adj = [[] for _ in range(self.n + self.m)]
        for i, j in basis:
            adj[i].append(self.n + j)
            adj[self.n + j].append(i)
        return adj

    def potentials(self, basis):
        """在基生成树上解 u_i + v_j = c_ij，u_0 = 0"""
        adj = self._adjacency(basis)
        u = np.full(self.n, np.nan)
        v = np.full(self.m, np.nan)
        u[0] = 0.0
        stack = [0]
        while stack:
            node = stack.pop()
            if node < self.n:
                for col in adj[node]:
                    j = col - self.n
                    if np.isnan(v[j]):
                        v[j] = self.cost[node, j] - u[node]
                        stack.append(col)
            else:
                j = node - self.n
                for i in adj[node]:
                    if np.isnan(u[i]):
                        u[i] = self.cost[i, j] - v[j]
                        stack.append(i)
        return u, v

    def cycle(self, basis, enter):
        """进基格子 (i,j) 在基树中的闭回路；返回从行 i 到列 j 的树边"""
        i, j = enter
        adj = self._adjacency(basis)
        goal = self.n + j
        parent = {i: None}
        queue = deque([i])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nb in adj[node]:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        path = []
        node = goal
        while parent[node] is not None:
            prev = parent[node]
            path.append((prev, node - self.n) if prev < self.n else (node, prev - self.n))
            node = prev
        path.reverse()
        return path

    def solve(self) -> np.ndarray:
        plan, basis = self.northwest_corner()
        while True:
            if self.iterations >= self.max_iter:
                raise SolverStalled(f"运输单纯形超过迭代上限 {self.max_iter}")
            u, v = self.potentials(basis)
            reduced = self.cost - u[:, None] - v[None, :]
            candidates = np.flatnonzero(reduced.ravel() < -self.tol)
            basic = {i * self.m + j for i, j in basis}
            candidates = [c for c in candidates if c not in basic]
            if not candidates:
                break
            enter = divmod(int(candidates[0]), self.m)
            path = self.cycle(basis, enter)
            minus, plus = path[0::2], path[1::2]
            theta = min(plan[c] for c in minus)
            leaving = min((c for c in minus if plan[c] <= theta), key=lambda c: c[0] * self.m + c[1])
            plan[enter] += theta
            for c in plus:
                plan[c] += theta
            for c in minus:
                plan[c] = max(plan[c] - theta, 0.0)
            plan[leaving] = 0.0
            basis.remove(leaving)
            basis.append(enter)
            self.iterations += 1
        logging.debug(f"[Transport] 单纯形 {self.n}x{self.m} 迭代 {self.iterations} 次")
        return plan


def wasserstein_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0,
                      max_iter: Optional[int] = None) -> TransportResult:
    """精确 W_p；单点测度一侧直接返回唯一的乘积耦合"""
    _check_pair(mu, nu, p)
    cost = cost_matrix(mu, nu, p)
    if mu.size == 1 or nu.size == 1:
        return _finish(mu, nu, p, _product_plan(mu, nu), cost, "simplex")
    plan = TransportationSimplex(mu.weights, nu.weights, cost, max_iter).solve()
    return _finish(mu, nu, p, plan, cost, "simplex")


def wasserstein_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> float:
    return wasserstein_exact(mu, nu, p).value


def wasserstein_1d_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """一维单调（分位数）耦合"""
    _check_pair(mu, nu, p)
    if mu.dim != 1:
        raise DimensionError(f"一维预言机只支持 d=1，收到 d={mu.dim}")
    xi = np.argsort(mu.support[:, 0], kind="stable")
    yj = np.argsort(nu.support[:, 0], kind="stable")
    a, b = mu.weights[xi], nu.weights[yj]
    plan = np.zeros((mu.size, nu.size))
    i = j = 0
    ra, rb = a[0], b[0]
    while i < mu.size and j < nu.size:
        q = min(ra, rb)
        source_done = ra <= rb
        if q > 0:
            plan[xi[i], yj[j]] += q
        ra -= q
        rb -= q
        if source_done:
            i += 1
            ra = a[i] if i < mu.size else 0.0
        else:
            j += 1
            rb = b[j] if j < nu.size else 0.0
    return _finish(mu, nu, p, plan, cost_matrix(mu, nu, p), "quantile1d")


def _tree_solution(cells, supply, demand, n, m) -> Optional[np.ndarray]:
    """支撑为生成树时，用剥叶子的方式解出唯一的基解；成环或不可行返回 None"""
    parent = list(range(n + m))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for i, j in cells:
        ri, rj = find(i), find(n + j)
        if ri == rj:
            return None
        parent[ri] = rj

    residual = np.concatenate([supply, demand]).astype(float)
    incident: Dict[int, set] = {k: set() for k in range(n + m)}
    for idx, (i, j) in enumerate(cells):
        incident[i].add(idx)
        incident[n + j].add(idx)
    plan = np.zeros((n, m))
    leaves = deque(k for k in range(n + m) if len(incident[k]) == 1)
    remaining = len(cells)
    while remaining and leaves:
        node = leaves.popleft()
        if len(incident[node]) != 1:
            continue
        idx = incident[node].pop()
        i, j = cells[idx]
        other = n + j if node == i else i
        incident[other].discard(idx)
        plan[i, j] = residual[node]
        residual[other] -= residual[node]
        residual[node] = 0.0
        remaining -= 1
        if len(incident[other]) == 1:
            leaves.append(other)
    if np.any(plan < -1e-12):
        return None
    return np.clip(plan, 0.0, None)


def brute_force_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """
    穷举运输多面体的顶点
    等权且 n=m<=7 时枚举置换矩阵（Birkhoff 顶点），否则在 n+m<=10 时枚举全部基解
    """
    _check_pair(mu, nu, p)
    n, m = mu.size, nu.size
    cost = cost_matrix(mu, nu, p)
    if n == 1 or m == 1:
        return _finish(mu, nu, p, _product_plan(mu, nu), cost, "bruteforce")

    uniform = n == m and np.all(np.abs(mu.weights - 1.0 / n) <= 1e-14) and \
        np.all(np.abs(nu.weights - 1.0 / m) <= 1e-14)
    best_plan, best_cost = None, np.inf
    if uniform and n <= BRUTE_PERMUTATION_MAX:
        rows = np.arange(n)
        for perm in permutations(range(n)):
            total = float(cost[rows, list(perm)].sum()) / n
            if total < best_cost:
                best_cost = total
                best_plan = np.zeros((n, m))
                best_plan[rows, list(perm)] = 1.0 / n
    elif n + m <= BRUTE_TOTAL_MAX:
        all_cells = [(i, j) for i in range(n) for j in range(m)]
        for subset in combinations(all_cells, n + m - 1):
            plan = _tree_solution(subset, mu.weights, nu.weights, n, m)
            if plan is None:
                continue
            total = float(np.sum(plan * cost))
            if total < best_cost:
                best_cost, best_plan = total, plan
    else:
        raise InstanceTooLarge(f"穷举规模过大: n={n}, m={m}")
    return _finish(mu, nu, p, best_plan, cost, "bruteforce")


def linprog_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """用 scipy 的 HiGHS 求解同一个运输线性规划，作为独立对照"""
    _check_pair(mu, nu, p)
    n, m = mu.size, nu.size
    cost = cost_matrix(mu, nu, p)
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([mu.weights, nu.weights])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        logging.error(f"[Transport] HiGHS 求解失败: {res.message}")
        raise SolverStalled(f"HiGHS 求解失败: {res.message}")
    plan = np.clip(res.x.reshape(n, m), 0.0, None)
    plan[plan < 1e-15] = 0.0
    return _finish(mu, nu, p, plan, cost, "linprog")


SOLVERS = {
    "simplex": wasserstein_exact,
    "quantile1d": wasserstein_1d_oracle,
    "bruteforce": brute_force_oracle,
    "linprog": linprog_oracle,
}


def solve(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0, solver: str = "simplex") -> TransportResult:
    if solver not in SOLVERS:
        raise DomainError(f"未知的求解器: {solver}，可选 {sorted(SOLVERS)}")
    return SOLVERS[solver](mu, nu, p)
