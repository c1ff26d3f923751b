"""
命令处理模块
每个子命令一个处理函数，接收解析后的参数和 ScenarioConfig，返回带 success 键的 JSON 字典
"""

import os
import logging

from scenarios import SCENARIOS, ScenarioConfig, emit_report, load_measures, run_scenario
from utils import make_rng
from wasserstein_viscosity.base_space import BaseRay, as_unit_vector
from wasserstein_viscosity.config_loader import ConfigLoader
from wasserstein_viscosity.discrete_measure import dirac, measure_to_json
from wasserstein_viscosity.errors import DescentStalled, IoError, LabError
from wasserstein_viscosity.ot_exact import SOLVERS, solve
from wasserstein_viscosity.viscosity_kit import (global_slope_estimate, greedy_descent, local_slope_estimate,
                                                 measure_field_from_config, viscosity_sphere_test)
from wasserstein_viscosity.wgeom import busemann_estimate, displacement_path, make_ray


def _first_measure(path):
    return load_measures(path)[0]


def load_field(path, p):
    """读取场配置文件并构造测度场"""
    if not os.path.exists(path):
        raise IoError(f"场配置文件不存在: {path}")
    return measure_field_from_config(ConfigLoader.load_json_file(path), p)


def cmd_wp(args, cfg: ScenarioConfig):
    """精确 W_p 距离与最优耦合"""
    mu, nu = _first_measure(args.mu), _first_measure(args.nu)
    result = solve(mu, nu, cfg.p, args.solver)
    return {'success': True, 'data': result.to_dict()}


def cmd_geodesic(args, cfg: ScenarioConfig):
    """位移插值测地线，--t 为长度的比例"""
    mu, nu = _first_measure(args.mu), _first_measure(args.nu)
    path = displacement_path(mu, nu, cfg.p)
    points = []
    for fraction in args.t:
        t = fraction * path.length
        points.append({'t': t, 'measure': measure_to_json(path.eval(t))})
    return {'success': True, 'data': {'length': path.length, 'degenerate': path.degenerate,
                                      'non_unique': path.non_unique, 'points': points}}


def cmd_busemann(args, cfg: ScenarioConfig):
    """沿平移射线的 Busemann 函数估计，默认射线从原点的 Dirac 出发"""
    omega = _first_measure(args.omega)
    base = _first_measure(args.ray_base) if args.ray_base else dirac([0.0] * len(args.direction))
    v = as_unit_vector(args.direction)
    ray = make_ray(base, [BaseRay(x, v) for x in base.support], cfg.p)
    estimate = busemann_estimate(ray, omega, cfg.busemann_tol, cfg.t_max)
    return {'success': True, 'data': estimate.to_dict()}


def cmd_slope(args, cfg: ScenarioConfig):
    """局部斜率下界；给出 --dictionary 时同时估计全局斜率"""
    U = load_field(args.field, cfg.p)
    omega = _first_measure(args.omega)
    data = {'local': local_slope_estimate(U, omega, rng=make_rng(cfg.seed)).to_dict()}
    if args.dictionary:
        data['global'] = global_slope_estimate(U, omega, load_measures(args.dictionary)).to_dict()
    return {'success': True, 'data': data}


def cmd_check_viscosity(args, cfg: ScenarioConfig):
    U = load_field(args.field, cfg.p)
    omega = _first_measure(args.omega)
    verdict = viscosity_sphere_test(U, omega, cfg.radii, cfg.sphere_eps, cfg.sphere_budget, make_rng(cfg.seed))
    return {'success': True, 'data': verdict.to_dict()}


def cmd_descend(args, cfg: ScenarioConfig):
    U = load_field(args.field, cfg.p)
    omega = _first_measure(args.omega)
    try:
        poly = greedy_descent(U, omega, args.eps, args.steps, args.step_length, cfg.sphere_budget,
                              make_rng(cfg.seed))
    except DescentStalled as e:
        logging.warning(f"[Viscosity] 下降停滞: {e}")
        return {'success': False, 'error': str(e), 'step': e.step, 'best_gap': e.best_gap,
                'polyline': e.polyline.to_dict() if e.polyline is not None else None}
    return {'success': True, 'data': {**poly.to_dict(), 'max_defect': poly.max_defect()}}


def _run_and_emit(cfg: ScenarioConfig):
    report = run_scenario(cfg)
    files = emit_report(report, os.path.join(cfg.output_dir, cfg.scenario))
    return {'success': report.all_matched, 'incomplete': report.incomplete, 'error': report.error,
            'verdicts': [{'name': v['name'], 'verdict': v['verdict'], 'expected': v['expected']}
                         for v in report.verdicts],
            'files': files}


def cmd_reproduce(args, cfg: ScenarioConfig):
    cfg.scenario = args.scenario_id
    return _run_and_emit(cfg)


def cmd_acceptance(args, cfg: ScenarioConfig):
    cfg.scenario = "acceptance"
    return _run_and_emit(cfg)


CLI_OVERRIDES = {'p': 'p', 'seed': 'seed', 'tol': 'busemann_tol', 'out': 'output_dir', 'n_max': 'n_max'}


def cmd_config(args, cfg: ScenarioConfig):
    """显示叠加全局参数后的有效配置；--save 时写回配置文件"""
    loader = ConfigLoader(args.config)
    for arg, key in CLI_OVERRIDES.items():
        value = getattr(args, arg)
        if value is not None:
            loader.set(key, value)
    if args.key:
        if args.key not in loader.config:
            return {'success': False, 'error': f"未知配置项: {args.key}"}
        return {'success': True, 'data': {args.key: loader.get(args.key)}}
    saved = loader.save_config() if args.save else False
    if args.save and not saved:
        return {'success': False, 'error': f"无法写入配置文件: {loader.config_file}"}
    return {'success': True, 'data': loader.config, 'source': loader.source, 'saved': saved}


def _measure_pair(parser):
    parser.add_argument('--mu', required=True, help='源测度 JSON 文件')
    parser.add_argument('--nu', required=True, help='目标测度 JSON 文件')


def _field_at(parser):
    parser.add_argument('--field', required=True, help='场配置 JSON 文件')
    parser.add_argument('--omega', required=True, help='测度 JSON 文件')


def _configure_wp(parser):
    _measure_pair(parser)
    parser.add_argument('--solver', choices=sorted(SOLVERS), default='simplex', help='求解器 (默认 simplex)')


def _configure_geodesic(parser):
    _measure_pair(parser)
    parser.add_argument('--t', type=float, nargs='+', default=[0.0, 0.25, 0.5, 0.75, 1.0],
                        help='取点位置，按测地线长度的比例 (默认 0 0.25 0.5 0.75 1)')


def _configure_busemann(parser):
    parser.add_argument('--omega', required=True, help='测度 JSON 文件')
    parser.add_argument('--direction', type=float, nargs='+', required=True, help='射线方向（单位向量）')
    parser.add_argument('--ray-base', help='射线起点测度 JSON 文件 (默认原点处的 Dirac)')


def _configure_slope(parser):
    _field_at(parser)
    parser.add_argument('--dictionary', help='全局斜率所用的测度字典 JSON 文件')


def _configure_descend(parser):
    _field_at(parser)
    parser.add_argument('--eps', type=float, default=1e-2, help='总校准缺口预算 (默认 1e-2)')
    parser.add_argument('--steps', type=int, default=20, help='步数 (默认 20)')
    parser.add_argument('--step-length', type=float, default=1.0, help='每步半径 (默认 1)')


def _configure_config(parser):
    parser.add_argument('--key', help='只显示一个配置项')
    parser.add_argument('--save', action='store_true', help='把有效配置写回 --config 指定的文件')


def _configure_reproduce(parser):
    parser.add_argument('scenario_id', choices=[s for s in SCENARIOS if s != 'acceptance'], help='场景编号')


COMMANDS = {
    'wp': (cmd_wp, '计算精确 Wasserstein 距离', _configure_wp),
    'geodesic': (cmd_geodesic, '计算位移插值测地线', _configure_geodesic),
    'busemann': (cmd_busemann, '估计 Busemann 函数', _configure_busemann),
    'slope': (cmd_slope, '估计局部/全局斜率', _configure_slope),
    'check-viscosity': (cmd_check_viscosity, '球面校准粘性检验', _field_at),
    'descend': (cmd_descend, 'epsilon 负梯度贪心下降', _configure_descend),
    'reproduce': (cmd_reproduce, '复现示例场景', _configure_reproduce),
    'acceptance': (cmd_acceptance, '运行验收套件', lambda parser: None),
    'config': (cmd_config, '查看或保存有效配置', _configure_config),
}


def register_commands(subparsers):
    """把所有子命令注册到 argparse 子解析器"""
    for name, (handler, help_text, configure) in COMMANDS.items():
        parser = subparsers.add_parser(name, help=help_text)
        configure(parser)
        parser.set_defaults(handler=handler)


def dispatch(args, cfg: ScenarioConfig):
    """执行子命令；库异常转换为 success=False 的结果"""
    try:
        return args.handler(args, cfg)
    except LabError as e:
        logging.error(f"[Scenario] 命令 {args.command} 失败: {type(e).__name__}: {e}")
        return {'success': False, 'error': f"{type(e).__name__}: {e}"}
