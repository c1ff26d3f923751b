#!/usr/bin/env python
# -*- coding: utf-8 -*-

import sys
import json
import logging
import argparse

from commands import dispatch, register_commands
from scenarios import ScenarioConfig
from wasserstein_viscosity.config_loader import ConfigLoader
from wasserstein_viscosity.errors import LabError
from utils import canonical_json


def create_app():
    """创建命令行应用"""
    defaults = ConfigLoader.get_default_config()
    parser = argparse.ArgumentParser(
        prog='lab_app',
        description='Wasserstein 空间上 eikonal 方程粘性解的计算实验室',
    )
    parser.add_argument('--config', help='JSON 配置文件 (默认包目录下的 config.json，缺失时使用模板)')
    parser.add_argument('--p', type=float, help=f"Wasserstein 指数 (默认 {defaults['p']})")
    parser.add_argument('--seed', type=int, help=f"随机种子 (默认 {defaults['seed']})")
    parser.add_argument('--tol', type=float, help=f"Busemann 截断容差 (默认 {defaults['busemann_tol']})")
    parser.add_argument('--out', help=f"报告输出目录 (默认 {defaults['output_dir']})")
    parser.add_argument('--n-max', type=int, help=f"示例序列的最大下标 (默认 {defaults['n_max']})")
    parser.add_argument('--verbose', action='store_true', help='输出调试日志')

    subparsers = parser.add_subparsers(dest='command', required=True)
    register_commands(subparsers)
    return parser


def build_config(args) -> ScenarioConfig:
    loader = ConfigLoader(args.config)
    return ScenarioConfig.from_dict(loader.config, p=args.p, seed=args.seed, busemann_tol=args.tol,
                                    output_dir=args.out, n_max=args.n_max)


def main(argv=None):
    parser = create_app()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(message)s')
    try:
        cfg = build_config(args)
    except LabError as e:
        logging.error(f"[Config] 配置无效: {e}")
        print(json.dumps({'success': False, 'error': str(e)}, ensure_ascii=False))
        return 2

    result = dispatch(args, cfg)
    print(canonical_json(result), end='')
    return 0 if result.get('success') else 1


if __name__ == '__main__':
    sys.exit(main())
