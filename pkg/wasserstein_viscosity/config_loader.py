"""
配置加载器
按 默认值 -> 模板 -> 配置文件 的顺序叠加实验配置（容差、随机种子、场景参数），并按默认值的类型校验
"""

import os
import json
import logging

from .errors import ParseError

PACKAGE_DIR = os.path.dirname(os.path.realpath(__file__))
TEMPLATE_FILE = os.path.join(PACKAGE_DIR, "config.template.json")

DEFAULT_CONFIG = {
    "scenario": "lift-demo",
    "p": 2.0,
    "seed": 20240601,
    "n_min": 1,
    "n_max": 50,
    "busemann_tol": 1e-6,
    "t_max": 1e6,
    "sphere_eps": 1e-3,
    "witness_eps": 1e-6,
    "solver_tol": 1e-9,
    "sphere_budget": 12,
    "radii": [1.0, 0.5, 0.1],
    "output_dir": "reports",
}


def _read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            logging.error(f"[Config] {path} 不是合法 JSON: {e.msg}")
            raise ParseError(f"{path}: 第 {e.lineno} 行第 {e.colno} 列: {e.msg}")


def _coerce(key, value):
    """按默认值的类型检查配置项；整数可以作为浮点数使用，未知键原样保留"""
    expected = DEFAULT_CONFIG.get(key)
    if expected is None or isinstance(value, type(expected)):
        return value
    if isinstance(expected, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    raise ParseError(f"配置项 {key} 的类型应为 {type(expected).__name__}，实际为 {type(value).__name__}")


class ConfigLoader:
    """配置加载器类"""

    def __init__(self, config_file=None):
        """
        Args:
            config_file: 配置文件路径，默认为包目录下的 config.json
        """
        self.config_file = config_file or os.path.join(PACKAGE_DIR, "config.json")
        self.source = None
        self.config = self.load_config()

    def load_config(self):
        """叠加各层配置，记录实际使用的来源"""
        config = self.get_default_config()
        if os.path.exists(self.config_file):
            layer, self.source = _read_json(self.config_file), self.config_file
        else:
            logging.warning(f"[Config] 配置文件不存在: {self.config_file}，使用模板")
            layer, self.source = self.load_json_file(TEMPLATE_FILE, {}), TEMPLATE_FILE
        if not isinstance(layer, dict):
            raise ParseError(f"{self.source}: 顶层必须是 JSON 对象")
        for key, value in layer.items():
            config[key] = _coerce(key, value)
        logging.info(f"[Config] 配置已加载: {self.source}")
        return config

    def save_config(self):
        """把当前配置写回 config_file，成功返回 True"""
        try:
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(self.config, f, indent=4, ensure_ascii=False, sort_keys=True)
        except OSError as e:
            logging.error(f"[Config] 保存配置文件失败: {e}")
            return False
        logging.info(f"[Config] 配置文件已保存: {self.config_file}")
        return True

    def get(self, key, default=None):
        return self.config.get(key, default)

    def set(self, key, value):
        self.config[key] = _coerce(key, value)

    @staticmethod
    def get_default_config():
        """默认配置的副本"""
        return {k: list(v) if isinstance(v, list) else v for k, v in DEFAULT_CONFIG.items()}

    @staticmethod
    def load_json_file(file_path, default_value=None):
        """读取任意 JSON 文件（测度、场配置）；文件缺失时返回默认值，解析失败抛出带行列号的 ParseError"""
        if not os.path.exists(file_path):
            logging.warning(f"[Config] 文件不存在: {file_path}")
            return default_value if default_value is not None else []
        return _read_json(file_path)
