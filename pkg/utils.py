import os
import csv
import io
import json
import logging

import numpy as np

from wasserstein_viscosity.discrete_measure import validate_measure

ALLOWED_EXTENSIONS = {'json'}


def allowed_file(filename):
    """检查文件扩展名是否被允许"""
    return '.' in filename and \
           filename.rsplit('.', 1)[1].lower() in ALLOWED_EXTENSIONS


def make_rng(seed, stream=0):
    """由种子和子流编号生成独立的随机数发生器"""
    return np.random.default_rng([int(seed), int(stream)])


def random_measure(rng, dim=2, max_atoms=5, scale=1.0, uniform=False, atoms=None):
    """
    生成随机离散测度
    Args:
        rng: numpy 随机数发生器
        dim: 维数
        max_atoms: 原子数上限（atoms 未指定时在 1..max_atoms 中抽取）
        scale: 支撑点落在 [-scale, scale]^dim
        uniform: 为 True 时使用均匀权重
    """
    n = int(atoms) if atoms is not None else int(rng.integers(1, max_atoms + 1))
    support = rng.uniform(-scale, scale, size=(n, dim))
    if uniform:
        weights = np.full(n, 1.0 / n)
    else:
        weights = rng.dirichlet(np.ones(n))
    return validate_measure(support, weights)


def random_unit(rng, dim=2):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    raise TypeError(f"无法序列化的对象: {type(value).__name__}")


def canonical_json(data):
    """键排序、固定缩进的 JSON 文本，相同输入得到相同字节"""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, default=_jsonable) + "\n"


def csv_text(header, rows):
    """把表格转换为 CSV 文本，浮点数用 repr 保证可精确回读"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buffer.getvalue()


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    logging.debug(f"[Scenario] 输出目录: {path}")
    return path
