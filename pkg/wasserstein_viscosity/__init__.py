"""
Wasserstein Viscosity Lab
在离散概率测度上计算精确 Wasserstein 距离与测地线，并检验 eikonal 方程的度量粘性解
"""

from .base_space import (BaseRay, BusemannField, MinOfFields, DistanceToPoints, CustomField, base_geodesic_eval,
                         ray_eval, eval_base_field, base_negative_gradient_ray, min_combine, kinked_field,
                         field_from_config)
from .discrete_measure import (DiscreteMeasure, MeasureSetSequence, validate_measure, dirac, p_moment,
                               push_forward, translate, escaping_mixture, measure_from_json, measure_to_json)
from .ot_exact import (Coupling, TransportResult, wasserstein_exact, wasserstein_distance, wasserstein_1d_oracle,
                       brute_force_oracle, linprog_oracle)
from .wgeom import (WassersteinPath, WassersteinRay, BusemannEstimate, displacement_path, path_eval,
                    busemann_estimate, sphere_sample, cs_diagnostic, dlc_limit, translation_ray, dirac_ray)
from .viscosity_kit import (MeasureField, LiftedField, DistanceField, BusemannMeasureField, DlcLimitField, InfField,
                            ConstantField, SlopeEstimate, DescentPolyline, Verdict, lift, eval_field,
                            lipschitz_ratio, local_slope_estimate, global_slope_estimate, viscosity_sphere_test,
                            dlg_test, greedy_descent, lifted_ray, representation_check, inf_of_fields,
                            calibration_errors, replay_witness, sublevel_witness_sequence,
                            measure_field_from_config)
from .config_loader import ConfigLoader

__version__ = "0.3.0"

__all__ = [
    'BaseRay', 'BusemannField', 'MinOfFields', 'DistanceToPoints', 'CustomField', 'base_geodesic_eval', 'ray_eval',
    'eval_base_field', 'base_negative_gradient_ray', 'min_combine', 'kinked_field', 'field_from_config',
    'DiscreteMeasure', 'MeasureSetSequence', 'validate_measure', 'dirac', 'p_moment', 'push_forward', 'translate',
    'escaping_mixture', 'measure_from_json', 'measure_to_json',
    'Coupling', 'TransportResult', 'wasserstein_exact', 'wasserstein_distance', 'wasserstein_1d_oracle',
    'brute_force_oracle', 'linprog_oracle',
    'WassersteinPath', 'WassersteinRay', 'BusemannEstimate', 'displacement_path', 'path_eval', 'busemann_estimate',
    'sphere_sample', 'cs_diagnostic', 'dlc_limit', 'translation_ray', 'dirac_ray',
    'MeasureField', 'LiftedField', 'DistanceField', 'BusemannMeasureField', 'DlcLimitField', 'InfField',
    'ConstantField', 'SlopeEstimate', 'DescentPolyline', 'Verdict', 'lift', 'eval_field', 'lipschitz_ratio',
    'local_slope_estimate', 'global_slope_estimate', 'viscosity_sphere_test', 'dlg_test', 'greedy_descent',
    'lifted_ray', 'representation_check', 'inf_of_fields', 'calibration_errors', 'replay_witness',
    'sublevel_witness_sequence', 'measure_field_from_config',
    'ConfigLoader',
]
