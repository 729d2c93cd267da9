"""
加密比较模块
"""

from .kmin import SelectionResult, expected_comparisons, k_min_select
from .params import (
    DEFAULT_SIGMA,
    MAX_L,
    MAX_RSS_DELTA,
    ComparisonParams,
    comparison_bit_length,
    dgk_carrier_u_bits,
)
from .protocol import (
    EXPECTED_REPLY,
    MESSAGE_CLASSES,
    CompareM1,
    CompareM2,
    CompareM3,
    CompareM4,
    CompareM5,
    CompareM6,
    EvaluatorSession,
    EvaluatorStage,
    KeyholderChannel,
    KeyholderSession,
    KeyholderStage,
    LocalKeyholderChannel,
    eval_bit_stage,
    eval_finish,
    eval_mask_result,
    eval_start,
    joint_compare,
    keyh_mask_decompose,
    keyh_unmask,
    keyh_zero_stage,
)
