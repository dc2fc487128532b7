"""Monte-Carlo evaluation, sweeps and result export."""

from .evaluate import (
    EvalReport,
    HardDecisionDecoder,
    ModelDecoder,
    OracleDecoder,
    SNRResult,
    StopRule,
    evaluate,
    evaluate_snr,
    run_block,
)
from .sweep import (
    CSV_COLUMNS,
    PRESETS,
    SweepSpec,
    load_spec,
    parse_config_text,
    spec_from_mapping,
    sweep,
)

__all__ = [
    "CSV_COLUMNS", "EvalReport", "HardDecisionDecoder", "ModelDecoder", "OracleDecoder", "PRESETS", "SNRResult",
    "StopRule", "SweepSpec", "evaluate", "evaluate_snr", "load_spec", "parse_config_text", "run_block",
    "spec_from_mapping", "sweep",
]
