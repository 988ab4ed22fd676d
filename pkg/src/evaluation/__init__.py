"""Subject-independent cross-validation, metrics and reports"""
from src.evaluation.experiment import run_ablation, run_band_sweep, run_experiment, run_fold
from src.evaluation.folds import Fold, FoldPlan, subject_kfold
from src.evaluation.metrics import Confusion, Metrics, confusion, metrics
from src.evaluation.report import FoldResult, MetricSummary, Report, emit_report, load_report

__all__ = [
    "run_ablation",
    "run_band_sweep",
    "run_experiment",
    "run_fold",
    "Fold",
    "FoldPlan",
    "subject_kfold",
    "Confusion",
    "Metrics",
    "confusion",
    "metrics",
    "FoldResult",
    "MetricSummary",
    "Report",
    "emit_report",
    "load_report",
]
