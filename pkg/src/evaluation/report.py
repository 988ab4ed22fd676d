"""
Cross-validation reports and their JSON / CSV emission

JSON schema (keys sorted, metrics in percent):
    band        str                  rhythm the run was trained on
    config      object               model, train and protocol settings
    folds       list of FoldResult   repeat, fold, train/test subjects,
                                     segment/subject metrics and confusions
    summary     {level: {metric: {mean, std}}}  over every fold of every repeat
    skipped     list of str          subjects dropped during preprocessing
    runtime_s   float                only with include_runtime
CSV: header ``repeat,fold,level,metric,value`` and one row per
(repeat, fold, level, metric).
"""
import csv
import logging
import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

import numpy as np
import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.evaluation.metrics import METRIC_NAMES, Confusion, Metrics
from src.exceptions import ReportError

logger = logging.getLogger(__name__)

LEVELS = ("segment", "subject")


class FoldResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    repeat: int
    fold: int
    train_subjects: List[str]
    test_subjects: List[str]
    segment: Dict[str, float]
    subject: Dict[str, float]
    segment_confusion: Dict[str, int]
    subject_confusion: Dict[str, int]
    undefined: List[str] = Field(default_factory=list)
    final_loss: Optional[float] = None

    @classmethod
    def from_counts(cls,
                    repeat: int,
                    fold: int,
                    train_subjects: List[str],
                    test_subjects: List[str],
                    segment: Confusion,
                    subject: Confusion,
                    segment_metrics: Metrics,
                    subject_metrics: Metrics,
                    final_loss: Optional[float] = None) -> "FoldResult":
        undefined = sorted(
            [f"segment.{m}" for m in segment_metrics.undefined]
            + [f"subject.{m}" for m in subject_metrics.undefined]
        )
        return cls(
            repeat=repeat,
            fold=fold,
            train_subjects=list(train_subjects),
            test_subjects=list(test_subjects),
            segment={k: 100.0 * v for k, v in segment_metrics.as_dict().items()},
            subject={k: 100.0 * v for k, v in subject_metrics.as_dict().items()},
            segment_confusion=segment.as_dict(),
            subject_confusion=subject.as_dict(),
            undefined=undefined,
            final_loss=final_loss,
        )


class MetricSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    std: float


class Report(BaseModel):
    band: str
    config: dict
    folds: List[FoldResult]
    summary: Dict[str, Dict[str, MetricSummary]]
    skipped: List[str] = Field(default_factory=list)
    runtime_s: Optional[float] = None

    @classmethod
    def build(cls,
              band: str,
              config: dict,
              folds: List[FoldResult],
              skipped: Optional[List[str]] = None,
              runtime_s: Optional[float] = None) -> "Report":
        """Assemble a report; mean and population std run over every fold result"""
        if not folds:
            raise ReportError("report has no fold results")
        summary = {
            level: {
                name: MetricSummary(
                    mean=float(np.mean([getattr(f, level)[name] for f in folds])),
                    std=float(np.std([getattr(f, level)[name] for f in folds])),
                )
                for name in METRIC_NAMES
            }
            for level in LEVELS
        }
        return cls(band=band, config=config, folds=folds, summary=summary,
                   skipped=list(skipped or []), runtime_s=runtime_s)

    @property
    def n_repeats(self) -> int:
        return len({f.repeat for f in self.folds})

    def mean(self, level: str, metric: str) -> float:
        return self.summary[level][metric].mean


def report_json(report: Report, include_runtime: bool = False) -> bytes:
    exclude = None if include_runtime else {"runtime_s"}
    return orjson.dumps(report.model_dump(exclude=exclude),
                        option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)


def emit_report(report: Report,
                path: Union[str, Path],
                fmt: Literal["json", "csv"] = "json",
                include_runtime: bool = False) -> None:
    """Write a report as JSON or CSV

    Wall-clock runtime is left out unless ``include_runtime`` is set, so the
    default output depends only on data, config and seed.
    """
    if not report.folds:
        raise ReportError("report has no fold results")
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    if fmt == "json":
        with open(path, "wb") as f:
            f.write(report_json(report, include_runtime))
    elif fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["repeat", "fold", "level", "metric", "value"])
            for fold in report.folds:
                for level in LEVELS:
                    for name in METRIC_NAMES:
                        writer.writerow([fold.repeat, fold.fold, level, name, repr(getattr(fold, level)[name])])
    else:
        raise ReportError(f"unknown report format {fmt!r}")
    logger.info(f"Wrote {fmt} report to {path}")


def load_report(path: Union[str, Path]) -> Report:
    """Parse a JSON report written by ``emit_report``"""
    try:
        with open(path, "rb") as f:
            return Report.model_validate(orjson.loads(f.read()))
    except (orjson.JSONDecodeError, ValidationError) as e:
        raise ReportError(f"{path}: {e}") from e
