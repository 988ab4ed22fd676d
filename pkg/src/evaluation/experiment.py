"""
Repeated subject-independent cross-validation and the experiment grids built on it
"""
import logging
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from joblib import Parallel, delayed

from config import settings
from src.dsp.segmentation import SegmentBatch
from src.eegio.manifest import Manifest
from src.evaluation.folds import Fold, subject_kfold
from src.evaluation.metrics import confusion, metrics
from src.evaluation.report import FoldResult, Report
from src.exceptions import FoldError, TokenEEGError
from src.model.config import ModelConfig, TrainConfig
from src.model.training import predict_segments, predict_subjects, train
from src.pipeline.preprocess import preprocess_manifest, stack_batches
from src.wavelet.bands import Band, RHYTHMS

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[str, dict], None]


def run_fold(batches: Sequence[SegmentBatch],
             fold: Fold,
             repeat: int,
             model_config: ModelConfig,
             train_config: TrainConfig,
             seed: int) -> FoldResult:
    """Train on the fold's training subjects and score its test subjects"""
    leaked = set(fold.train_ids) & set(fold.test_ids)
    if leaked:
        raise FoldError(f"repeat {repeat} fold {fold.index}: subjects in train and test {sorted(leaked)}")
    by_id = {b.subject_id: b for b in batches}
    try:
        x_train, y_train, _ = stack_batches([by_id[s] for s in fold.train_ids])
        x_test, y_test, test_ids = stack_batches([by_id[s] for s in fold.test_ids])
        result = train(x_train, y_train, model_config, train_config, seed=seed, stream_id=(repeat, fold.index))
        _, seg_pred = predict_segments(result.model, x_test)
    except TokenEEGError as e:
        raise FoldError(f"repeat {repeat} fold {fold.index} failed: {e}") from e

    seg_conf = confusion(y_test, seg_pred)
    votes = predict_subjects(test_ids.tolist(), seg_pred)
    truth = [int(by_id[s].label) for s in votes]
    subj_conf = confusion(truth, [int(v) for v in votes.values()])
    fold_result = FoldResult.from_counts(
        repeat=repeat,
        fold=fold.index,
        train_subjects=list(fold.train_ids),
        test_subjects=list(fold.test_ids),
        segment=seg_conf,
        subject=subj_conf,
        segment_metrics=metrics(seg_conf),
        subject_metrics=metrics(subj_conf),
        final_loss=result.history[-1] if result.history else None,
    )
    logger.info(
        f"repeat {repeat} fold {fold.index}: segment acc {fold_result.segment['accuracy']:.1f}%, "
        f"subject acc {fold_result.subject['accuracy']:.1f}%"
    )
    return fold_result


def run_experiment(manifest: Optional[Manifest] = None,
                   band: Union[str, Band] = Band.FULL,
                   model_config: Optional[ModelConfig] = None,
                   train_config: Optional[TrainConfig] = None,
                   n_folds: int = settings.N_FOLDS,
                   n_repeats: int = settings.N_REPEATS,
                   seed: int = settings.SEED,
                   jobs: int = settings.JOBS,
                   batches: Optional[Sequence[SegmentBatch]] = None,
                   skipped: Optional[Sequence[str]] = None,
                   progress_callback: Optional[ProgressCallback] = None) -> Report:
    """Repeated subject-independent k-fold cross-validation of one band

    Either ``manifest`` (preprocessed here) or already preprocessed
    ``batches`` must be given. Every (repeat, fold) unit trains its own model
    from streams keyed by (repeat, fold), so results do not depend on
    ``jobs`` or on completion order.

    Returns:
        Report with per-fold results and mean/std over all folds of all repeats
    """
    band = Band.parse(band)
    model_config = model_config or ModelConfig()
    train_config = train_config or TrainConfig()
    if jobs < 1:
        raise FoldError(f"jobs must be at least 1, got {jobs}")
    started = time.perf_counter()
    if batches is None:
        if manifest is None:
            raise FoldError("run_experiment needs a manifest or preprocessed batches")
        batches, skipped = preprocess_manifest(manifest, band)
    batches = list(batches)
    ids = [b.subject_id for b in batches]
    labels = [int(b.label) for b in batches]

    units: List[Tuple[int, Fold]] = []
    for repeat in range(n_repeats):
        plan = subject_kfold(ids, labels, n_folds, seed, repeat)
        units.extend((repeat, fold) for fold in plan)

    logger.info(f"Cross-validating {len(ids)} subjects ({band.value}): {n_repeats} x {n_folds} folds, {jobs} job(s)")
    results = Parallel(n_jobs=jobs, return_as="generator")(
        delayed(run_fold)(batches, fold, repeat, model_config, train_config, seed)
        for repeat, fold in units
    )
    folds: List[FoldResult] = []
    for result in results:
        folds.append(result)
        if progress_callback:
            progress_callback("fold_complete", {
                "done": len(folds),
                "total": len(units),
                "repeat": result.repeat,
                "fold": result.fold,
                "accuracy": result.subject["accuracy"],
            })

    config = {
        "model": model_config.model_dump(),
        "train": train_config.model_dump(),
        "n_folds": n_folds,
        "n_repeats": n_repeats,
        "seed": seed,
    }
    return Report.build(band.value, config, folds, skipped=list(skipped or []),
                        runtime_s=time.perf_counter() - started)


def run_ablation(manifest: Optional[Manifest] = None,
                 stages: Sequence[int] = tuple(range(1, settings.MAX_STAGES + 1)),
                 modes: Sequence[str] = ("constant", "exponential"),
                 band: Union[str, Band] = Band.FULL,
                 model_config: Optional[ModelConfig] = None,
                 batches: Optional[Sequence[SegmentBatch]] = None,
                 progress_callback: Optional[ProgressCallback] = None,
                 **kwargs) -> List[Report]:
    """Cross-validate every (encoder depth, dilation mode) combination

    Constant mode uses m_j = ``model_config.dilation`` at every stage;
    exponential mode uses 2, 4, 8, ... The data is preprocessed once.
    """
    band = Band.parse(band)
    base = model_config or ModelConfig()
    skipped: List[str] = []
    if batches is None:
        if manifest is None:
            raise FoldError("run_ablation needs a manifest or preprocessed batches")
        batches, skipped = preprocess_manifest(manifest, band)
    reports = []
    for n_stages in stages:
        for mode in modes:
            config = ModelConfig(**{**base.model_dump(), "n_stages": n_stages, "dilation_mode": mode, "dilations": None})
            logger.info(f"Ablation: {n_stages} stage(s), {mode} dilations {config.stage_dilations()}")
            reports.append(run_experiment(band=band, model_config=config, batches=batches, skipped=skipped, **kwargs))
            if progress_callback:
                progress_callback("ablation_complete", {"n_stages": n_stages, "mode": mode, "report": reports[-1]})
    return reports


def run_band_sweep(manifest: Manifest,
                   bands: Sequence[Union[str, Band]] = tuple(RHYTHMS) + (Band.FULL,),
                   progress_callback: Optional[ProgressCallback] = None,
                   **kwargs) -> Dict[str, Report]:
    """Cross-validate the same protocol on each rhythm and on the full band"""
    reports: Dict[str, Report] = {}
    for band in bands:
        band = Band.parse(band)
        batches, skipped = preprocess_manifest(manifest, band)
        reports[band.value] = run_experiment(band=band, batches=batches, skipped=skipped, **kwargs)
        if progress_callback:
            progress_callback("band_complete", {"band": band.value, "report": reports[band.value]})
    return reports
