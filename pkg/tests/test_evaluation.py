import csv

import numpy as np
import orjson
import pytest
from sklearn.metrics import accuracy_score, f1_score, precision_score, recall_score

from src.eegio.synth import SynthSpec, synthesize_dataset
from src.evaluation.experiment import run_ablation, run_band_sweep, run_experiment, run_fold
from src.evaluation.folds import Fold, subject_kfold
from src.evaluation.metrics import Confusion, confusion, metrics
from src.evaluation.report import FoldResult, Report, emit_report, load_report
from src.exceptions import FoldError, ReportError, ShapeError
from src.model.config import ModelConfig, TrainConfig
from src.pipeline.preprocess import preprocess_manifest

FAST_MODEL = ModelConfig(d_model=4, bottleneck=2, n_stages=1, dropout=0.0)
FAST_TRAIN = TrainConfig(epochs=1, batch_size=32, lr=1e-3)

ACCEPTANCE_MODEL = ModelConfig(d_model=16, bottleneck=8, n_stages=2, dropout=0.1)
ACCEPTANCE_TRAIN = TrainConfig(epochs=100, batch_size=64, lr=1e-3)

# Classes differ in alpha power only; the other rhythms are shared and strong
ALPHA_SEPARABLE_POWERS = {
    "HC": {"delta": 0.6, "theta": 0.6, "alpha": 1.0, "beta": 0.6, "gamma": 0.2},
    "AD": {"delta": 0.6, "theta": 0.6, "alpha": 0.05, "beta": 0.6, "gamma": 0.2},
}


def subjects(n_per_class):
    ids = [f"HC-{i}" for i in range(n_per_class)] + [f"AD-{i}" for i in range(n_per_class)]
    return ids, [0] * n_per_class + [1] * n_per_class


def test_kfold_partitions_subjects():
    ids, labels = subjects(10)
    plan = subject_kfold(ids, labels, k=5, seed=0, repeat=0)
    assert len(plan) == 5
    tested = [s for fold in plan for s in fold.test_ids]
    assert sorted(tested) == sorted(ids)
    for fold in plan:
        assert not set(fold.train_ids) & set(fold.test_ids)
        assert sum(s.startswith("AD") for s in fold.test_ids) == 2


def test_kfold_is_seeded_per_repeat():
    ids, labels = subjects(10)
    a = subject_kfold(ids, labels, 5, seed=3, repeat=0)
    assert a == subject_kfold(ids, labels, 5, seed=3, repeat=0)
    assert a != subject_kfold(ids, labels, 5, seed=3, repeat=1)


def test_kfold_falls_back_without_stratification():
    ids, labels = subjects(3)
    plan = subject_kfold(ids, labels, k=4, seed=0)
    assert sorted(s for f in plan for s in f.test_ids) == sorted(ids)


@pytest.mark.parametrize("k,n", [(1, 4), (5, 2)])
def test_kfold_rejects(k, n):
    ids, labels = subjects(n)
    with pytest.raises(FoldError):
        subject_kfold(ids, labels, k=k)


def test_kfold_rejects_single_class():
    with pytest.raises(FoldError):
        subject_kfold(["a", "b", "c"], [1, 1, 1], k=2)


def test_confusion_counts():
    c = confusion([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert c == Confusion(tp=2, tn=1, fp=1, fn=1)
    assert (c + c).total == 10
    with pytest.raises(ShapeError):
        confusion([1, 0], [1])


def test_metrics_values():
    m = metrics(Confusion(tp=6, tn=3, fp=2, fn=1))
    assert m.precision == pytest.approx(0.75)
    assert m.recall == pytest.approx(6 / 7)
    assert m.f1 == pytest.approx(2 * 0.75 * (6 / 7) / (0.75 + 6 / 7))
    assert m.accuracy == pytest.approx(0.75)
    assert not m.undefined


def test_metrics_zero_denominators():
    m = metrics(Confusion(tn=4))
    assert (m.precision, m.recall, m.f1, m.accuracy) == (0.0, 0.0, 0.0, 1.0)
    assert m.undefined == {"precision", "recall", "f1"}
    with pytest.raises(ReportError, match="empty confusion"):
        metrics(Confusion())


def test_metrics_agree_with_sklearn_on_random_confusions():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 1000:
        tp, tn, fp, fn = (int(v) for v in rng.integers(0, 12, size=4))
        if tp + tn + fp + fn == 0:
            continue
        y_true = [1] * tp + [0] * tn + [0] * fp + [1] * fn
        y_pred = [1] * tp + [0] * tn + [1] * fp + [0] * fn
        c = confusion(y_true, y_pred)
        assert c == Confusion(tp=tp, tn=tn, fp=fp, fn=fn)
        m = metrics(c)
        assert m.precision == pytest.approx(precision_score(y_true, y_pred, zero_division=0))
        assert m.recall == pytest.approx(recall_score(y_true, y_pred, zero_division=0))
        assert m.f1 == pytest.approx(f1_score(y_true, y_pred, zero_division=0))
        assert m.accuracy == pytest.approx(accuracy_score(y_true, y_pred))
        assert min(m.precision, m.recall) - 1e-12 <= m.f1 <= max(m.precision, m.recall) + 1e-12
        checked += 1


def fold_result(repeat, fold, accuracy):
    c = Confusion(tp=1, tn=1, fp=0, fn=0) if accuracy else Confusion(tp=0, tn=0, fp=1, fn=1)
    return FoldResult.from_counts(repeat, fold, ["a"], ["b"], c, c, metrics(c), metrics(c))


def test_report_summary_uses_population_std():
    folds = [fold_result(0, 0, True), fold_result(0, 1, False), fold_result(1, 0, True), fold_result(1, 1, True)]
    report = Report.build("alpha", {"seed": 0}, folds)
    assert report.n_repeats == 2
    assert report.mean("subject", "accuracy") == pytest.approx(75.0)
    assert report.summary["segment"]["accuracy"].std == pytest.approx(np.std([100, 0, 100, 100]))
    with pytest.raises(ReportError):
        Report.build("alpha", {}, [])


def test_emit_report_json_and_csv(tmp_path):
    report = Report.build("full", {"seed": 1}, [fold_result(0, 0, True), fold_result(0, 1, False)], runtime_s=3.5)
    emit_report(report, tmp_path / "r.json")
    data = orjson.loads((tmp_path / "r.json").read_bytes())
    assert "runtime_s" not in data
    assert sorted(data) == ["band", "config", "folds", "skipped", "summary"]
    assert data["summary"]["subject"]["accuracy"] == {"mean": 50.0, "std": 50.0}
    assert load_report(tmp_path / "r.json").folds == report.folds

    emit_report(report, tmp_path / "timed.json", include_runtime=True)
    assert orjson.loads((tmp_path / "timed.json").read_bytes())["runtime_s"] == 3.5

    emit_report(report, tmp_path / "r.csv", fmt="csv")
    with open(tmp_path / "r.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["repeat", "fold", "level", "metric", "value"]
    assert len(rows) == 1 + 2 * 2 * 4
    assert rows[1][:4] == ["0", "0", "segment", "precision"]

    with pytest.raises(ReportError):
        emit_report(report, tmp_path / "r.xml", fmt="xml")


def test_emit_report_is_byte_stable(tmp_path):
    report = Report.build("full", {"b": 1, "a": 2}, [fold_result(0, 0, True)], runtime_s=1.0)
    emit_report(report, tmp_path / "a.json")
    emit_report(report.model_copy(update={"runtime_s": 99.0}), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_load_report_rejects_garbage(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ReportError):
        load_report(tmp_path / "bad.json")


@pytest.fixture
def small_batches(small_dataset):
    manifest, _, _ = small_dataset
    batches, _ = preprocess_manifest(manifest, "full")
    return batches


def test_run_fold_rejects_leakage(small_batches):
    ids = [b.subject_id for b in small_batches]
    fold = Fold(index=0, train_ids=tuple(ids[:4]), test_ids=(ids[0], ids[5]))
    with pytest.raises(FoldError, match="train and test"):
        run_fold(small_batches, fold, 0, FAST_MODEL, FAST_TRAIN, seed=0)


def test_run_fold_scores_test_subjects(small_batches):
    ids = [b.subject_id for b in small_batches]
    fold = Fold(index=1, train_ids=tuple(ids[1:5]), test_ids=(ids[0], ids[5]))
    result = run_fold(small_batches, fold, 0, FAST_MODEL, FAST_TRAIN, seed=0)
    assert result.test_subjects == [ids[0], ids[5]]
    assert sum(result.subject_confusion.values()) == 2
    assert sum(result.segment_confusion.values()) == 22
    assert 0.0 <= result.segment["accuracy"] <= 100.0


def test_run_experiment_structure(small_dataset):
    manifest, _, _ = small_dataset
    events = []
    report = run_experiment(manifest, "full", FAST_MODEL, FAST_TRAIN, n_folds=3, n_repeats=2, seed=0,
                            progress_callback=lambda s, d: events.append(d))
    assert len(report.folds) == 6
    assert report.n_repeats == 2
    assert len(events) == 6
    assert report.config["n_folds"] == 3 and report.config["model"]["d_model"] == 4
    for repeat in range(2):
        tested = [s for f in report.folds if f.repeat == repeat for s in f.test_subjects]
        assert sorted(tested) == sorted(manifest.subject_ids)


def test_run_experiment_needs_data():
    with pytest.raises(FoldError):
        run_experiment()


def test_run_experiment_is_reproducible(small_batches):
    kwargs = dict(model_config=FAST_MODEL, train_config=FAST_TRAIN, n_folds=3, n_repeats=1, seed=4)
    a = run_experiment(batches=small_batches, **kwargs)
    b = run_experiment(batches=small_batches, **kwargs)
    assert a.model_dump(exclude={"runtime_s"}) == b.model_dump(exclude={"runtime_s"})


def test_run_ablation_grid(small_batches):
    reports = run_ablation(stages=[1, 2], modes=["constant", "exponential"], model_config=FAST_MODEL,
                           batches=small_batches, train_config=FAST_TRAIN, n_folds=2, n_repeats=1)
    grid = [(r.config["model"]["n_stages"], r.config["model"]["dilation_mode"]) for r in reports]
    assert grid == [(1, "constant"), (1, "exponential"), (2, "constant"), (2, "exponential")]


@pytest.mark.slow
def test_results_do_not_depend_on_jobs(small_batches):
    kwargs = dict(model_config=FAST_MODEL, train_config=FAST_TRAIN, n_folds=3, n_repeats=1, seed=1)
    serial = run_experiment(batches=small_batches, jobs=1, **kwargs)
    parallel = run_experiment(batches=small_batches, jobs=2, **kwargs)
    assert serial.model_dump(exclude={"runtime_s"}) == parallel.model_dump(exclude={"runtime_s"})


@pytest.mark.slow
def test_band_sweep_reports_every_band(small_dataset):
    manifest, _, _ = small_dataset
    reports = run_band_sweep(manifest, bands=["alpha", "full"], model_config=FAST_MODEL,
                             train_config=FAST_TRAIN, n_folds=2, n_repeats=1)
    assert list(reports) == ["alpha", "full"]
    assert reports["alpha"].band == "alpha"


def cross_validate(manifest, band):
    return run_experiment(manifest, band, ACCEPTANCE_MODEL, ACCEPTANCE_TRAIN, n_folds=5, n_repeats=1, seed=0)


@pytest.mark.slow
def test_end_to_end_separates_synthetic_classes(tmp_path):
    manifest, _ = synthesize_dataset(SynthSpec(n_subjects_per_class=8, duration_s=16.0, seed=11), tmp_path)
    report = cross_validate(manifest, "full")
    assert len(report.folds) == 5
    assert report.mean("segment", "accuracy") >= 85.0
    assert report.mean("subject", "accuracy") >= 95.0


@pytest.mark.slow
def test_alpha_band_run_matches_full_band_on_alpha_separable_data(tmp_path):
    spec = SynthSpec(n_subjects_per_class=8, duration_s=16.0, band_powers=ALPHA_SEPARABLE_POWERS, seed=12)
    manifest, _ = synthesize_dataset(spec, tmp_path)
    alpha = cross_validate(manifest, "alpha")
    full = cross_validate(manifest, "full")
    assert alpha.mean("segment", "accuracy") >= 85.0
    assert alpha.mean("subject", "accuracy") >= 95.0
    assert alpha.mean("subject", "accuracy") >= full.mean("subject", "accuracy")
