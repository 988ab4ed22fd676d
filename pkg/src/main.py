"""
tokeneeg - command-line entry point
"""
import os
import sys
import logging
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import typer
import orjson
from pydantic import ValidationError

# Add project root to Python path for imports
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, project_root)

# Now we can import from the project root
from config import settings

from src.dsp.segmentation import SegmentBatch
from src.eegio.manifest import Manifest
from src.eegio.synth import synthesize_dataset
from src.evaluation.experiment import run_ablation, run_band_sweep, run_experiment
from src.evaluation.metrics import confusion, metrics
from src.evaluation.report import emit_report
from src.exceptions import TokenEEGError
from src.interface.cli_config import CliConfig
from src.interface.terminal_ui import TerminalUI
from src.model.bench import benchmark
from src.model.checkpoint import load_checkpoint, save_checkpoint
from src.model.training import predict_segments, predict_subjects, train
from src.pipeline.archive import read_archive, write_archive
from src.pipeline.preprocess import preprocess_manifest, stack_batches
from src.wavelet.bands import Band

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, no_args_is_help=True,
                  help="DeepTokenEEG: EEG preprocessing, training and subject-independent evaluation")

ui = TerminalUI()

CONFIG_OPTION = typer.Option(None, "--config", help="JSON file of settings; flags take precedence")
SEED_OPTION = typer.Option(None, "--seed", help=f"Master seed [default: {settings.SEED}]")
BAND_OPTION = typer.Option(None, "--band", help="delta, theta, alpha, beta, gamma or full [default: full]")
JOBS_OPTION = typer.Option(None, "--jobs", help="Worker processes for folds")
MANIFEST_OPTION = typer.Option(None, "--manifest", help="Dataset manifest (JSON lines)")
ARCHIVE_OPTION = typer.Option(None, "--archive", help="Segment archive written by 'preprocess'")


def _resolve(config: Optional[Path], **flags) -> CliConfig:
    try:
        resolved = CliConfig.resolve(config, **flags)
        Band.parse(resolved.band)
        return resolved
    except (ValidationError, TokenEEGError, ValueError, OSError) as e:
        raise typer.BadParameter(str(e)) from e


def _run(fn: Callable[[], None]) -> None:
    """Run a command body; library and IO errors exit with status 1"""
    try:
        fn()
    except (TokenEEGError, OSError) as e:
        logger.error(str(e))
        raise typer.Exit(code=1)


def _load_batches(manifest: Optional[Path], archive: Optional[Path], band: str) -> Tuple[List[SegmentBatch], List[str]]:
    if archive is not None:
        batches, index = read_archive(archive, Band.parse(band).value)
        if not batches:
            raise TokenEEGError(f"archive {archive} holds no {band} segments")
        return batches, list(index.get("skipped", []))
    if manifest is not None:
        m = Manifest.read(manifest)
        return ui.run_with_progress("Preprocessing", len(m),
                                    lambda cb: preprocess_manifest(m, band, progress_callback=cb))
    raise typer.BadParameter("give --manifest or --archive")


def _model_flags(d_model, bottleneck, n_stages, dilation_mode) -> dict:
    return {"d_model": d_model, "bottleneck": bottleneck, "n_stages": n_stages, "dilation_mode": dilation_mode}


@app.callback()
def main(log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
         quiet: bool = typer.Option(False, "--quiet", help="Hide progress bars")) -> None:
    settings.configure_logging(log_level)
    ui.quiet = quiet


@app.command()
def synth(out: Path = typer.Option(..., "--out", help="Output directory"),
          subjects: Optional[int] = typer.Option(None, "--subjects", help="Subjects per class"),
          duration: Optional[float] = typer.Option(None, "--duration", help="Recording length in seconds"),
          fs: Optional[float] = typer.Option(None, "--fs", help="Sampling rate in Hz"),
          montage: Optional[str] = typer.Option(None, "--montage", help="standard, reduced or extended"),
          noise: Optional[float] = typer.Option(None, "--noise", help="White noise standard deviation"),
          seed: Optional[int] = SEED_OPTION,
          config: Optional[Path] = CONFIG_OPTION) -> None:
    """Write a labelled synthetic HC/AD dataset and its manifest"""
    cfg = _resolve(config, subjects=subjects, duration=duration, fs=fs, montage=montage, noise=noise, seed=seed)

    def body() -> None:
        manifest, _ = synthesize_dataset(cfg.synth(), out)
        ui.show_synth(manifest, str(out))

    _run(body)


@app.command()
def preprocess(manifest: Path = typer.Option(..., "--manifest", help="Dataset manifest (JSON lines)"),
               out: Path = typer.Option(..., "--out", help="Archive directory"),
               band: Optional[str] = BAND_OPTION,
               config: Optional[Path] = CONFIG_OPTION) -> None:
    """Harmonize, filter, resample, band-split, segment and normalize a dataset"""
    cfg = _resolve(config, band=band)

    def body() -> None:
        batches, skipped = _load_batches(manifest, None, cfg.band)
        write_archive(batches, out, skipped)
        ui.show_preprocess(batches, skipped, Band.parse(cfg.band).value, str(out))

    _run(body)


@app.command("train")
def train_cmd(out: Path = typer.Option(..., "--out", help="Checkpoint file"),
              manifest: Optional[Path] = MANIFEST_OPTION,
              archive: Optional[Path] = ARCHIVE_OPTION,
              band: Optional[str] = BAND_OPTION,
              epochs: Optional[int] = typer.Option(None, "--epochs", help="Training epochs; 0 keeps the initial weights"),
              batch_size: Optional[int] = typer.Option(None, "--batch-size"),
              lr: Optional[float] = typer.Option(None, "--lr", help="Adam learning rate"),
              d_model: Optional[int] = typer.Option(None, "--d-model"),
              bottleneck: Optional[int] = typer.Option(None, "--bottleneck"),
              n_stages: Optional[int] = typer.Option(None, "--stages", help="Encoder stages (1-5)"),
              dilation_mode: Optional[str] = typer.Option(None, "--dilation-mode", help="constant or exponential"),
              seed: Optional[int] = SEED_OPTION,
              config: Optional[Path] = CONFIG_OPTION) -> None:
    """Train one model on every subject and save a checkpoint"""
    cfg = _resolve(config, band=band, epochs=epochs, batch_size=batch_size, lr=lr, seed=seed,
                   **_model_flags(d_model, bottleneck, n_stages, dilation_mode))

    def body() -> None:
        batches, _ = _load_batches(manifest, archive, cfg.band)
        x, y, _ = stack_batches(batches)
        train_config = cfg.training()
        result = ui.run_with_progress(
            "Training", train_config.epochs,
            lambda cb: train(x, y, cfg.model(), train_config, seed=cfg.seed, progress_callback=cb),
        )
        save_checkpoint(result.model, out)
        ui.show_key_values("Training", {
            "subjects": len(batches),
            "segments": len(x),
            "epochs": train_config.epochs,
            "final_loss": result.history[-1] if result.history else float("nan"),
            "parameters": result.model.n_params,
            "checkpoint": str(out),
        })

    _run(body)


@app.command("eval")
def eval_cmd(checkpoint: Path = typer.Option(..., "--checkpoint", help="Checkpoint written by 'train'"),
             manifest: Optional[Path] = MANIFEST_OPTION,
             archive: Optional[Path] = ARCHIVE_OPTION,
             band: Optional[str] = BAND_OPTION,
             out: Optional[Path] = typer.Option(None, "--out", help="Write the metrics as JSON"),
             config: Optional[Path] = CONFIG_OPTION) -> None:
    """Score a checkpoint at segment and subject level"""
    cfg = _resolve(config, band=band)

    def body() -> None:
        model = load_checkpoint(checkpoint)
        batches, _ = _load_batches(manifest, archive, cfg.band)
        x, y, ids = stack_batches(batches)
        _, pred = predict_segments(model, x)
        votes = predict_subjects(ids.tolist(), pred)
        truth = {b.subject_id: int(b.label) for b in batches}
        seg = metrics(confusion(y, pred))
        subj = metrics(confusion([truth[s] for s in votes], [int(v) for v in votes.values()]))
        by_level = {"segment": seg.as_dict(), "subject": subj.as_dict()}
        ui.show_metrics(f"Evaluation of {checkpoint.name}", by_level)
        if out is not None:
            os.makedirs(out.parent, exist_ok=True)
            with open(out, "wb") as f:
                f.write(orjson.dumps(by_level, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))

    _run(body)


@app.command()
def xval(out: Path = typer.Option(..., "--out", help="Report file"),
         manifest: Optional[Path] = MANIFEST_OPTION,
         archive: Optional[Path] = ARCHIVE_OPTION,
         band: Optional[str] = BAND_OPTION,
         folds: Optional[int] = typer.Option(None, "--folds"),
         repeats: Optional[int] = typer.Option(None, "--repeats"),
         epochs: Optional[int] = typer.Option(None, "--epochs"),
         batch_size: Optional[int] = typer.Option(None, "--batch-size"),
         lr: Optional[float] = typer.Option(None, "--lr"),
         d_model: Optional[int] = typer.Option(None, "--d-model"),
         bottleneck: Optional[int] = typer.Option(None, "--bottleneck"),
         n_stages: Optional[int] = typer.Option(None, "--stages"),
         dilation_mode: Optional[str] = typer.Option(None, "--dilation-mode"),
         fmt: str = typer.Option("json", "--format", help="json or csv"),
         include_runtime: bool = typer.Option(False, "--include-runtime", help="Record wall-clock time in the report"),
         jobs: Optional[int] = JOBS_OPTION,
         seed: Optional[int] = SEED_OPTION,
         config: Optional[Path] = CONFIG_OPTION) -> None:
    """Repeated subject-independent k-fold cross-validation"""
    if fmt not in ("json", "csv"):
        raise typer.BadParameter(f"unknown format {fmt!r}", param_hint="--format")
    cfg = _resolve(config, band=band, folds=folds, repeats=repeats, epochs=epochs, batch_size=batch_size, lr=lr,
                   jobs=jobs, seed=seed, **_model_flags(d_model, bottleneck, n_stages, dilation_mode))

    def body() -> None:
        batches, skipped = _load_batches(manifest, archive, cfg.band)
        report = ui.run_with_progress(
            "Cross-validating", cfg.folds * cfg.repeats,
            lambda cb: run_experiment(
                band=cfg.band, model_config=cfg.model(), train_config=cfg.training(),
                n_folds=cfg.folds, n_repeats=cfg.repeats, seed=cfg.seed, jobs=cfg.jobs,
                batches=batches, skipped=skipped, progress_callback=cb,
            ),
        )
        emit_report(report, out, fmt, include_runtime)
        ui.show_report(report)

    _run(body)


@app.command()
def bench(seconds: float = typer.Option(settings.BENCH_SECONDS, "--seconds", min=0.0, help="Minimum measuring time"),
          batch_size: int = typer.Option(settings.BENCH_BATCH, "--batch-size", min=1),
          d_model: Optional[int] = typer.Option(None, "--d-model"),
          bottleneck: Optional[int] = typer.Option(None, "--bottleneck"),
          n_stages: Optional[int] = typer.Option(None, "--stages"),
          dilation_mode: Optional[str] = typer.Option(None, "--dilation-mode"),
          seed: Optional[int] = SEED_OPTION,
          config: Optional[Path] = CONFIG_OPTION) -> None:
    """Parameter count, FLOPs and eval-mode throughput"""
    cfg = _resolve(config, seed=seed, **_model_flags(d_model, bottleneck, n_stages, dilation_mode))

    def body() -> None:
        ui.show_bench(benchmark(cfg.model(), seconds, batch_size, cfg.seed))

    _run(body)


@app.command()
def ablate(out: Path = typer.Option(..., "--out", help="Directory for one report per configuration"),
           manifest: Optional[Path] = MANIFEST_OPTION,
           archive: Optional[Path] = ARCHIVE_OPTION,
           band: Optional[str] = BAND_OPTION,
           stages: str = typer.Option("1,2,3,4,5", "--stages", help="Comma-separated encoder depths"),
           modes: str = typer.Option("constant,exponential", "--modes", help="Comma-separated dilation modes"),
           folds: Optional[int] = typer.Option(None, "--folds"),
           repeats: Optional[int] = typer.Option(None, "--repeats"),
           epochs: Optional[int] = typer.Option(None, "--epochs"),
           jobs: Optional[int] = JOBS_OPTION,
           seed: Optional[int] = SEED_OPTION,
           config: Optional[Path] = CONFIG_OPTION) -> None:
    """Cross-validate every encoder depth x dilation mode combination"""
    cfg = _resolve(config, band=band, folds=folds, repeats=repeats, epochs=epochs, jobs=jobs, seed=seed)
    try:
        stage_list = [int(s) for s in stages.split(",") if s.strip()]
    except ValueError as e:
        raise typer.BadParameter(str(e), param_hint="--stages") from e
    mode_list = [m.strip() for m in modes.split(",") if m.strip()]
    if not stage_list or any(not 1 <= s <= settings.MAX_STAGES for s in stage_list):
        raise typer.BadParameter(f"stages must lie in 1..{settings.MAX_STAGES}", param_hint="--stages")
    if not mode_list or any(m not in ("constant", "exponential") for m in mode_list):
        raise typer.BadParameter("modes must be constant or exponential", param_hint="--modes")

    def body() -> None:
        batches, skipped = _load_batches(manifest, archive, cfg.band)
        reports = ui.run_with_progress(
            "Ablation", len(stage_list) * len(mode_list),
            lambda cb: run_ablation(
                stages=stage_list, modes=mode_list, band=cfg.band, model_config=cfg.model(), batches=batches,
                progress_callback=cb, train_config=cfg.training(), n_folds=cfg.folds, n_repeats=cfg.repeats,
                seed=cfg.seed, jobs=cfg.jobs,
            ),
        )
        rows = {}
        for report in reports:
            name = f"{report.config['model']['n_stages']}-{report.config['model']['dilation_mode']}"
            report.skipped = list(skipped)
            emit_report(report, out / f"ablation-{name}.json")
            rows[name] = report
        ui.show_reports("Stage / dilation ablation", rows)

    _run(body)


@app.command()
def bands(manifest: Path = typer.Option(..., "--manifest", help="Dataset manifest (JSON lines)"),
          out: Path = typer.Option(..., "--out", help="Directory for one report per band"),
          folds: Optional[int] = typer.Option(None, "--folds"),
          repeats: Optional[int] = typer.Option(None, "--repeats"),
          epochs: Optional[int] = typer.Option(None, "--epochs"),
          jobs: Optional[int] = JOBS_OPTION,
          seed: Optional[int] = SEED_OPTION,
          config: Optional[Path] = CONFIG_OPTION) -> None:
    """Cross-validate each rhythm and the full band"""
    cfg = _resolve(config, folds=folds, repeats=repeats, epochs=epochs, jobs=jobs, seed=seed)

    def body() -> None:
        m = Manifest.read(manifest)
        reports = ui.run_with_progress(
            "Band sweep", len(Band),
            lambda cb: run_band_sweep(
                m, progress_callback=cb, model_config=cfg.model(), train_config=cfg.training(),
                n_folds=cfg.folds, n_repeats=cfg.repeats, seed=cfg.seed, jobs=cfg.jobs,
            ),
        )
        for name, report in reports.items():
            emit_report(report, out / f"band-{name}.json")
        ui.show_reports("Band sweep", reports)

    _run(body)


if __name__ == "__main__":
    app()
