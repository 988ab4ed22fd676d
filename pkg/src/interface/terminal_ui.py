"""
Rich-powered terminal output for the command-line tools

Tables go to stdout; progress bars go to stderr next to the log records so
they never mix with data.
"""
from typing import Any, Callable, Dict, Optional, Sequence

from rich import box
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

from config import settings
from src.dsp.segmentation import SegmentBatch
from src.eegio.manifest import Manifest
from src.evaluation.metrics import METRIC_NAMES
from src.evaluation.report import LEVELS, Report


class TerminalUI:
    """Summary tables and progress reporting for the CLI"""

    def __init__(self, console: Optional[Console] = None, quiet: bool = False) -> None:
        """Initialize the terminal UI

        Args:
            console: Output console for tables; defaults to stdout
            quiet: Suppress progress bars
        """
        self.console = console or Console()
        self.status_console = Console(stderr=True)
        self.quiet = quiet

        # Theme colors
        self.theme = {
            "accent": "blue",
            "secondary": "cyan",
            "success": "green",
            "warning": "yellow",
            "error": "red",
            "muted": "dim white"
        }

    def _table(self, title: str, *columns: str) -> Table:
        table = Table(box=box.ROUNDED, title=title, border_style=self.theme["secondary"])
        for i, column in enumerate(columns):
            style = f"bold {self.theme['secondary']}" if i == 0 else "white"
            table.add_column(column, style=style, justify="left" if i == 0 else "right")
        return table

    def show_key_values(self, title: str, values: Dict[str, Any]) -> None:
        table = self._table(title, "Item", "Value")
        for key, value in values.items():
            if isinstance(value, (list, tuple)):
                value_display = ", ".join(str(v) for v in value)
            elif isinstance(value, float):
                value_display = f"{value:,.4g}"
            elif isinstance(value, int):
                value_display = f"{value:,}"
            else:
                value_display = str(value)
            table.add_row(key.replace("_", " ").title(), value_display)
        self.console.print(table)

    def show_synth(self, manifest: Manifest, out_dir: str) -> None:
        labels = [label.name for label in manifest.labels]
        self.show_key_values("Synthetic dataset", {
            "subjects": len(manifest),
            "hc": labels.count("HC"),
            "ad": labels.count("AD"),
            "output": out_dir,
        })

    def show_preprocess(self, batches: Sequence[SegmentBatch], skipped: Sequence[str], band: str, out_dir: str) -> None:
        table = self._table(f"Segments ({band})", "Subject", "Label", "Segments")
        for batch in batches:
            table.add_row(batch.subject_id, batch.label.name, str(len(batch)))
        self.console.print(table)
        self.show_key_values("Preprocessing", {
            "subjects": len(batches),
            "segments": sum(len(b) for b in batches),
            "skipped": len(skipped),
            "band": band,
            "archive": out_dir,
        })

    def show_metrics(self, title: str, by_level: Dict[str, Dict[str, float]]) -> None:
        """Fractions per level, shown as percentages"""
        table = self._table(title, "Metric", *[level.title() for level in by_level])
        for name in METRIC_NAMES:
            table.add_row(name.title(), *[f"{100.0 * values[name]:.2f}%" for values in by_level.values()])
        self.console.print(table)

    def show_report(self, report: Report) -> None:
        title = f"Cross-validation ({report.band}, {report.n_repeats} repeat(s), {len(report.folds)} folds)"
        table = self._table(title, "Metric", *[level.title() for level in LEVELS])
        for name in METRIC_NAMES:
            cells = [f"{report.summary[level][name].mean:.2f} ± {report.summary[level][name].std:.2f}" for level in LEVELS]
            table.add_row(name.title(), *cells)
        self.console.print(table)
        if report.skipped:
            self.console.print(f"[{self.theme['warning']}]Skipped subjects: {', '.join(report.skipped)}[/]")

    def show_reports(self, title: str, rows: Dict[str, Report]) -> None:
        """One row per run with mean ± std subject and segment accuracy"""
        table = self._table(title, "Run", "Segment accuracy", "Subject accuracy", "Subject F1")
        for name, report in rows.items():
            seg = report.summary["segment"]["accuracy"]
            subj = report.summary["subject"]["accuracy"]
            f1 = report.summary["subject"]["f1"]
            table.add_row(name, f"{seg.mean:.2f} ± {seg.std:.2f}", f"{subj.mean:.2f} ± {subj.std:.2f}",
                          f"{f1.mean:.2f} ± {f1.std:.2f}")
        self.console.print(table)

    def show_bench(self, results: Dict[str, Any]) -> None:
        table = self._table("Benchmark", "Quantity", "Measured", "Reported")
        table.add_row("Parameters", f"{results['params']:,}", f"{settings.REPORTED_PARAMS:,}")
        table.add_row("GFLOPs / segment", f"{results['gflops_per_segment']:.4f}", "")
        table.add_row(f"GFLOPs / batch of {settings.BENCH_BATCH}", f"{results['gflops_per_batch']:.3f}",
                      f"{settings.REPORTED_GFLOPS}")
        table.add_row("Segments / s", f"{results['throughput']:,.0f}", f"{settings.REPORTED_THROUGHPUT:,}")
        self.console.print(table)
        self.console.print(f"[{self.theme['muted']}]{results['segments']:,} segments in {results['seconds']:.1f}s; "
                           f"reported figures come from different hardware[/]")

    def run_with_progress(self, description: str, total: Optional[int], fn: Callable[[Callable], Any]) -> Any:
        """Run ``fn(progress_callback)`` while showing a progress bar

        The callback accepts ``(stage, details)`` events from the training
        and evaluation code and advances the bar once per completed unit.
        """
        if self.quiet:
            return fn(lambda stage, details=None: None)
        with Progress(
            SpinnerColumn(),
            TextColumn(f"[bold {self.theme['secondary']}]{description}[/]"),
            BarColumn(),
            TaskProgressColumn(),
            TextColumn("[bold cyan]{task.description}[/bold cyan]"),
            console=self.status_console,
            transient=True,
        ) as progress:
            task = progress.add_task("", total=total)

            # Use closure to update progress
            def progress_callback(stage: str, details: Optional[dict] = None) -> None:
                details = details or {}
                if stage == "epoch_complete":
                    progress.update(task, advance=1, description=f"loss {details['loss']:.4f}")
                elif stage == "fold_complete":
                    progress.update(task, advance=1,
                                    description=f"repeat {details['repeat']} fold {details['fold']}: "
                                                f"{details['accuracy']:.1f}%")
                elif stage == "recording_complete":
                    progress.update(task, advance=1, description=details["subject_id"])
                else:
                    progress.update(task, advance=1, description=stage.replace("_", " "))

            return fn(progress_callback)

