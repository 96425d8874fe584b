from .report import CSV_COLUMNS, emit_csv, load_csv, render_plot, rows_to_csv, summarize
from .sweep import PHASES, BenchRow, Sweep, SweepConfig, run_pipeline, run_sweep

__all__ = [
    "CSV_COLUMNS", "PHASES", "BenchRow", "Sweep", "SweepConfig", "emit_csv", "load_csv",
    "render_plot", "rows_to_csv", "run_pipeline", "run_sweep", "summarize",
]
