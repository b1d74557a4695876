from .grid import ExperimentConfig, RunRecord, AverageRecord, run_grid, summarize
from .io import DataError, load_ohlc_csv, write_ohlc_csv
from .report import read_report, write_report
from .synthetic import synthetic_ohlc

__all__ = [
    "AverageRecord",
    "DataError",
    "ExperimentConfig",
    "RunRecord",
    "load_ohlc_csv",
    "read_report",
    "run_grid",
    "summarize",
    "synthetic_ohlc",
    "write_ohlc_csv",
    "write_report",
]
