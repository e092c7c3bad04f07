from .collapse import (CollapseFit, Dataset, DecayEstimate, FitError, algebraic_decay_pc,
                       collapse_quality, crossing_point, fit_collapse, quality)
from .recipes import FIGURES, recipe
from .sweep import CSV_COLUMNS, SpecError, SweepResult, SweepSpec, rows_to_csv, run_sweep

__all__ = [
    "CSV_COLUMNS", "CollapseFit", "Dataset", "DecayEstimate", "FIGURES", "FitError", "SpecError",
    "SweepResult", "SweepSpec", "algebraic_decay_pc", "collapse_quality", "crossing_point",
    "fit_collapse", "quality", "recipe", "rows_to_csv", "run_sweep",
]
