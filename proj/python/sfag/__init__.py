"""Stylized-fact-aligned generative modeling of financial return series.

Everything here wraps the C++ core. Series cross the boundary as plain
lists of floats; reports come back as dicts matching the CLI's JSON schema.
"""

from sfag._core import (
    CheckpointError,
    CsvError,
    GpdFit,
    Model,
    __version__,
    acf,
    cfvc_matrix,
    evaluate_paths,
    fit_gpd_pot,
    ingest_returns,
    leverage_corr,
    load_checkpoint,
    run_momentum,
    simulate_garch,
    train,
    write_returns_csv,
)

__all__ = [
    "CheckpointError",
    "CsvError",
    "GpdFit",
    "Model",
    "__version__",
    "acf",
    "cfvc_matrix",
    "evaluate_paths",
    "fit_gpd_pot",
    "ingest_returns",
    "leverage_corr",
    "load_checkpoint",
    "run_momentum",
    "simulate_garch",
    "train",
    "write_returns_csv",
]
