"""Python bindings for the tempus forecasting benchmark harness."""

from ._core import (
    TempusError,
    __version__,
    aggregate,
    forecast,
    generate,
    mae,
    mape,
    mase,
    metric,
    mse,
    native_families,
    plan_windows,
    rmse,
    run_cli,
    skill_score,
    win_rate,
)

__all__ = [
    "TempusError",
    "__version__",
    "aggregate",
    "forecast",
    "generate",
    "mae",
    "mape",
    "mase",
    "metric",
    "mse",
    "native_families",
    "plan_windows",
    "rmse",
    "run_cli",
    "skill_score",
    "win_rate",
]
