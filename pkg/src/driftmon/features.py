"""Predictor construction: lagged demand across streams, trend, seasonal dummies.

Every forecaster consumes the same design so comparisons stay fair. The
column order is fixed: for each lag j (ascending), the lagged value of every
stream in panel order; then the scaled trend; then day-of-week dummies; then
hour-of-day dummies. Dummy blocks drop their first level as the reference so
the design stays full rank next to a model intercept.

Leakage freedom is structural: forecasts q steps past a batch end b use lags
t - j with j >= min(lags) >= q, so every predictor references ticks <= b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistory
from .streams import StreamSet

TICKS_PER_HOUR = 4  # base frequency is quarter-hourly


@dataclass(frozen=True)
class FeatureSpec:
    """Which predictors to build.

    lags are in ticks; slots_per_day sets both the seasonal day length and
    the trend scaling; hour dummies carve the day into slots_per_day / 4
    hourly levels.
    """

    lags: tuple[int, ...] = (60, 420)
    slots_per_day: int = 60
    days_per_week: int = 7
    include_trend: bool = True
    include_hour_dummies: bool = True
    include_dow_dummies: bool = True

    def __post_init__(self):
        if not self.lags:
            raise ValueError("lags must be nonempty")
        if any(j < 1 for j in self.lags):
            raise ValueError("lags must be positive")
        if len(set(self.lags)) != len(self.lags):
            raise ValueError("lags must be distinct")
        if self.slots_per_day < 1:
            raise ValueError("slots_per_day must be >= 1")
        if self.days_per_week < 1:
            raise ValueError("days_per_week must be >= 1")
        if self.include_hour_dummies and self.slots_per_day % TICKS_PER_HOUR != 0:
            raise ValueError("hour dummies need slots_per_day divisible by 4")
        object.__setattr__(self, "lags", tuple(sorted(self.lags)))

    @property
    def max_lag(self) -> int:
        return max(self.lags)

    @property
    def n_hour_levels(self) -> int:
        return self.slots_per_day // TICKS_PER_HOUR

    def n_columns(self, n_streams: int) -> int:
        p = len(self.lags) * n_streams
        if self.include_trend:
            p += 1
        if self.include_dow_dummies:
            p += self.days_per_week - 1
        if self.include_hour_dummies:
            p += self.n_hour_levels - 1
        return p

    def column_names(self, stream_ids: tuple[str, ...]) -> list[str]:
        names = [f"lag{j}_{sid}" for j in self.lags for sid in stream_ids]
        if self.include_trend:
            names.append("trend")
        if self.include_dow_dummies:
            names.extend(f"dow_{k}" for k in range(1, self.days_per_week))
        if self.include_hour_dummies:
            names.extend(f"hour_{k}" for k in range(1, self.n_hour_levels))
        return names


@dataclass(frozen=True)
class DesignMatrix:
    """Training rows (X, y) with stable column labels."""

    X: np.ndarray  # (n, p)
    y: np.ndarray  # (n,)
    column_names: tuple[str, ...]

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1:
            raise ValueError("X must be 2-D and y 1-D")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y row counts differ")
        if self.X.shape[1] != len(self.column_names):
            raise ValueError("column_names length must match X columns")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("design matrix entries must be finite")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]


def feature_matrix(stream_set: StreamSet, spec: FeatureSpec,
                   ticks: np.ndarray) -> np.ndarray:
    """Feature rows for each target tick in ``ticks`` (all must be > max lag)."""
    ticks = np.asarray(ticks, dtype=int)
    if ticks.size and int(ticks.min()) <= spec.max_lag:
        bad = int(ticks.min())
        raise InsufficientHistory(
            f"target tick {bad} needs history before tick 1 (max lag {spec.max_lag})"
        )
    values = stream_set.values
    blocks = [values[ticks - j - 1, :] for j in spec.lags]
    if spec.include_trend:
        blocks.append((ticks / spec.slots_per_day)[:, None])
    day = (ticks - 1) // spec.slots_per_day
    if spec.include_dow_dummies:
        dow = day % spec.days_per_week
        levels = np.arange(1, spec.days_per_week)
        blocks.append((dow[:, None] == levels[None, :]).astype(float))
    if spec.include_hour_dummies:
        hour = ((ticks - 1) % spec.slots_per_day) // TICKS_PER_HOUR
        levels = np.arange(1, spec.n_hour_levels)
        blocks.append((hour[:, None] == levels[None, :]).astype(float))
    return np.hstack(blocks)


def feature_vector(stream_set: StreamSet, spec: FeatureSpec, target_tick: int) -> np.ndarray:
    """The p-vector of predictors for a single target tick."""
    return feature_matrix(stream_set, spec, np.array([target_tick]))[0]


def training_set(stream_set: StreamSet, spec: FeatureSpec, target_stream: int,
                 window_end: int, window_days: int) -> DesignMatrix:
    """Rolling training sample for one stream.

    Rows cover the trailing window_days * slots_per_day ticks ending at
    window_end, restricted to ticks with full lag history. Raises
    InsufficientHistory when the trimmed window is empty.
    """
    if not 1 <= window_end <= stream_set.n_ticks:
        raise InsufficientHistory(
            f"window_end {window_end} outside stream range 1..{stream_set.n_ticks}"
        )
    start = window_end - window_days * spec.slots_per_day + 1
    first_usable = spec.max_lag + 1
    lo = max(start, first_usable, 1)
    if lo > window_end:
        raise InsufficientHistory(
            f"window ending at {window_end} has no ticks after the lag trim "
            f"(first usable tick is {first_usable})"
        )
    ticks = np.arange(lo, window_end + 1)
    X = feature_matrix(stream_set, spec, ticks)
    y = stream_set.values[ticks - 1, target_stream].copy()
    return DesignMatrix(X=X, y=y,
                        column_names=tuple(spec.column_names(stream_set.stream_ids)))
