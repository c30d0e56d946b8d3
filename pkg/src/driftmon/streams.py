"""Time-indexed multivariate stream container, batch segmentation, CSV ingestion.

Ticks are abstract 1-based integers at the base frequency (e.g. quarter
hours); calendar structure is a feature-construction concern and lives in
:mod:`driftmon.features`. A StreamSet is immutable after construction and
safe to share across workers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IncompletePanel, ParseError

CSV_HEADER = ["tick", "stream_id", "value"]


@dataclass(frozen=True)
class StreamSet:
    """Balanced panel of D real-valued streams on a shared tick index 1..T.

    values[t-1, d] is the observation of stream d at tick t. All streams
    share the same length and there are no missing cells.
    """

    values: np.ndarray  # (T, D) float64
    stream_ids: tuple[str, ...]
    slots_per_batch: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a (T, D) matrix")
        if values.shape[1] != len(self.stream_ids):
            raise ValueError("stream_ids length must match number of columns")
        if len(set(self.stream_ids)) != len(self.stream_ids):
            raise ValueError("stream_ids must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if self.slots_per_batch < 1:
            raise ValueError("slots_per_batch must be >= 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stream_ids", tuple(self.stream_ids))

    @property
    def n_ticks(self) -> int:
        return self.values.shape[0]

    @property
    def n_streams(self) -> int:
        return self.values.shape[1]

    def value_at(self, tick: int, stream: int) -> float:
        """Observation of stream column ``stream`` at 1-based ``tick``."""
        if not 1 <= tick <= self.n_ticks:
            raise IndexError(f"tick {tick} outside 1..{self.n_ticks}")
        return float(self.values[tick - 1, stream])


@dataclass(frozen=True)
class BatchWindow:
    """A forecast origin: batch end tick plus the horizon to cover."""

    batch_end: int
    horizon: int
    slots_per_batch: int = field(default=0)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.slots_per_batch and self.batch_end % self.slots_per_batch != 0:
            raise ValueError(
                f"batch_end {self.batch_end} is not a multiple of "
                f"{self.slots_per_batch}"
            )

    @property
    def target_ticks(self) -> range:
        return range(self.batch_end + 1, self.batch_end + self.horizon + 1)


def batch_ends(stream_set: StreamSet) -> list[int]:
    """All complete batch-end ticks: B, 2B, ... <= T.

    An incomplete trailing batch is excluded; decisions only happen at
    complete batch ends.
    """
    b = stream_set.slots_per_batch
    return list(range(b, stream_set.n_ticks + 1, b))


def ingest_csv(path: str, slots_per_batch: int = 60) -> StreamSet:
    """Read a ``tick,stream_id,value`` CSV into a StreamSet.

    The file must contain the full tick x stream grid with ticks 1..T.
    Streams are ordered by first appearance. Raises ParseError with the
    offending 1-based line number for malformed rows or non-finite values,
    IncompletePanel for a missing grid cell.
    """
    cells: dict[tuple[int, str], float] = {}
    stream_order: list[str] = []
    max_tick = 0
    with open(path, newline="", encoding="utf-8") as handle:
        numbered = [
            (line_no, line)
            for line_no, line in enumerate(handle, start=1)
            if line.strip() and not line.lstrip().startswith("#")
        ]
        if not numbered:
            raise ParseError(1, "empty file, expected header tick,stream_id,value")
        header_no, header_line = numbered[0]
        header = next(csv.reader([header_line]))
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(header_no, f"expected header {','.join(CSV_HEADER)}")
        for line_no, line in numbered[1:]:
            row = next(csv.reader([line]))
            if len(row) != 3:
                raise ParseError(line_no, f"expected 3 fields, got {len(row)}")
            raw_tick, stream_id, raw_value = row[0].strip(), row[1].strip(), row[2].strip()
            try:
                tick = int(raw_tick)
            except ValueError:
                raise ParseError(line_no, f"tick {raw_tick!r} is not an integer")
            if tick < 1:
                raise ParseError(line_no, f"tick {tick} must be >= 1")
            try:
                value = float(raw_value)
            except ValueError:
                raise ParseError(line_no, f"value {raw_value!r} is not a number")
            if not math.isfinite(value):
                raise ParseError(line_no, f"value {raw_value!r} is not finite")
            key = (tick, stream_id)
            if key in cells:
                raise ParseError(line_no, f"duplicate cell tick={tick}, stream={stream_id!r}")
            if stream_id not in stream_order:
                stream_order.append(stream_id)
            cells[key] = value
            max_tick = max(max_tick, tick)

    if not cells:
        raise ParseError(header_no + 1, "no data rows")
    values = np.empty((max_tick, len(stream_order)))
    for tick in range(1, max_tick + 1):
        for col, stream_id in enumerate(stream_order):
            try:
                values[tick - 1, col] = cells[(tick, stream_id)]
            except KeyError:
                raise IncompletePanel(tick, stream_id)
    return StreamSet(values=values, stream_ids=tuple(stream_order),
                     slots_per_batch=slots_per_batch)


def write_csv(stream_set: StreamSet, path: str, header_comment: str | None = None) -> None:
    """Serialize a StreamSet to the ``tick,stream_id,value`` schema.

    ``header_comment`` (without the leading ``#``) is written as the first
    line when given; readers skip ``#`` lines. Float formatting uses repr so
    a write/read round trip is exact.
    """
    with open(path, "w", newline="", encoding="utf-8") as handle:
        if header_comment:
            handle.write(f"# {header_comment}\n")
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for tick in range(1, stream_set.n_ticks + 1):
            for col, stream_id in enumerate(stream_set.stream_ids):
                writer.writerow([tick, stream_id, repr(float(stream_set.values[tick - 1, col]))])
