"""Request traces: container, CSV formats, and synthetic generators.

A trace is a (T, n) table of file ids, one row per slot, one column per user,
with -1 marking a user that requests nothing in that slot. Two CSV layouts are
supported: a raw per-request format `seq,file_id[,size]` that is assigned to
users on load, and an assigned format `t,user_id,file_id`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    CatalogOverflowError,
    ConfigurationError,
    TraceParseError,
)

IDLE = -1


@dataclass(frozen=True, eq=False)
class RequestTrace:
    """Immutable request table.

    Attributes:
        requests: (T, n) int array; requests[t, i] is the file id user i asks
            for in slot t, or -1 when idle.
        catalog: declared catalog size N; all file ids lie in [0, N).
    """

    requests: np.ndarray
    catalog: int

    def __post_init__(self):
        arr = np.asarray(self.requests, dtype=np.int64)
        if arr.ndim != 2:
            raise ConfigurationError("requests must be a (T, n) array")
        if self.catalog < 1:
            raise ConfigurationError("catalog size must be >= 1")
        if arr.size and (arr.min() < IDLE or arr.max() >= self.catalog):
            raise CatalogOverflowError(
                f"file ids must lie in [-1, {self.catalog}), got "
                f"[{arr.min()}, {arr.max()}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "requests", arr)

    @property
    def horizon(self) -> int:
        return self.requests.shape[0]

    @property
    def n(self) -> int:
        return self.requests.shape[1]

    def slot(self, t: int) -> np.ndarray:
        """Per-user file ids for slot t (-1 where idle)."""
        return self.requests[t]

    def counts(self, upto: int | None = None) -> np.ndarray:
        """(n, N) cumulative request counts over slots [0, upto)."""
        upto = self.horizon if upto is None else upto
        out = np.zeros((self.n, self.catalog), dtype=np.int64)
        for t in range(upto):
            row = self.requests[t]
            active = row >= 0
            np.add.at(out, (np.nonzero(active)[0], row[active]), 1)
        return out


# ---------- CSV formats ----------


def _data_rows(path: str | Path):
    """Yield (lineno, fields) for non-empty rows, skipping one header row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1:
                try:
                    int(row[0])
                except ValueError:
                    continue  # header row
            yield lineno, [c.strip() for c in row]


def load_trace(
    path: str | Path,
    n: int,
    catalog: int,
    assignment: str = "round_robin",
) -> RequestTrace:
    """Load a trace CSV and assign requests to users.

    `round_robin` reads raw rows `seq,file_id[,size]` (a size column is parsed
    and ignored); data row k goes to user k mod n, one slot per n rows, and
    file ids are densified to [0, catalog) in first-appearance order.
    `by_column` reads assigned rows `t,user_id,file_id` whose ids are taken
    as-is (they must already lie in range); the horizon is max(t)+1, so
    trailing all-idle slots do not round-trip.

    Raises:
        TraceParseError: malformed row (with its line number).
        CatalogOverflowError: more distinct files than `catalog`.
    """
    if assignment == "round_robin":
        remap: dict[int, int] = {}
        files: list[int] = []
        for lineno, row in _data_rows(path):
            if len(row) not in (2, 3):
                raise TraceParseError(lineno, f"expected 2-3 fields, got {len(row)}")
            try:
                raw = int(row[1])
            except ValueError:
                raise TraceParseError(lineno, f"bad file id {row[1]!r}") from None
            if raw not in remap:
                if len(remap) >= catalog:
                    raise CatalogOverflowError(
                        f"more than {catalog} distinct files in {path}"
                    )
                remap[raw] = len(remap)
            files.append(remap[raw])
        horizon = (len(files) + n - 1) // n
        table = np.full((horizon, n), IDLE, dtype=np.int64)
        for k, f in enumerate(files):
            table[k // n, k % n] = f
        return RequestTrace(requests=table, catalog=catalog)

    if assignment == "by_column":
        rows: list[tuple[int, int, int]] = []
        seen: set[tuple[int, int]] = set()
        for lineno, row in _data_rows(path):
            if len(row) != 3:
                raise TraceParseError(lineno, f"expected 3 fields, got {len(row)}")
            try:
                t, i, f = (int(c) for c in row)
            except ValueError:
                raise TraceParseError(lineno, f"bad integer in {row!r}") from None
            if t < 0 or not 0 <= i < n:
                raise TraceParseError(lineno, f"slot/user out of range in {row!r}")
            if not 0 <= f < catalog:
                raise CatalogOverflowError(f"line {lineno}: file id {f} >= {catalog}")
            if (t, i) in seen:
                raise TraceParseError(lineno, f"duplicate request for user {i} slot {t}")
            seen.add((t, i))
            rows.append((t, i, f))
        horizon = max((t for t, _, _ in rows), default=-1) + 1
        table = np.full((horizon, n), IDLE, dtype=np.int64)
        for t, i, f in rows:
            table[t, i] = f
        return RequestTrace(requests=table, catalog=catalog)

    raise ConfigurationError(f"unknown assignment mode {assignment!r}")


def save_trace(trace: RequestTrace, path: str | Path) -> None:
    """Write the assigned CSV format `t,user_id,file_id` (idle slots skipped)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "user_id", "file_id"])
        for t in range(trace.horizon):
            row = trace.requests[t]
            for i in np.nonzero(row >= 0)[0]:
                writer.writerow([t, int(i), int(row[i])])


# ---------- synthetic generators ----------


def zipf_weights(catalog: int, alpha: float) -> np.ndarray:
    """Normalized weights w_k proportional to (k+1)^-alpha."""
    if catalog < 1:
        raise ConfigurationError("catalog size must be >= 1")
    w = (np.arange(1, catalog + 1, dtype=np.float64)) ** (-float(alpha))
    return w / w.sum()


def gen_zipf(
    catalog: int, alpha: float, n: int, horizon: int, seed: int = 0
) -> RequestTrace:
    """Each user independently draws i.i.d. Zipf(alpha) requests every slot."""
    w = zipf_weights(catalog, alpha)
    rng = np.random.default_rng(seed)
    table = rng.choice(catalog, size=(horizon, n), p=w)
    return RequestTrace(requests=table.astype(np.int64), catalog=catalog)


def gen_renewal(
    catalog: int,
    n: int,
    horizon: int,
    inter_arrival: str = "geometric",
    params: dict | None = None,
    seed: int = 0,
) -> RequestTrace:
    """Per-(user, file) renewal request processes.

    `geometric` draws one categorical sample per (user, slot): file f with
    probability rates[i, f], idle otherwise. Each (user, file) pair then sees
    i.i.d. geometric inter-arrival times and the one-request-per-slot model
    constraint holds by construction. params: {"rates": (n, catalog) array}
    with row sums <= 1.

    `uniform_range` runs an explicit renewal clock per active (user, file)
    pair with inter-arrival ~ UniformInt[low, high]; when two files of one
    user land on the same slot, the higher file id defers to the next free
    slot (exact i.i.d. spacing therefore holds whenever at most one file per
    user is active). params: {"low": int, "high": int,
    "active": (n, catalog) bool mask}.
    """
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    table = np.full((horizon, n), IDLE, dtype=np.int64)

    if inter_arrival == "geometric":
        rates = np.asarray(params.get("rates"), dtype=np.float64)
        if rates.shape != (n, catalog):
            raise ConfigurationError(f"rates must have shape ({n}, {catalog})")
        if rates.min() < 0 or rates.sum(axis=1).max() > 1 + 1e-9:
            raise ConfigurationError("per-user rates must be >= 0 and sum to <= 1")
        for i in range(n):
            idle = max(0.0, 1.0 - rates[i].sum())
            p = np.append(rates[i], idle)
            p /= p.sum()
            draws = rng.choice(catalog + 1, size=horizon, p=p)
            col = np.where(draws == catalog, IDLE, draws)
            table[:, i] = col
        return RequestTrace(requests=table, catalog=catalog)

    if inter_arrival == "uniform_range":
        low, high = int(params.get("low", 1)), int(params.get("high", 1))
        if not 1 <= low <= high:
            raise ConfigurationError("need 1 <= low <= high")
        active = params.get("active")
        if active is None:
            raise ConfigurationError("uniform_range needs an 'active' (n, catalog) mask")
        active = np.asarray(active, dtype=bool)
        if active.shape != (n, catalog):
            raise ConfigurationError(f"active mask must have shape ({n}, {catalog})")
        for i in range(n):
            pending: list[tuple[int, int]] = []  # (due slot, file)
            for f in np.nonzero(active[i])[0]:
                pending.append((int(rng.integers(low, high + 1)) - 1, int(f)))
            pending.sort()
            taken = np.zeros(horizon, dtype=bool)
            while pending:
                due, f = pending.pop(0)
                t = due
                while t < horizon and taken[t]:
                    t += 1  # collision: defer to the next free slot
                if t >= horizon:
                    continue
                table[t, i] = f
                taken[t] = True
                nxt = t + int(rng.integers(low, high + 1))
                if nxt < horizon:
                    pending.append((nxt, f))
                    pending.sort()
        return RequestTrace(requests=table, catalog=catalog)

    raise ConfigurationError(f"unknown inter_arrival mode {inter_arrival!r}")


def gen_adversarial_uniform(k: int, n: int, horizon: int, seed: int = 0) -> RequestTrace:
    """All users request the same uniformly random file from a 2k catalog."""
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    rng = np.random.default_rng(seed)
    common = rng.integers(0, 2 * k, size=horizon, dtype=np.int64)
    table = np.repeat(common[:, None], n, axis=1)
    return RequestTrace(requests=table, catalog=2 * k)


def split_intervals(trace: RequestTrace, count: int) -> list[RequestTrace]:
    """Split into `count` consecutive sub-traces; the last absorbs the remainder."""
    if count < 1 or count > trace.horizon:
        raise ConfigurationError(f"cannot split horizon {trace.horizon} into {count}")
    size = trace.horizon // count
    out = []
    for k in range(count):
        lo = k * size
        hi = trace.horizon if k == count - 1 else (k + 1) * size
        out.append(RequestTrace(requests=trace.requests[lo:hi].copy(), catalog=trace.catalog))
    return out
