"""Parameter-grid sweeps over the channel simulator and the mAP dataset file.

Per-row seeds
-------------
Row ``i`` of a sweep with base seed ``s`` is simulated with
``stable_mix(s, i)``, the SplitMix64 output after ``i + 1`` increments::

    z = (s + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    seed = z ^ (z >> 31)

Dataset CSV
-----------
Header ``r_t,r_r,d,diff_coeff,map`` followed by one row per simulation.
Values are written with Python's shortest round-trip float repr.

Sweep config
------------
An INI file read with :mod:`configparser`::

    [grid]
    diff_coeff = 50, 60, 70, 75, 80, 100
    r_r = 4, 5, 6, 7.5, 8, 10
    r_t = 4, 5, 6, 7.5, 8, 10
    d = 2, 3, 4, 5, 6, 7, 8, 9, 10, 11

    [simulation]
    n_molecules = 1000
    n_steps = 3000
    dt = 0.01
    base_seed = 2022
    r_v = auto          ; or a number
    absorption = bridge ; or endpoint

Every key in ``[grid]`` is a comma-separated list of positive numbers.
"""

from __future__ import annotations

import configparser
import csv
import io
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, ParseError
from .seeding import stable_mix
from .sim import ChannelParams, simulate_channel

log = logging.getLogger(__name__)

CSV_HEADER = ("r_t", "r_r", "d", "diff_coeff", "map")
GRID_KEYS = ("diff_coeff", "r_r", "r_t", "d")


@dataclass(frozen=True)
class SweepConfig:
    diff_values: tuple[float, ...]
    r_r_values: tuple[float, ...]
    r_t_values: tuple[float, ...]
    d_values: tuple[float, ...]
    n_molecules: int = 1000
    n_steps: int = 3000
    dt: float = 0.01
    base_seed: int = 2022
    r_v: float | None = None  # None: 2 * max(r_t, r_r) per row
    absorption: str = "bridge"

    def __post_init__(self):
        for key, name in zip(GRID_KEYS, ("diff_values", "r_r_values", "r_t_values", "d_values")):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise InvalidParameterError(f"grid dimension {key!r} is empty")
            if not all(math.isfinite(v) and v > 0 for v in values):
                raise InvalidParameterError(f"grid dimension {key!r} must hold positive values, got {values}")
            object.__setattr__(self, name, values)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (len(self.diff_values), len(self.r_r_values), len(self.r_t_values), len(self.d_values))


FULL_SWEEP = SweepConfig(
    diff_values=(50, 60, 70, 75, 80, 100),
    r_r_values=(4, 5, 6, 7.5, 8, 10),
    r_t_values=(4, 5, 6, 7.5, 8, 10),
    d_values=(2, 3, 4, 5, 6, 7, 8, 9, 10, 11),
    n_molecules=1000,
    n_steps=3000,
    dt=0.01,
)

# 3x3x3x5 subset of the full grid, cheap enough for a laptop run.
DESK_SWEEP = SweepConfig(
    diff_values=(50, 75, 100),
    r_r_values=(4, 7.5, 10),
    r_t_values=(4, 7.5, 10),
    d_values=(2, 4, 6, 8, 10),
    n_molecules=500,
    n_steps=1500,
    dt=0.01,
)


def generate_grid(config: SweepConfig) -> list[ChannelParams]:
    """Cartesian product of the grid, ordered lexicographically by (D, r_R, r_T, d)."""
    grid = []
    combos = itertools.product(config.diff_values, config.r_r_values, config.r_t_values, config.d_values)
    for i, (diff, r_r, r_t, d) in enumerate(combos):
        grid.append(
            ChannelParams(
                r_t=r_t, r_r=r_r, d=d, diff=diff,
                n_molecules=config.n_molecules, n_steps=config.n_steps, dt=config.dt,
                seed=stable_mix(config.base_seed, i), r_v=config.r_v,
                absorption=config.absorption,
            )
        )
    return grid


@dataclass(eq=False)
class Dataset:
    """Feature rows ``[r_t, r_r, d, D]`` with their mAP target.

    ``seeds`` is provenance only; it is not stored in the CSV and is ignored
    by equality.
    """

    features: np.ndarray
    targets: np.ndarray
    seeds: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float).reshape(-1, 4)
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if self.features.shape[0] != self.targets.shape[0]:
            raise InvalidParameterError("features and targets differ in length")
        if np.any((self.targets < 0) | (self.targets > 1)):
            raise InvalidParameterError("targets must lie in [0, 1]")
        if self.seeds is not None:
            self.seeds = np.asarray(self.seeds, dtype=np.uint64)

    def __len__(self):
        return self.targets.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.features, other.features) and np.array_equal(self.targets, other.targets)

    @property
    def X(self) -> np.ndarray:
        return self.features

    @property
    def y(self) -> np.ndarray:
        return self.targets

    def take(self, indices) -> Dataset:
        indices = np.asarray(indices, dtype=int)
        seeds = None if self.seeds is None else self.seeds[indices]
        return Dataset(self.features[indices], self.targets[indices], seeds)


class SweepError(RuntimeError):
    def __init__(self, index, params, cause):
        self.index = index
        self.params = params
        super().__init__(f"simulation of row {index} failed ({params}): {cause}")


def _run_row(params: ChannelParams) -> float:
    return simulate_channel(params).map


def run_sweep(grid, workers: int = 1) -> Dataset:
    grid = list(grid)
    if int(workers) != workers or workers < 1:
        raise InvalidParameterError(f"workers must be a positive integer, got {workers!r}")
    targets = []
    if workers == 1 or len(grid) <= 1:
        for i, p in enumerate(grid):
            try:
                targets.append(_run_row(p))
            except Exception as exc:
                raise SweepError(i, p, exc) from exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_row, p) for p in grid]
            for i, (p, fut) in enumerate(zip(grid, futures)):
                try:
                    targets.append(fut.result())
                except Exception as exc:
                    for f in futures[i + 1:]:
                        f.cancel()
                    raise SweepError(i, p, exc) from exc
    log.info("sweep finished: %d rows", len(grid))
    features = np.array([[p.r_t, p.r_r, p.d, p.diff] for p in grid], dtype=float).reshape(-1, 4)
    seeds = np.array([p.seed for p in grid], dtype=np.uint64)
    return Dataset(features, np.array(targets, dtype=float), seeds)


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row, target in zip(ds.features, ds.targets):
        w.writerow([repr(float(v)) for v in row] + [repr(float(target))])
    return buf.getvalue()


def dataset_from_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    rows = []
    for lineno, record in enumerate(reader, start=1):
        if lineno == 1:
            if tuple(c.strip() for c in record) != CSV_HEADER:
                raise ParseError(f"expected header {','.join(CSV_HEADER)!r}, got {','.join(record)!r}", 1)
            continue
        if not record:
            continue
        if len(record) != len(CSV_HEADER):
            raise ParseError(f"expected {len(CSV_HEADER)} columns, got {len(record)}", lineno)
        try:
            values = [float(v) for v in record]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", lineno)
        if not 0.0 <= values[-1] <= 1.0:
            raise ParseError(f"map {values[-1]!r} outside [0, 1]", lineno)
        rows.append(values)
    if not rows and not text.strip():
        raise ParseError("empty file", 1)
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    return Dataset(arr[:, :4], arr[:, 4])


def write_dataset(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dataset_to_csv(ds))


def read_dataset(path) -> Dataset:
    with open(path, newline="") as fh:
        return dataset_from_csv(fh.read())


def _parse_list(section, key):
    raw = section.get(key)
    if raw is None:
        raise ParseError(f"missing grid dimension {key!r}")
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ParseError(f"grid dimension {key!r} is empty")
    try:
        return tuple(float(s) for s in items)
    except ValueError as exc:
        raise ParseError(f"grid dimension {key!r}: {exc}") from None


def sweep_config_from_text(text: str) -> SweepConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    if not cp.has_section("grid"):
        raise ParseError("missing [grid] section")
    grid = cp["grid"]
    lists = {key: _parse_list(grid, key) for key in GRID_KEYS}
    sim = cp["simulation"] if cp.has_section("simulation") else {}
    kw = {}
    try:
        if "n_molecules" in sim:
            kw["n_molecules"] = int(sim["n_molecules"])
        if "n_steps" in sim:
            kw["n_steps"] = int(sim["n_steps"])
        if "dt" in sim:
            kw["dt"] = float(sim["dt"])
        if "base_seed" in sim:
            kw["base_seed"] = int(sim["base_seed"])
        if "r_v" in sim and sim["r_v"].strip().lower() != "auto":
            kw["r_v"] = float(sim["r_v"])
        if "absorption" in sim:
            kw["absorption"] = sim["absorption"].strip()
    except ValueError as exc:
        raise ParseError(f"[simulation]: {exc}") from None
    try:
        return SweepConfig(
            diff_values=lists["diff_coeff"], r_r_values=lists["r_r"],
            r_t_values=lists["r_t"], d_values=lists["d"], **kw,
        )
    except InvalidParameterError as exc:
        raise ParseError(str(exc)) from None


def sweep_config_to_text(config: SweepConfig) -> str:
    def fmt(values):
        return ", ".join(repr(v) for v in values)

    return (
        "[grid]\n"
        f"diff_coeff = {fmt(config.diff_values)}\n"
        f"r_r = {fmt(config.r_r_values)}\n"
        f"r_t = {fmt(config.r_t_values)}\n"
        f"d = {fmt(config.d_values)}\n"
        "\n[simulation]\n"
        f"n_molecules = {config.n_molecules}\n"
        f"n_steps = {config.n_steps}\n"
        f"dt = {config.dt!r}\n"
        f"base_seed = {config.base_seed}\n"
        f"r_v = {'auto' if config.r_v is None else repr(config.r_v)}\n"
        f"absorption = {config.absorption}\n"
    )


def load_sweep_config(path) -> SweepConfig:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as fh:
        return sweep_config_from_text(fh.read())
