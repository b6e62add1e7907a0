"""Parameter sweeps over the effective-capacity methods.

A sweep varies one axis over a grid (optionally repeated for each value of a
``series`` parameter) and evaluates every (grid point, user, method) cell.
Cells are numbered in output order; the Monte-Carlo stream of a cell is keyed
on (master_seed, cell_index), so any cell can be recomputed on its own.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .channel import DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_BLOCKLENGTH, DEFAULT_EPSILON, LinkConfig
from .effcap import (
    METHODS,
    McConfig,
    MultiUserConfig,
    QosConfig,
    SeriesConfig,
    ec,
    multiuser_total_estimate,
    total_ec_estimate,
)
from .errors import ConfigError
from .specfun import DEFAULT_POLICY, AccuracyPolicy

AXES = ("rho_db", "theta", "alpha_pair", "blocklength", "epsilon")
SWEEP_USERS = ("noma_strong", "noma_weak", "oma_strong", "oma_weak",
               "noma_total", "oma_total", "multiuser_noma", "multiuser_oma")
CSV_COLUMNS = ("scheme", "user", "method", "rho_db", "theta", "epsilon", "blocklength",
               "alpha1", "alpha2", "num_pairs", "ec", "std_err", "diag")

DEFAULT_FIXED = {
    "rho_db": 20.0,
    "theta": 0.01,
    "alpha_pair": (DEFAULT_ALPHA1, DEFAULT_ALPHA2),
    "blocklength": DEFAULT_BLOCKLENGTH,
    "epsilon": DEFAULT_EPSILON,
}

RHO_DB_GRID = tuple(float(x) for x in range(0, 41, 5))
THETA_GRID = (1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1)
FIG5_ALPHA_PAIRS = ((0.2, 0.8), (0.3, 0.7), (0.4, 0.6))


def _order_key(axis, value):
    return value[0] if axis == "alpha_pair" else value


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple
    fixed: dict = field(default_factory=dict)
    methods: tuple = ("closed_form",)
    users: tuple = ("noma_strong", "noma_weak", "oma_strong", "oma_weak")
    series: tuple = ()            # optional (parameter, values) repeated outermost
    samples: int = 100_000
    master_seed: int = 0
    sampler: str = "plain"
    approx_dispersion: bool = False
    clamp: bool = False
    total_users: int = 12
    served_users: int = 6
    pairing: str = "strongest-weakest"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown axis {self.axis!r}; choose from {AXES}")
        if not self.grid:
            raise ConfigError("sweep grid is empty")
        keys = [_order_key(self.axis, v) for v in self.grid]
        if not (all(a < b for a, b in zip(keys, keys[1:])) or all(a > b for a, b in zip(keys, keys[1:]))):
            raise ConfigError("sweep grid must be strictly monotone")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        for u in self.users:
            if u not in SWEEP_USERS:
                raise ConfigError(f"unknown user {u!r}; choose from {SWEEP_USERS}")
        if self.series:
            name, values = self.series
            if name not in AXES or name == self.axis:
                raise ConfigError(f"bad series parameter {name!r}")
            if not values:
                raise ConfigError("series values are empty")
        unknown = set(self.fixed) - set(AXES)
        if unknown:
            raise ConfigError(f"unknown fixed parameters {sorted(unknown)}")
        # validate every operating point up front
        for point in self.points():
            _link_of(point)
            QosConfig(point["theta"])

    def points(self):
        """Parameter dicts in output order (series-major, then grid)."""
        base = {**DEFAULT_FIXED, **self.fixed}
        outer = [None] if not self.series else list(self.series[1])
        for s in outer:
            for g in self.grid:
                p = dict(base)
                if s is not None:
                    p[self.series[0]] = s
                p[self.axis] = g
                yield p

    def cells(self):
        """``(cell_index, params, user, method)`` in output order."""
        idx = 0
        for p in self.points():
            for u in self.users:
                for m in self.methods:
                    yield idx, p, u, m
                    idx += 1

    @property
    def num_cells(self) -> int:
        outer = len(self.series[1]) if self.series else 1
        return outer * len(self.grid) * len(self.users) * len(self.methods)


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    user: str
    method: str
    rho_db: float
    theta: float
    epsilon: float
    blocklength: int
    alpha1: float
    alpha2: float
    num_pairs: int
    ec: float
    std_err: float
    diag: str

    def as_csv_fields(self):
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            out.append(format_float(v) if isinstance(v, float) else str(v))
        return out


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _link_of(p) -> LinkConfig:
    a1, a2 = p["alpha_pair"]
    return LinkConfig.from_db(float(p["rho_db"]), alpha1=float(a1), alpha2=float(a2),
                              blocklength_n=int(p["blocklength"]), epsilon=float(p["epsilon"]))


def _split_user(user):
    scheme, _, who = user.partition("_")
    if scheme == "multiuser":
        return who, "multiuser"
    return scheme, who


def evaluate_cell(spec: SweepSpec, cell_index: int, params: dict, user: str, method: str,
                  policy: AccuracyPolicy = DEFAULT_POLICY, series: SeriesConfig = SeriesConfig()) -> ResultRow:
    """One cell; numerical failures land in ``diag`` with ``ec = nan``."""
    link = _link_of(params)
    qos = QosConfig(float(params["theta"]))
    scheme, who = _split_user(user)
    mc = McConfig(spec.samples, spec.master_seed, (cell_index,), sampler=spec.sampler)
    kwargs = dict(mc=mc, policy=policy, series=series, approx_dispersion=spec.approx_dispersion,
                  clamp=spec.clamp)
    num_pairs = 1
    try:
        if who in ("strong", "weak"):
            est = ec(user, link, qos, method, **kwargs)
        elif who == "total":
            est = total_ec_estimate(method, link, qos, scheme, **kwargs)
        else:
            mu = MultiUserConfig(spec.total_users, spec.served_users, spec.pairing, thetas=qos.theta)
            num_pairs = mu.num_pairs
            est = multiuser_total_estimate(mu, link, method, scheme, **kwargs)
        value, se, diag = est.value, est.std_error, est.diag
    except (ArithmeticError, ValueError) as exc:
        value, se, diag = math.nan, math.nan, f"error: {type(exc).__name__}: {exc}"
    return ResultRow(scheme, who, method, float(params["rho_db"]), qos.theta, link.epsilon,
                     link.blocklength_n, link.alpha1, link.alpha2, num_pairs, value, se, diag)


def run_sweep(spec: SweepSpec, workers: int = 1, policy: AccuracyPolicy = DEFAULT_POLICY,
              series: SeriesConfig = SeriesConfig()) -> list:
    cells = list(spec.cells())

    def run(cell):
        return evaluate_cell(spec, *cell, policy=policy, series=series)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, cells))  # map preserves cell order
    return [run(c) for c in cells]


def rows_to_csv(rows, fh=None) -> str:
    buf = fh if fh is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(r.as_csv_fields())
    return buf.getvalue() if fh is None else ""


def figure_preset(name: str) -> SweepSpec:
    """Sweeps behind the five result figures (default link: alpha 0.3/0.7, n 400, eps 1e-6)."""
    if name == "fig1":
        return SweepSpec("rho_db", RHO_DB_GRID, {"theta": 0.01}, ("closed_form", "monte_carlo"))
    if name == "fig2":
        return SweepSpec("rho_db", RHO_DB_GRID, {}, ("closed_form", "monte_carlo"),
                         users=("noma_total", "oma_total"), series=("theta", (0.001, 0.01)))
    if name == "fig3":
        # the multi-pair totals have no usable closed form (see effcap.ec_role_closed)
        return SweepSpec("rho_db", RHO_DB_GRID, {}, ("quadrature", "monte_carlo"),
                         users=("multiuser_noma", "multiuser_oma", "noma_total", "oma_total"),
                         series=("theta", (0.001, 0.01)))
    if name == "fig4":
        return SweepSpec("theta", THETA_GRID, {"rho_db": 20.0}, ("closed_form", "monte_carlo"))
    if name == "fig5":
        return SweepSpec("rho_db", RHO_DB_GRID, {"theta": 0.01}, ("closed_form", "monte_carlo"),
                         users=("noma_strong", "noma_weak"), series=("alpha_pair", FIG5_ALPHA_PAIRS))
    raise ConfigError(f"unknown preset {name!r}; choose from fig1..fig5")


PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5")


def with_overrides(spec: SweepSpec, **changes) -> SweepSpec:
    return replace(spec, **{k: v for k, v in changes.items() if v is not None})
