"""Desk-scale numerical studies emitting CSV tables.

Every study fixes ``n_r = 4 * n_lambda``: for the area-4 test shapes in the
area-16 box this gives about four samples per degree of freedom. Cells of a
study are independent and may run on a thread pool; rows are always
assembled in configuration order.
"""
from __future__ import annotations

import hashlib
import json
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .domain import EmptyMaskError, builtin_domain, rasterize
from .fourier_ops import DEFAULT_DENSE_CAP, DenseCapError, FrameOperator, worker_count
from .grid import GridSpec
from .solver import PlungeRankError, SolverConfig, error_metrics, solve_algorithm1, solve_dense_tsvd
from .spectral import plunge_bound_check, singular_profile, trace_tbt
from .topology import boundary_count, boundary_dimension_estimate, loglog_slope, verify_layer_bound

KINDS = ("convergence", "plunge", "robustness", "timing", "spectrum", "topology")
OVERSAMPLING = 4


@dataclass(frozen=True)
class TestFunction:
    """Closed-form target function.

    ``evaluate(x, y, n_lambda)``; only the robustness family uses
    ``n_lambda``.
    """

    name: str
    evaluate: Callable[[np.ndarray, np.ndarray, int], np.ndarray]

    def bind(self, n_lambda: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        return lambda x, y: self.evaluate(np.asarray(x, float), np.asarray(y, float), n_lambda)


TEST_FUNCTIONS: dict[str, TestFunction] = {
    f.name: f
    for f in (
        TestFunction("exp_xy", lambda x, y, n: np.exp(x + y)),
        TestFunction("singular", lambda x, y, n: 1.0 / ((x - 1.1) ** 2 + (y - 1.1) ** 2) ** 2),
        TestFunction("oscillatory", lambda x, y, n: np.cos(24 * x - 32 * y) * np.sin(21 * x - 28 * y)),
        TestFunction("abs_xy", lambda x, y, n: np.abs(x * y)),
        TestFunction("sin_nl", lambda x, y, n: np.sin(0.5 * n * (x + y))),
        TestFunction("timing", lambda x, y, n: np.exp(x + y) * np.cos(20 * x * y)),
    )
}


def test_function(name: str) -> TestFunction:
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(TEST_FUNCTIONS)}") from None


_DEFAULTS = {
    "convergence": dict(domains=("disk",), functions=("exp_xy", "singular", "oscillatory", "abs_xy"),
                        n_lambdas=(5, 9, 13, 17, 21)),
    "plunge": dict(domains=("square", "diamond", "disk"), n_lambdas=(9, 13, 17, 21), eps=1e-3),
    "robustness": dict(domains=("unit_disk",), functions=("sin_nl",), n_lambdas=(5, 9, 13, 17, 21),
                       T_list=(1.2, 2.0, 3.0, 4.0)),
    "timing": dict(domains=("disk",), functions=("timing",), n_lambdas=(17, 25, 33, 49)),
    "spectrum": dict(domains=("square", "diamond", "disk", "ring", "star"), n_lambdas=(5, 9)),
    "topology": dict(domains=("square", "diamond", "disk", "ring", "star"), n_lambdas=(8, 16, 32)),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One study.

    For the topology study ``n_lambdas`` lists the grid sizes ``n_r``
    directly, since no frequency window is involved.
    """

    kind: str
    domains: tuple[str, ...] = ("disk",)
    functions: tuple[str, ...] = ("exp_xy",)
    n_lambdas: tuple[int, ...] = (5, 9, 13)
    T: float = 2.0
    T_list: tuple[float, ...] = ()
    eps: float = 1e-14
    seed: int = 0
    n_samples: int = 10_000
    repeats: int = 3
    dense_cap: int = DEFAULT_DENSE_CAP
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        for name in ("domains", "functions", "n_lambdas", "T_list"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        ns = self.n_lambdas
        if not ns or any(int(n) != n or n < 1 for n in ns):
            raise ValueError("n_lambdas must be positive integers")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_lambdas must be strictly increasing")
        if not self.domains:
            raise ValueError("at least one domain is required")
        for d in self.domains:
            builtin_domain(d)
        for f in self.functions:
            test_function(f)
        if self.T <= 0 or any(t <= 0 for t in self.T_list):
            raise ValueError("half widths must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.repeats < 1 or self.n_samples < 1:
            raise ValueError("repeats and n_samples must be positive")

    @classmethod
    def default(cls, kind: str, **overrides) -> "ExperimentConfig":
        if kind not in _DEFAULTS:
            raise ValueError(f"unknown experiment kind {kind!r}; choose from {KINDS}")
        return cls(kind=kind, **{**_DEFAULTS[kind], **overrides})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        kind = data.pop("kind", None)
        if kind is None:
            raise ValueError("config needs a 'kind'")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls.default(kind, **data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def config_hash(self) -> str:
        d = asdict(self)
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Table:
    """Result rows of a study plus summary footer lines."""

    columns: list[str]
    rows: list[list] = field(default_factory=list)
    footer: list[str] = field(default_factory=list)
    timing_columns: tuple[str, ...] = ()
    timing_footer: list[str] = field(default_factory=list)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(table: Table, cfg: ExperimentConfig, include_timing: bool = True) -> str:
    """CSV text; with ``include_timing=False`` wall-clock columns and lines are dropped."""
    keep = [i for i, c in enumerate(table.columns) if include_timing or c not in table.timing_columns]
    lines = [
        f"# frame-extend v1, config_hash={cfg.config_hash()}, seed={cfg.seed}",
        f"# kind={cfg.kind}, n_r={OVERSAMPLING}*n_lambda, eps={cfg.eps!r}",
        ",".join(table.columns[i] for i in keep),
    ]
    lines += [",".join(_fmt(r[i]) for i in keep) for r in table.rows]
    lines += [f"# {s}" for s in table.footer]
    if include_timing:
        lines += [f"# {s}" for s in table.timing_footer]
    return "\n".join(lines) + "\n"


def write_csv(table: Table, cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(render_csv(table, cfg))
    return path


def _pmap(fn, cells: Sequence) -> list:
    workers = min(worker_count(), max(1, len(cells)))
    if workers == 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def _status(exc: Exception) -> str:
    return f"error:{type(exc).__name__}"


def _operator(domain: str, n_lambda: int, half_width: float) -> FrameOperator:
    spec = GridSpec(OVERSAMPLING * n_lambda, n_lambda, 2, half_width)
    return FrameOperator(rasterize(builtin_domain(domain), spec))


def _rhs(op: FrameOperator, f: Callable) -> np.ndarray:
    x, y = op.mask.coords().T
    return np.asarray(f(x, y), dtype=complex)


def _approximate(cfg: ExperimentConfig, domain: str, fname: str, n_lambda: int, half_width: float):
    """Fast plunge-projection solve plus metrics; returns (residual, max_error, rank)."""
    op = _operator(domain, n_lambda, half_width)
    f = test_function(fname).bind(n_lambda)
    x, rep = solve_algorithm1(op, _rhs(op, f), SolverConfig(eps=cfg.eps, seed=cfg.seed))
    _, err = error_metrics(op, x, f, cfg.n_samples, cfg.seed, builtin_domain(domain))
    return rep.residual_norm, err, rep.rank_used


_SOLVE_ERRORS = (PlungeRankError, DenseCapError, EmptyMaskError, np.linalg.LinAlgError, ValueError)


def run_convergence(cfg: ExperimentConfig) -> Table:
    cells = list(product(cfg.domains, cfg.functions, cfg.n_lambdas))

    def one(cell):
        d, f, n = cell
        try:
            res, err, rank = _approximate(cfg, d, f, n, cfg.T)
            return [d, f, n, OVERSAMPLING * n, res, err, rank, "ok"]
        except _SOLVE_ERRORS as exc:
            return [d, f, n, OVERSAMPLING * n, math.nan, math.nan, 0, _status(exc)]

    cols = ["domain", "function", "n_lambda", "n_r", "residual", "max_error", "rank", "status"]
    return Table(cols, _pmap(one, cells))


def run_plunge_study(cfg: ExperimentConfig) -> Table:
    cells = list(product(cfg.domains, cfg.n_lambdas))

    def one(cell):
        d, n = cell
        n_r = OVERSAMPLING * n
        try:
            op = _operator(d, n, cfg.T)
            nb = boundary_count(op.mask)
            eta = singular_profile(op, cfg.eps, cfg.dense_cap).eta
            scale = nb * math.log(n_r)
            return [d, n, n_r, nb, eta, eta / scale if scale else 0.0, eta / op.spec.N_lambda, "ok"]
        except _SOLVE_ERRORS as exc:
            return [d, n, n_r, 0, 0, math.nan, math.nan, _status(exc)]

    cols = ["domain", "n_lambda", "n_r", "n_boundary", "eta", "ratio", "eta_fraction", "status"]
    return Table(cols, _pmap(one, cells))


def run_robustness(cfg: ExperimentConfig) -> Table:
    ts = cfg.T_list or (cfg.T,)
    cells = list(product(ts, cfg.domains, cfg.functions, cfg.n_lambdas))

    def one(cell):
        t, d, f, n = cell
        try:
            res, err, _ = _approximate(cfg, d, f, n, t)
            return [t, d, f, n, OVERSAMPLING * n, res, err, "ok"]
        except _SOLVE_ERRORS as exc:
            return [t, d, f, n, OVERSAMPLING * n, math.nan, math.nan, _status(exc)]

    cols = ["T", "domain", "function", "n_lambda", "n_r", "residual", "max_error", "status"]
    return Table(cols, _pmap(one, cells))


def _median_time(fn, repeats: int):
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def _digest(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x, dtype=complex).tobytes()).hexdigest()[:16]


def run_timing(cfg: ExperimentConfig) -> Table:
    """Median wall times of the direct and fast solvers.

    Runs serially so the timings do not compete for cores. The direct solve
    is skipped (NaN) where its dense matrix exceeds ``dense_cap``.
    """
    rows = []
    for d, fname, n in product(cfg.domains, cfg.functions, cfg.n_lambdas):
        op = _operator(d, n, cfg.T)
        b = _rhs(op, test_function(fname).bind(n))
        scfg = SolverConfig(eps=cfg.eps, seed=cfg.seed)
        t_fast, (x, rep) = _median_time(lambda: solve_algorithm1(op, b, scfg), cfg.repeats)
        if op.shape[0] * op.shape[1] <= cfg.dense_cap:
            t_direct, _ = _median_time(lambda: solve_dense_tsvd(op, b, cfg.eps, cfg.dense_cap), cfg.repeats)
        else:
            t_direct = math.nan
        rows.append([d, fname, n, op.spec.N_lambda, t_direct, t_fast, rep.rank_used, _digest(x)])
    cols = ["domain", "function", "n_lambda", "N_lambda", "t_direct", "t_algorithm1", "rank", "coeff_digest"]
    table = Table(cols, rows, timing_columns=("t_direct", "t_algorithm1"))
    for d in cfg.domains:
        sel = [r for r in rows if r[0] == d]
        # upper half of the size range, midpoint included
        top = sel[(len(sel) - 1) // 2 :]
        for label, i in (("direct", 4), ("algorithm1", 5)):
            pts = [(r[3], r[i]) for r in top if np.isfinite(r[i])]
            if len(pts) >= 2:
                s = loglog_slope(*zip(*pts))
                table.timing_footer.append(f"slope_{label}[{d}]={s:.4f} over N_lambda={[p[0] for p in pts]}")
    return table


def timing_slopes(table: Table, domain: str | None = None) -> dict[str, float]:
    """Log-log slopes of both timing columns over all finite rows."""
    rows = [r for r in table.rows if domain is None or r[0] == domain]
    out = {}
    for label, col in (("direct", "t_direct"), ("algorithm1", "t_algorithm1")):
        i = table.columns.index(col)
        pts = [(r[3], r[i]) for r in rows if np.isfinite(r[i])]
        out[label] = loglog_slope(*zip(*pts)) if len(pts) >= 2 else math.nan
    return out


def run_spectrum(cfg: ExperimentConfig) -> Table:
    cells = list(product(cfg.domains, cfg.n_lambdas))

    def one(cell):
        d, n = cell
        try:
            op = _operator(d, n, cfg.T)
            prof = singular_profile(op, cfg.eps, cfg.dense_cap)
            rep = plunge_bound_check(op, cfg.eps, cfg.dense_cap)
            return [d, n, OVERSAMPLING * n, prof.n_one, prof.eta, prof.n_zero, float(np.sum(prof.sigma**2)),
                    trace_tbt(op), rep.k_min, rep.k_max, rep.holds, "ok"]
        except _SOLVE_ERRORS as exc:
            return [d, n, OVERSAMPLING * n, 0, 0, 0, math.nan, math.nan, 0, 0, False, _status(exc)]

    cols = ["domain", "n_lambda", "n_r", "n_one", "eta", "n_zero", "sum_sigma_sq", "trace",
            "k_min", "k_max", "bounds_hold", "status"]
    return Table(cols, _pmap(one, cells))


def run_topology(cfg: ExperimentConfig) -> Table:
    """Layer statistics per domain and grid size; ``n_lambdas`` are read as ``n_r``."""
    cells = list(product(cfg.domains, cfg.n_lambdas))

    def one(cell):
        d, n = cell
        mask = rasterize(builtin_domain(d), GridSpec(n, 1, 2, cfg.T))
        rep = verify_layer_bound(mask)
        return [d, n, rep.components, rep.holes, rep.sizes[0], len(rep.sizes), rep.holds]

    table = Table(["domain", "n_r", "components", "holes", "n_boundary", "n_layers", "layer_bound_holds"],
                  _pmap(one, cells))
    if len(cfg.n_lambdas) >= 3:
        for d in cfg.domains:
            dim = boundary_dimension_estimate(builtin_domain(d), cfg.n_lambdas, cfg.T)
            table.footer.append(f"boundary_dimension[{d}]={dim:.17g}")
    return table


RUNNERS: dict[str, Callable[[ExperimentConfig], Table]] = {
    "convergence": run_convergence,
    "plunge": run_plunge_study,
    "robustness": run_robustness,
    "timing": run_timing,
    "spectrum": run_spectrum,
    "topology": run_topology,
}


def run_experiment(cfg: ExperimentConfig) -> Table:
    return RUNNERS[cfg.kind](cfg)


def run_suite(configs: Sequence[ExperimentConfig], out_dir) -> dict[str, Path]:
    """Run each study in order and write ``<out_dir>/<kind>.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for cfg in configs:
        paths[cfg.kind] = write_csv(run_experiment(cfg), cfg, cfg.output or out_dir / f"{cfg.kind}.csv")
    return paths


def desk_suite(seed: int = 0, **overrides) -> list[ExperimentConfig]:
    """Default configuration of every study."""
    return [ExperimentConfig.default(k, seed=seed, **overrides.get(k, {})) for k in KINDS]
