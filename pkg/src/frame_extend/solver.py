"""Fourier extension solvers.

``solve_algorithm1`` isolates the plunge region with ``P = A A^* - I``,
solves the low-rank system ``P A y = P b`` by a randomized column sketch,
and corrects with ``z = A^* (b - A y)``. ``solve_dense_tsvd`` is the dense
truncated-SVD reference.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .domain import Domain, mask_domain
from .fourier_ops import DEFAULT_DENSE_CAP, FrameOperator, materialize_A_dense
from .grid import GridSpec, build_freq_window
from .topology import boundary_count


class PlungeRankError(RuntimeError):
    """The sketch did not capture the plunge region within the rank cap."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the plunge-region solver.

    Parameters
    ----------
    eps : float
        Relative singular value cutoff of the low-rank solve.
    rank_estimate : int, optional
        Starting sketch rank; defaults to ``estimate_plunge_rank``.
    oversampling : int
        Extra sketch columns beyond the rank estimate.
    adaptive : bool
        Double the rank until the sketch is rank revealing.
    seed : int
        Seed of the Philox generator that draws the sketch.
    rank_constant : float
        Constant ``c`` in ``c * N_dOmega * log(n_r)``.
    max_rank : int, optional
        Upper limit for adaptive growth; defaults to ``min(N_omega, N_lambda)``.
    block : int
        Sketch columns pushed through the FFT per batch.
    """

    eps: float = 1e-14
    rank_estimate: int | None = None
    oversampling: int = 10
    adaptive: bool = True
    seed: int = 0
    rank_constant: float = 1.0
    max_rank: int | None = None
    block: int = 64

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.rank_estimate is not None and self.rank_estimate < 1:
            raise ValueError("rank_estimate must be positive")
        if self.oversampling < 0:
            raise ValueError("oversampling must be non-negative")


@dataclass
class SolveReport:
    rank_used: int
    residual_norm: float
    coefficient_norm: float
    timings: dict[str, float] = field(default_factory=dict)
    doubled: bool = False
    sketch_width: int = 0

    def as_dict(self) -> dict:
        return {
            "rank_used": self.rank_used,
            "sketch_width": self.sketch_width,
            "residual_norm": self.residual_norm,
            "coefficient_norm": self.coefficient_norm,
            "doubled": self.doubled,
            "timings": dict(self.timings),
        }


def plunge_rank_formula(n_boundary: int, n_r: int, constant: float = 1.0) -> int:
    return int(math.ceil(constant * n_boundary * math.log(n_r)))


def estimate_plunge_rank(op: FrameOperator, constant: float = 1.0) -> int:
    """Starting rank ``ceil(c N_dOmega log n_r)``, clamped to ``[1, min(N_omega, N_lambda)]``."""
    if op.spec.dim != 2:
        raise ValueError("the plunge rank estimate is two-dimensional")
    r = plunge_rank_formula(boundary_count(op.mask), op.spec.n_r, constant)
    return max(1, min(r, min(op.shape)))


def _sketch_columns(op: FrameOperator, omega: np.ndarray, block: int) -> np.ndarray:
    out = np.empty((op.shape[0], omega.shape[1]), dtype=complex)
    for j in range(0, omega.shape[1], block):
        cols = omega[:, j : j + block]
        a = op.apply_A(cols)
        out[:, j : j + block] = op.apply_A(op.apply_A_adjoint(a)) - a
    return out


def _orthonormal(g: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(g)
    return q


@dataclass
class _Sketch:
    y: np.ndarray
    rank: int
    width: int
    doubled: bool


def _plunge_sketch(op: FrameOperator, pb: np.ndarray, cfg: SolverConfig) -> _Sketch:
    n_omega, n_lambda = op.shape
    cap = min(n_omega, n_lambda) if cfg.max_rank is None else min(cfg.max_rank, n_omega, n_lambda)
    r = cfg.rank_estimate if cfg.rank_estimate is not None else estimate_plunge_rank(op, cfg.rank_constant)
    r = max(1, min(r, cap))
    width = min(r + cfg.oversampling, n_lambda)

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    omega = _orthonormal(rng.standard_normal((n_lambda, width)))
    w = _sketch_columns(op, omega, cfg.block)
    doubled = False
    while True:
        # only R and Q^* Pb are needed, never the tall factor Q itself
        qpb, r_fac = scipy.linalg.qr_multiply(w, pb, mode="right", conjugate=True)
        u, s, vh = np.linalg.svd(r_fac, full_matrices=False)
        revealing = s[0] == 0 or s[-1] <= cfg.eps * s[0]
        # once the width reaches the smaller dimension the sketch spans the range of P A
        if revealing or not cfg.adaptive or width >= min(n_omega, n_lambda):
            break
        if r >= cap:
            raise PlungeRankError(
                f"sketch of rank {r} is not rank revealing (sigma_min/sigma_max = {s[-1] / s[0]:.3g}); "
                "the plunge region exceeds the rank cap"
            )
        r = min(2 * r, cap)
        new_width = min(r + cfg.oversampling, n_lambda)
        extra = rng.standard_normal((n_lambda, new_width - width))
        # two Gram-Schmidt passes against the columns already sketched
        extra -= omega @ (omega.T @ extra)
        extra = _orthonormal(extra - omega @ (omega.T @ extra))
        omega = np.hstack([omega, extra])
        w = np.hstack([w, _sketch_columns(op, extra, cfg.block)])
        width = new_width
        doubled = True

    keep = s > cfg.eps * s[0] if s[0] > 0 else np.zeros(s.shape, dtype=bool)
    coef = (u[:, keep].conj().T @ qpb) / s[keep]
    y = omega @ (vh[keep].conj().T @ coef)
    return _Sketch(y, int(np.count_nonzero(keep)), width, doubled)


def randomized_plunge_solve(op: FrameOperator, pb, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Least-squares solution of ``P A y = P b`` restricted to a random subspace."""
    pb = np.asarray(pb, dtype=complex)
    if pb.shape != (op.shape[0],):
        raise ValueError(f"P b must have length {op.shape[0]}, got shape {pb.shape}")
    return _plunge_sketch(op, pb, cfg).y


def solve_algorithm1(op: FrameOperator, b, cfg: SolverConfig = SolverConfig()) -> tuple[np.ndarray, SolveReport]:
    """Solve ``A x = b`` in the least-squares sense via the plunge projection."""
    b = np.asarray(b, dtype=complex)
    if b.shape != (op.shape[0],):
        raise ValueError(f"b must have length {op.shape[0]}, got shape {b.shape}")
    t0 = time.perf_counter()
    pb = op.apply_P(b)
    t1 = time.perf_counter()
    sk = _plunge_sketch(op, pb, cfg)
    t2 = time.perf_counter()
    x = sk.y + op.apply_A_adjoint(b - op.apply_A(sk.y))
    t3 = time.perf_counter()
    report = SolveReport(
        rank_used=sk.rank,
        residual_norm=float(np.linalg.norm(op.apply_A(x) - b)),
        coefficient_norm=float(np.linalg.norm(x)),
        timings={"project": t1 - t0, "plunge_solve": t2 - t1, "correct": t3 - t2},
        doubled=sk.doubled,
        sketch_width=sk.width,
    )
    return x, report


def solve_dense_tsvd(op: FrameOperator, b, eps: float = 1e-14, cap: int = DEFAULT_DENSE_CAP) -> tuple[np.ndarray, SolveReport]:
    """Truncated SVD solution keeping singular values ``sigma >= eps``.

    The cutoff on ``sigma`` equals a cutoff ``eps**2`` on the eigenvalues
    ``lambda = sigma**2`` of ``A A^*``.
    """
    b = np.asarray(b, dtype=complex)
    if b.shape != (op.shape[0],):
        raise ValueError(f"b must have length {op.shape[0]}, got shape {b.shape}")
    t0 = time.perf_counter()
    a = materialize_A_dense(op, cap)
    t1 = time.perf_counter()
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    keep = s >= eps
    x = vh[keep].conj().T @ ((u[:, keep].conj().T @ b) / s[keep])
    t2 = time.perf_counter()
    report = SolveReport(
        rank_used=int(np.count_nonzero(keep)),
        residual_norm=float(np.linalg.norm(a @ x - b)),
        coefficient_norm=float(np.linalg.norm(x)),
        timings={"materialize": t1 - t0, "svd_solve": t2 - t1},
    )
    return x, report


def evaluate_series(spec: GridSpec, c, points) -> np.ndarray:
    """Direct sum ``sum_l c_l exp(2 pi i u(x) . l)`` at arbitrary points in the box."""
    c = np.asarray(c, dtype=complex)
    if c.shape != (spec.N_lambda,):
        raise ValueError(f"coefficients must have length {spec.N_lambda}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != spec.dim:
        raise ValueError(f"points must have {spec.dim} components")
    if np.any(np.abs(pts) > spec.half_width * (1 + 1e-12)):
        raise ValueError("point outside the bounding box")
    u = spec.to_unit(pts)
    freqs = build_freq_window(GridSpec(spec.n_lambda, spec.n_lambda, 1))[:, 0]
    # tensor structure: contract one dimension at a time
    factors = [np.exp(2j * np.pi * np.outer(u[:, d], freqs)) for d in range(spec.dim)]
    t = c.reshape((spec.n_lambda,) * spec.dim)
    out = np.einsum("pa,a...->p...", factors[0], t)
    for f in factors[1:]:
        out = np.einsum("pa,pa...->p...", f, out)
    return out


def evaluate_approximation(spec: GridSpec, c, points) -> np.ndarray:
    """Value of the approximant ``A``-scaled so that ``A c = b`` means interpolation of ``b``."""
    return evaluate_series(spec, c, points) / np.sqrt(spec.N_R)


def random_points(domain: Domain, spec: GridSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in ``domain`` by rejection from the bounding box."""
    out = []
    have = 0
    for _ in range(10_000):
        cand = rng.uniform(-spec.half_width, spec.half_width, size=(max(n, 1024), spec.dim))
        cand = cand[domain.contains(cand)]
        out.append(cand)
        have += len(cand)
        if have >= n:
            return np.concatenate(out)[:n]
    raise RuntimeError(f"rejection sampling found only {have} of {n} points in {domain.name}")


def error_metrics(
    op: FrameOperator,
    c,
    f: Callable[..., np.ndarray],
    n_samples: int = 10_000,
    seed: int = 0,
    domain: Domain | None = None,
) -> tuple[float, float]:
    """Residual on the sample points and max pointwise error at random interior points.

    ``f`` is called with one coordinate array per dimension.
    """
    coords = op.mask.coords()
    b = np.asarray(f(*coords.T), dtype=complex)
    residual = float(np.linalg.norm(op.apply_A(c) - b))
    if domain is None:
        domain = mask_domain(op.mask)
    pts = random_points(domain, op.spec, n_samples, np.random.Generator(np.random.Philox(seed)))
    err = evaluate_approximation(op.spec, c, pts) - f(*pts.T)
    return residual, float(np.max(np.abs(err))) if len(pts) else 0.0


def residual_norm_extended(op: FrameOperator, x, b, cap: int = DEFAULT_DENSE_CAP) -> float:
    """``||A x - b||`` evaluated with a long double dense matrix.

    The float64 residual of a solution with large coefficients carries
    rounding noise of order ``eps_mach * ||x||``; comparisons between two
    solvers at tolerances below that level need the extra precision.
    """
    m, n = op.shape
    if m * n > cap:
        raise ValueError(f"dense evaluation needs {m * n} entries, cap is {cap}")
    nr = op.spec.n_r
    phase = ((op.sample_indices() @ (op.freqs % nr).T) % nr).astype(np.longdouble)
    two_pi = 2 * np.longdouble("3.141592653589793238462643383279502884")
    a = np.exp(1j * (two_pi * phase / nr)).astype(np.clongdouble)
    a /= np.sqrt(np.longdouble(op.spec.N_R))
    r = a @ np.asarray(x).astype(np.clongdouble) - np.asarray(b).astype(np.clongdouble)
    return float(np.sqrt(np.sum(np.abs(r) ** 2)))
