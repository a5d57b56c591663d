"""Singular value profiles, trace identities and discrete prolate sequences.

The eigenvalues ``lambda = sigma**2`` of ``A A^*`` (the space-limited
band-limiting operator ``T B T``) lie in ``[0, 1]`` and cluster at both
ends. The plunge region is the set of singular values strictly between
``eps`` and ``1 - eps``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .fourier_ops import DEFAULT_DENSE_CAP, FrameOperator, dirichlet_1d, materialize_A_dense


@dataclass
class SpectralProfile:
    """Descending singular values of ``A`` split at ``eps`` and ``1 - eps``."""

    sigma: np.ndarray = field(repr=False)
    eps: float
    n_one: int
    n_plunge: int
    n_zero: int

    @property
    def eta(self) -> int:
        return self.n_plunge

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "sigma"])
            for i, s in enumerate(self.sigma, start=1):
                w.writerow([i, format(float(s), ".17g")])
            fh.write(f"# eta={self.n_plunge}, n_one={self.n_one}, n_zero={self.n_zero}, eps={self.eps!r}\n")


def partition_sigma(sigma, eps: float) -> tuple[int, int, int]:
    """Counts of ``sigma >= 1 - eps``, ``eps < sigma < 1 - eps`` and ``sigma <= eps``."""
    s = np.asarray(sigma)
    n_one = int(np.count_nonzero(s >= 1 - eps))
    n_zero = int(np.count_nonzero(s <= eps))
    return n_one, s.size - n_one - n_zero, n_zero


def plunge_count_lambda(lam, eps: float) -> int:
    """Plunge count from eigenvalues: ``eps**2 < lambda < (1 - eps)**2``."""
    lam = np.asarray(lam)
    return int(np.count_nonzero((lam > eps**2) & (lam < (1 - eps) ** 2)))


def singular_profile(op: FrameOperator, eps: float = 1e-14, cap: int = DEFAULT_DENSE_CAP) -> SpectralProfile:
    sigma = np.linalg.svd(materialize_A_dense(op, cap), compute_uv=False)
    return SpectralProfile(sigma, eps, *partition_sigma(sigma, eps))


def _gram_eigenvalues(op: FrameOperator, cap: int) -> np.ndarray:
    # the smaller of A^* A and A A^* carries all nonzero eigenvalues
    a = materialize_A_dense(op, cap)
    g = a.conj().T @ a if a.shape[1] <= a.shape[0] else a @ a.conj().T
    return np.linalg.eigvalsh(g)[::-1]


def trace_tbt(op: FrameOperator) -> float:
    """``tr(T B T) = N_omega N_lambda / N_R``."""
    return op.mask.N_omega * op.spec.N_lambda / op.spec.N_R


def trace_tbt_dense(op: FrameOperator, cap: int = DEFAULT_DENSE_CAP) -> float:
    """Sum of the eigenvalues of the dense Gram matrix."""
    return float(np.sum(_gram_eigenvalues(op, cap)))


def _kernel_table(op: FrameOperator) -> np.ndarray:
    # |b(m)|^2 for m in (-n_r, n_r), indexed by m + n_r - 1
    n = op.spec.n_r
    return dirichlet_1d(np.arange(-n + 1, n), n, op.spec.n_lambda) ** 2


def trace_tbt_squared(op: FrameOperator, method: str = "kernel", cap: int = DEFAULT_DENSE_CAP) -> float:
    """``tr((T B T)^2) = sum_{k,l in Omega} |B(k - l)|^2``.

    ``method``:

    - ``"kernel"``: direct double sum over sample pairs, ``O(N_omega^2)``.
    - ``"autocorrelation"``: weights ``|B(m)|^2`` by the number of sample
      pairs at offset ``m``, counted with one FFT of the zero-padded mask.
    - ``"dense"``: sum of squared Gram eigenvalues.

    Only ``|B|`` enters, and its modulus is given by the Dirichlet formula
    for either parity of ``n_lambda``.
    """
    n = op.spec.n_r
    table = _kernel_table(op)
    if method == "kernel":
        idx = op.sample_indices()
        m = idx.shape[0]
        chunk = max(1, 2_000_000 // m)
        total = 0.0
        for start in range(0, m, chunk):
            diff = idx[start : start + chunk, None, :] - idx[None, :, :] + (n - 1)
            total += float(np.sum(np.prod(table[diff], axis=-1)))
        return total
    if method == "autocorrelation":
        grid = op.mask.grid.astype(float)
        shape = (2 * n,) * op.spec.dim
        f = scipy.fft.rfftn(grid, s=shape)
        corr = np.rint(scipy.fft.irfftn(np.abs(f) ** 2, s=shape))
        # offsets -n+1..n-1 per axis, wrapped into the padded array
        corr = np.roll(corr, n - 1, axis=tuple(range(op.spec.dim)))[(slice(0, 2 * n - 1),) * op.spec.dim]
        weight = table
        for _ in range(op.spec.dim - 1):
            weight = np.multiply.outer(weight, table)
        return float(np.sum(corr * weight))
    if method == "dense":
        return float(np.sum(_gram_eigenvalues(op, cap) ** 2))
    raise ValueError(f"unknown method {method!r}")


@dataclass
class PlungeBoundReport:
    """Counting bounds on the edges of the plunge region of the eigenvalues.

    With ``e = eps**2`` the eigenvalue threshold, ``k_min`` is the 1-based
    index of the first eigenvalue below ``1 - e`` and ``k_max`` the number
    of eigenvalues above ``e``. The bounds are
    ``k_min > tr - g/e`` and ``k_max <= tr + g/e`` with ``g = tr - tr2``.
    """

    eps: float
    trace: float
    trace_squared: float
    g: float
    k_min: int
    k_max: int
    lower: float
    upper: float

    @property
    def lower_holds(self) -> bool:
        return self.k_min > self.lower

    @property
    def upper_holds(self) -> bool:
        # equality is attained when every eigenvalue is 0 or 1
        return self.k_max <= self.upper + 1e-9 * max(1.0, abs(self.upper))

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds


def plunge_bound_check(op: FrameOperator, eps: float, cap: int = DEFAULT_DENSE_CAP) -> PlungeBoundReport:
    lam = _gram_eigenvalues(op, cap)
    e = eps**2
    tr = trace_tbt(op)
    tr2 = trace_tbt_squared(op, "kernel") if op.mask.N_omega <= 20_000 else float(np.sum(lam**2))
    g = tr - tr2
    k_min = int(np.count_nonzero(lam >= 1 - e)) + 1
    k_max = int(np.count_nonzero(lam > e))
    return PlungeBoundReport(eps, tr, tr2, g, k_min, k_max, tr - g / e, tr + g / e)


@dataclass
class ProlateSet:
    """Periodic discrete prolate spheroidal sequences of the operator.

    ``coeff_vectors[:, i]`` is the coefficient-side eigenvector of
    ``A^* A`` with eigenvalue ``eigenvalues[i]`` (descending), unit norm on
    the full grid. ``sample_vectors[:, i] = A @ coeff_vectors[:, i]`` is its
    restriction to the sample points, with squared norm ``eigenvalues[i]``.
    ``sample_eigenvalues`` are the eigenvalues of ``A A^*`` computed
    independently and paired with ``eigenvalues`` by sorted order.
    """

    eigenvalues: np.ndarray
    coeff_vectors: np.ndarray = field(repr=False)
    sample_vectors: np.ndarray = field(repr=False)
    sample_eigenvalues: np.ndarray = field(repr=False)


def prolate_decomposition(op: FrameOperator, cap: int = DEFAULT_DENSE_CAP, pair_tol: float = 1e-8) -> ProlateSet:
    a = materialize_A_dense(op, cap)
    n_omega, n_lambda = a.shape
    if n_omega * n_omega > cap:
        raise ValueError(f"sample-side Gram matrix needs {n_omega**2} entries, cap is {cap}")
    lam, v = np.linalg.eigh(a.conj().T @ a)
    lam, v = lam[::-1], v[:, ::-1]
    mu = np.linalg.eigvalsh(a @ a.conj().T)[::-1]
    r = min(n_omega, n_lambda)
    gap = max(np.max(np.abs(lam[:r] - mu[:r])), np.max(np.abs(lam[r:]), initial=0.0), np.max(np.abs(mu[r:]), initial=0.0))
    if gap > pair_tol:
        raise ArithmeticError(f"eigenvalues of A^*A and AA^* differ by {gap:.3g} > {pair_tol}")
    return ProlateSet(lam, v, a @ v, mu)
