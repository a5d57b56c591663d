"""Matrix-free collocation operator for Fourier extension.

``A`` maps Fourier coefficients on the frequency window to samples on the
points of the domain mask. It is the ``N_omega x N_lambda`` subblock of the
unitary ``D``-dimensional DFT matrix,

    A[k, l] = exp(2 pi i (k . l) / n_r) / sqrt(N_R),

so products with ``A`` and ``A^*`` cost one zero-padded FFT each. The basis
is evaluated in unit-box variables ``u = (x + T) / (2T)``, which makes the
coefficients independent of the box half-width.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.fft
from scipy.sparse.linalg import LinearOperator

from .domain import DomainMask
from .grid import GridSpec, build_freq_window, build_spatial_grid

DEFAULT_DENSE_CAP = 2**24


class DenseCapError(MemoryError):
    pass


def worker_count() -> int:
    """Worker threads allowed by ``FRAME_EXTEND_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("FRAME_EXTEND_THREADS", "1")))
    except ValueError:
        return 1


class Workspace:
    """Scratch FFT buffer for single-vector applies of one operator.

    Not safe to share between threads; create one per thread.
    """

    def __init__(self, op: "FrameOperator"):
        self.buf = np.zeros(op.spec.N_R, dtype=complex)


class FrameOperator:
    """Collocation operator ``A`` for a grid and domain mask."""

    def __init__(self, mask: DomainMask):
        self.mask = mask
        self.spec: GridSpec = mask.spec
        spec = self.spec
        self.freqs = build_freq_window(spec)
        self.freq_slots = np.ravel_multi_index(tuple((self.freqs % spec.n_r).T), spec.shape)
        self.samples = mask.samples
        self.scale = 1.0 / np.sqrt(spec.N_R)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.mask.N_omega, self.spec.N_lambda)

    def workspace(self) -> Workspace:
        return Workspace(self)

    def _buffer(self, ws: Workspace | None, tail: tuple[int, ...]) -> np.ndarray:
        if ws is not None and not tail:
            ws.buf.fill(0)
            return ws.buf
        return np.zeros((self.spec.N_R,) + tail, dtype=complex)

    def _check(self, v, n: int, what: str) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim not in (1, 2) or v.shape[0] != n:
            raise ValueError(f"{what} must have leading length {n}, got shape {v.shape}")
        return v

    def apply_A(self, c, ws: Workspace | None = None) -> np.ndarray:
        """Evaluate ``A @ c``. ``c`` may be a vector or a matrix of columns."""
        c = self._check(c, self.spec.N_lambda, "coefficients")
        tail = c.shape[1:]
        buf = self._buffer(ws, tail)
        buf[self.freq_slots] = c
        grid = buf.reshape(self.spec.shape + tail)
        axes = tuple(range(self.spec.dim))
        out = scipy.fft.ifftn(grid, axes=axes, norm="forward", workers=worker_count())
        return out.reshape((self.spec.N_R,) + tail)[self.samples] * self.scale

    def apply_A_adjoint(self, s, ws: Workspace | None = None) -> np.ndarray:
        """Evaluate ``A^* @ s``."""
        s = self._check(s, self.mask.N_omega, "samples")
        tail = s.shape[1:]
        buf = self._buffer(ws, tail)
        buf[self.samples] = s
        grid = buf.reshape(self.spec.shape + tail)
        axes = tuple(range(self.spec.dim))
        out = scipy.fft.fftn(grid, axes=axes, norm="backward", workers=worker_count())
        return out.reshape((self.spec.N_R,) + tail)[self.freq_slots] * self.scale

    def apply_P(self, s, ws: Workspace | None = None) -> np.ndarray:
        """Plunge projection ``(A A^* - I) s``."""
        s = self._check(s, self.mask.N_omega, "samples")
        return self.apply_A(self.apply_A_adjoint(s, ws), ws) - s

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(
            self.shape,
            matvec=self.apply_A,
            rmatvec=self.apply_A_adjoint,
            matmat=self.apply_A,
            rmatmat=self.apply_A_adjoint,
            dtype=complex,
        )

    def sample_indices(self) -> np.ndarray:
        """Integer grid multi-indices of the sample points, shape (N_omega, dim)."""
        idx, _ = build_spatial_grid(self.spec)
        return idx[self.samples]


def _check_cap(n_entries: int, cap: int) -> None:
    if n_entries > cap:
        raise DenseCapError(f"dense matrix would have {n_entries} entries, cap is {cap}")


def materialize_A_dense(op: FrameOperator, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense ``N_omega x N_lambda`` collocation matrix."""
    _check_cap(op.shape[0] * op.shape[1], cap)
    n = op.spec.n_r
    # integer phases reduced mod n_r keep the exponent exact
    phase = (op.sample_indices() @ (op.freqs % n).T) % n
    return np.exp(2j * np.pi * phase / n) * op.scale


def dirichlet_1d(k, n_r: int, n_lambda: int) -> np.ndarray:
    """``sin(pi n_lambda k / n_r) / (n_r sin(pi k / n_r))`` with its limit at ``k = 0 mod n_r``."""
    k = np.asarray(k, dtype=np.int64)
    num_arg = np.pi * ((n_lambda * k) % (2 * n_r)) / n_r
    den_arg = np.pi * (k % (2 * n_r)) / n_r
    singular = (k % n_r) == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(num_arg) / (n_r * np.sin(den_arg))
    # limit of the ratio at den = 0: n_lambda / n_r times the sign ratio of the cosines
    limit = (n_lambda / n_r) * np.cos(num_arg) / np.cos(den_arg)
    return np.where(singular, limit, val)


def kernel_B(k, spec: GridSpec) -> np.ndarray:
    """Product of 1D Dirichlet kernels over the last axis of ``k``."""
    k = np.asarray(k)
    return np.prod(dirichlet_1d(k, spec.n_r, spec.n_lambda), axis=-1)


def materialize_TBT(op: FrameOperator, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Space-limited band-limiting matrix ``A A^*`` on the sample points.

    For odd ``n_lambda`` the entries are ``B(k - l)``. For even ``n_lambda``
    the centered window is asymmetric and the kernel picks up a phase, so
    the product of dense matrices is returned instead.
    """
    m = op.mask.N_omega
    _check_cap(m * m, cap)
    if op.spec.n_lambda % 2 == 0:
        a = materialize_A_dense(op, cap=max(cap, op.shape[0] * op.shape[1]))
        return a @ a.conj().T
    idx = op.sample_indices()
    diff = idx[:, None, :] - idx[None, :, :]
    return kernel_B(diff, op.spec).astype(complex)
