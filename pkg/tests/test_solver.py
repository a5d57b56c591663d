import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from frame_extend.domain import builtin_domain, disk, rasterize, square
from frame_extend.fourier_ops import FrameOperator, materialize_A_dense
from frame_extend.grid import GridSpec, build_freq_window
from frame_extend.solver import (
    PlungeRankError,
    SolverConfig,
    error_metrics,
    estimate_plunge_rank,
    evaluate_approximation,
    evaluate_series,
    plunge_rank_formula,
    random_points,
    randomized_plunge_solve,
    residual_norm_extended,
    solve_algorithm1,
    solve_dense_tsvd,
)


def make_op(name="disk", n_lambda=9, n_r=None, half_width=2.0):
    n_r = n_r or 4 * n_lambda
    return FrameOperator(rasterize(builtin_domain(name), GridSpec(n_r, n_lambda, 2, half_width)))


def rhs(op, f=lambda x, y: np.exp(x + y)):
    x, y = op.mask.coords().T
    return f(x, y).astype(complex)


def tsvd_oracle(a, b, eps):
    # independent route: LAPACK gesvd driver instead of numpy's gesdd
    u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
    keep = s >= eps
    return vh[keep].conj().T @ ((u[:, keep].conj().T @ b) / s[keep])


@pytest.mark.parametrize("name", ["square", "ring", "star"])
def test_dense_tsvd_matches_oracle(name):
    op = make_op(name, 7)
    b = rhs(op)
    x, rep = solve_dense_tsvd(op, b, eps=1e-10)
    xo = tsvd_oracle(dense := materialize_A_dense(op), b, 1e-10)
    assert np.linalg.norm(dense @ x - b) == pytest.approx(np.linalg.norm(dense @ xo - b), rel=1e-6, abs=1e-12)
    assert rep.rank_used == np.count_nonzero(scipy.linalg.svdvals(dense) >= 1e-10)


def test_dense_tsvd_matches_lstsq_when_well_conditioned():
    # eps far below the smallest singular value: TSVD is the plain least-squares solution
    op = make_op("square", 5, n_r=8)
    a = materialize_A_dense(op)
    s = scipy.linalg.svdvals(a)
    b = rhs(op)
    x, _ = solve_dense_tsvd(op, b, eps=s[-1] / 10)
    assert np.allclose(x, np.linalg.lstsq(a, b, rcond=None)[0], atol=1e-10)


@pytest.mark.parametrize("name", ["square", "diamond", "disk", "ring", "star"])
def test_algorithm1_agrees_with_tsvd(name):
    op = make_op(name, 9)
    b = rhs(op)
    x, rep = solve_algorithm1(op, b)
    xd, _ = solve_dense_tsvd(op, b)
    r_fast = residual_norm_extended(op, x, b)
    r_dense = residual_norm_extended(op, xd, b)
    assert r_fast <= r_dense + 10 * 1e-14 * np.linalg.norm(b)
    assert rep.residual_norm == pytest.approx(np.linalg.norm(op.apply_A(x) - b), rel=1e-12)
    assert set(rep.timings) == {"project", "plunge_solve", "correct"}


def test_full_box_needs_no_plunge_solve():
    # Omega = R: A is unitary, P = 0, so x = A^* b exactly
    op = FrameOperator(rasterize(square(2.0), GridSpec(8, 8)))
    b = np.random.Generator(np.random.Philox(0)).standard_normal(64).astype(complex)
    x, rep = solve_algorithm1(op, b)
    # P A is rounding noise here; whatever the sketch picks up, the correction step removes it
    assert np.allclose(x, op.apply_A_adjoint(b), atol=1e-14)
    assert rep.residual_norm < 1e-13


@given(seed=st.integers(0, 1000), n_lambda=st.integers(3, 9))
def test_consistent_systems_are_solved(seed, n_lambda):
    op = make_op("disk", n_lambda)
    rng = np.random.Generator(np.random.Philox(seed))
    c = rng.standard_normal(op.shape[1]) + 1j * rng.standard_normal(op.shape[1])
    b = op.apply_A(c)
    _, rep = solve_algorithm1(op, b, SolverConfig(seed=seed))
    assert rep.residual_norm <= 1e-10 * np.linalg.norm(b)


def test_seeded_determinism():
    op = make_op("star", 11)
    b = rhs(op)
    x1, _ = solve_algorithm1(op, b, SolverConfig(seed=3))
    x2, _ = solve_algorithm1(op, b, SolverConfig(seed=3))
    assert x1.tobytes() == x2.tobytes()
    x3, r3 = solve_algorithm1(op, b, SolverConfig(seed=4))
    assert x3.tobytes() != x1.tobytes()
    _, rd = solve_dense_tsvd(op, b)
    assert r3.residual_norm == pytest.approx(rd.residual_norm, rel=1e-9)


def test_adaptive_doubling_and_rank_error():
    op = make_op("disk", 11)
    b = rhs(op)
    x, rep = solve_algorithm1(op, b, SolverConfig(rank_estimate=4, oversampling=0))
    assert rep.doubled and rep.sketch_width > 4
    _, full = solve_algorithm1(op, b)
    assert rep.residual_norm == pytest.approx(full.residual_norm, rel=1e-3)
    with pytest.raises(PlungeRankError):
        solve_algorithm1(op, b, SolverConfig(rank_estimate=4, oversampling=0, max_rank=8))
    _, fixed = solve_algorithm1(op, b, SolverConfig(rank_estimate=4, oversampling=0, adaptive=False))
    assert not fixed.doubled and fixed.sketch_width == 4
    assert fixed.residual_norm > full.residual_norm


def test_underdetermined_problem():
    op = FrameOperator(rasterize(builtin_domain("unit_disk"), GridSpec(36, 9, 2, 4.0)))
    assert op.shape[0] < op.shape[1]
    b = rhs(op, lambda x, y: np.sin(4.5 * (x + y)))
    _, rep = solve_algorithm1(op, b)
    assert rep.residual_norm < 1e-8 * np.linalg.norm(b)


def test_randomized_plunge_solve_validates():
    op = make_op("disk", 5)
    with pytest.raises(ValueError):
        randomized_plunge_solve(op, np.ones(3))
    with pytest.raises(ValueError):
        solve_algorithm1(op, np.ones(3))


@pytest.mark.parametrize(
    "kwargs", [dict(eps=0.0), dict(eps=1.0), dict(rank_estimate=0), dict(oversampling=-1)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_rank_estimate():
    assert plunge_rank_formula(10, 20, 1.0) == int(np.ceil(10 * np.log(20)))
    op = make_op("disk", 9)
    r = estimate_plunge_rank(op)
    assert 1 <= r <= min(op.shape)
    assert estimate_plunge_rank(op, constant=1e-6) == 1
    assert estimate_plunge_rank(op, constant=1e6) == min(op.shape)


def test_evaluate_series_matches_direct_sum_and_grid():
    spec = GridSpec(20, 5)
    rng = np.random.Generator(np.random.Philox(9))
    c = rng.standard_normal(25) + 1j * rng.standard_normal(25)
    pts = rng.uniform(-2, 2, size=(7, 2))
    freqs = build_freq_window(spec)
    u = (pts + 2) / 4
    direct = np.array([np.sum(c * np.exp(2j * np.pi * (freqs @ p))) for p in u])
    assert np.allclose(evaluate_series(spec, c, pts), direct, atol=1e-12)
    # at the sample points the series is sqrt(N_R) * A c
    op = FrameOperator(rasterize(builtin_domain("ring"), spec))
    vals = evaluate_series(spec, c, op.mask.coords())
    assert np.allclose(vals, np.sqrt(spec.N_R) * op.apply_A(c), atol=1e-10)
    assert np.allclose(evaluate_approximation(spec, c, op.mask.coords()), op.apply_A(c), atol=1e-12)


def test_evaluate_series_rejects_bad_input():
    spec = GridSpec(8, 3)
    with pytest.raises(ValueError):
        evaluate_series(spec, np.ones(9), [[3.0, 0.0]])
    with pytest.raises(ValueError):
        evaluate_series(spec, np.ones(8), [[0.0, 0.0]])
    with pytest.raises(ValueError):
        evaluate_series(spec, np.ones(9), [[0.0, 0.0, 0.0]])


def test_random_points_inside_and_seeded():
    spec = GridSpec(16, 4)
    d = builtin_domain("ring")
    p1 = random_points(d, spec, 500, np.random.Generator(np.random.Philox(1)))
    p2 = random_points(d, spec, 500, np.random.Generator(np.random.Philox(1)))
    assert p1.shape == (500, 2) and np.array_equal(p1, p2)
    assert d.contains(p1).all()


def test_error_metrics_exact_for_basis_function():
    # a single basis function is reproduced exactly by a one-hot coefficient vector
    op = make_op("disk", 7)
    spec = op.spec
    l = np.array([2, -1])
    c = np.zeros(spec.N_lambda, complex)
    c[np.flatnonzero((build_freq_window(spec) == l).all(axis=1))[0]] = 1.0

    def f(x, y):
        u = spec.to_unit(np.stack([x, y], axis=-1))
        return np.exp(2j * np.pi * (u @ l)) / np.sqrt(spec.N_R)

    res, err = error_metrics(op, c, f, n_samples=300, seed=2, domain=builtin_domain("disk"))
    assert res < 1e-13 and err < 1e-13


def test_extended_residual_agrees_in_benign_case():
    op = make_op("square", 5)
    b = rhs(op)
    x, rep = solve_algorithm1(op, b)
    assert residual_norm_extended(op, x, b) == pytest.approx(rep.residual_norm, rel=1e-6)
    with pytest.raises(ValueError):
        residual_norm_extended(op, x, b, cap=10)
