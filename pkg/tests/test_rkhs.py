import numpy as np
import pytest

from msn.errors import DuplicateNodes, NotPositiveDefinite
from msn.geometry import NodeSet, min_separation_integer, separation_radius
from msn.kernels import DEFAULT_CUTOFF, sobolev_kernel
from msn.rkhs import (
    GramSystem,
    build_gram,
    default_level,
    inverse_norm_diagnostic,
    kernel_fit,
    kernel_matrix,
)
from msn.solver import MsnProblem, assemble_scaled_basis
from msn.trigpoly import MultiIndexSet, evaluate_many


def circle(M):
    return NodeSet(np.linspace(-np.pi, np.pi, M, endpoint=False).reshape(-1, 1), metric="periodic")


def test_single_node_gram():
    s, N = 1.5, 3
    system = build_gram(NodeSet([[0.3]]), s, N)
    ref = sum(float(DEFAULT_CUTOFF(abs(k) / 2**N)) * (1 + k * k) ** -s for k in range(-8, 9))
    assert system.matrix.shape == (1, 1)
    assert system.matrix[0, 0] == pytest.approx(ref, rel=1e-14)
    rows, slope = inverse_norm_diagnostic([NodeSet([[0.3]])], s, N)
    assert rows[0].inverse_norm == pytest.approx(1 / ref, rel=1e-14)
    assert np.isnan(slope)


def test_alternating_sum_entry():
    s, N = 2.0, 4
    system = build_gram(NodeSet([[0.0], [np.pi]]), s, N)
    ref = sum((-1) ** abs(k) * float(DEFAULT_CUTOFF(abs(k) / 2**N)) * (1 + k * k) ** -s for k in range(-16, 17))
    assert system.matrix[0, 1] == pytest.approx(ref, abs=1e-15)
    np.testing.assert_array_equal(system.matrix, system.matrix.T)


def test_gram_equals_scaled_basis_product(rng):
    s, N = 1.5, 5
    nodes = NodeSet(rng.uniform(-np.pi, np.pi, (9, 2)), np.zeros(9))
    G = build_gram(nodes, s, N).matrix
    B, _, _ = assemble_scaled_basis(
        MsnProblem(nodes, s, MultiIndexSet(2, 2**N), taper=DEFAULT_CUTOFF, taper_scale=2**N)
    )
    assert np.max(np.abs(B @ B.conj().T - G)) <= 1e-12


def test_kernel_fit_examples(rng):
    nodes = NodeSet(rng.uniform(-3, 3, (5, 1)))
    system = build_gram(nodes, 1.5, 5)
    assert not np.any(kernel_fit(system, np.zeros(5)).coeffs)
    single = build_gram(NodeSet([[1.0]], [2.5]), 2.0, 3)
    c = kernel_fit(single).coeffs
    assert c[0] == pytest.approx(2.5 / single.matrix[0, 0], rel=1e-15)
    with pytest.raises(ValueError):
        kernel_fit(system)


@pytest.mark.parametrize("dim", [1, 2])
def test_kernel_fit_interpolates(rng, dim):
    nodes = NodeSet(rng.uniform(-np.pi, np.pi, (8, dim)), rng.standard_normal(8))
    g = kernel_fit(build_gram(nodes, dim / 2 + 1))
    assert g.residual(nodes.values) <= 1e-8 * np.max(np.abs(nodes.values))
    T = g.to_trigpoly()
    x = rng.uniform(-np.pi, np.pi, (50, dim))
    np.testing.assert_allclose(evaluate_many(T, x).real, g(x), atol=1e-12)
    assert T.index_set.order == 2.0**g.kernel.params["N"]


def test_positive_definite_random(rng):
    for _ in range(10):
        dim = int(rng.integers(1, 3))
        nodes = NodeSet(rng.uniform(-np.pi, np.pi, (int(rng.integers(2, 12)), dim)))
        m = min_separation_integer(separation_radius(nodes))
        N = int(np.ceil(np.log2(8 * m)))
        assert build_gram(nodes, dim / 2 + 0.5, N).eigvalsh()[0] > 0


def test_quadratic_form_identity(rng):
    # a^H I a = ||G||_2^2 with G = sum_j a_j K(. - y_j), K the "square root" of the truncated kernel
    s, N = 1.5, 4
    nodes = NodeSet(rng.uniform(-np.pi, np.pi, (6, 2)))
    a = rng.standard_normal(6)
    I = build_gram(nodes, s, N).matrix
    K = sobolev_kernel(2 * s, N, 2)
    r2 = K.index_set.norms_sq
    root = np.sqrt(DEFAULT_CUTOFF(np.sqrt(r2) / 2**N)) * (1 + r2) ** (-s / 2)
    ghat = root * (np.exp(-1j * K.index_set.indices @ nodes.points.T) @ a)
    assert a @ I @ a == pytest.approx(np.sum(np.abs(ghat) ** 2), rel=1e-10)


def test_errors():
    with pytest.raises(DuplicateNodes):
        build_gram(NodeSet([[0.1], [0.1]]), 1.5, 3)
    with pytest.raises(ValueError):
        build_gram(NodeSet([[0.1], [0.2]]), 0.5, 3)
    bad = GramSystem(NodeSet([[0.0], [1.0]]), 1.0, 1, sobolev_kernel(2, 1), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        kernel_fit(bad, [1.0, 1.0])


def test_default_level():
    nodes = circle(16)
    eta = separation_radius(nodes)
    N = default_level(nodes)
    assert 2**N >= 8 / eta > 2 ** (N - 1)
    assert default_level(NodeSet([[0.0]])) == 3


def test_inverse_norm_grows_with_M():
    rows, slope = inverse_norm_diagnostic([circle(M) for M in (8, 16, 32, 64)], 2.0)
    norms = [r.inverse_norm for r in rows]
    assert all(b > a for a, b in zip(norms, norms[1:]))
    assert slope > 0
    assert [r.m for r in rows] == [min_separation_integer(np.pi / M) for M in (8, 16, 32, 64)]


def test_inverse_norm_stabilizes_in_level():
    nodes = circle(12)
    norms = [inverse_norm_diagnostic([nodes], 1.5, N)[0][0].inverse_norm for N in range(5, 10)]
    diffs = np.abs(np.diff(norms)) / norms[-1]
    assert diffs[-1] <= 1e-3
    assert diffs[-1] <= diffs[0]


def test_kernel_matrix_shape(rng):
    K = sobolev_kernel(2.0, 3, 1)
    x = rng.uniform(-3, 3, (4, 1))
    y = rng.uniform(-3, 3, (6, 1))
    M = kernel_matrix(K, x, y)
    assert M.shape == (4, 6)
    np.testing.assert_allclose(M[1, 2], K(x[1] - y[2]), atol=1e-14)
