"""Backend-agreement and closed-form checks for the hot kernels."""

import numpy as np
import pytest

from tempsync import _kernels as kern

HAVE_BOTH = "numba" in kern.IMPLEMENTATIONS

pytestmark = []


def _rand_inputs(seed, n=6, m=3, T=17):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    np.fill_diagonal(A, 0.0)
    X = rng.normal(size=(n, m))
    states = rng.normal(size=(T, n, m))
    alpha = rng.normal(size=kern.n_pairs(n))
    return A, X, states, alpha


def test_pair_index_matches_pair_arrays():
    for n in (2, 3, 5, 9):
        iu, ju, pidx = kern.pair_arrays(n)
        for p, (i, j) in enumerate(zip(iu, ju)):
            assert kern.pair_index(i, j, n) == p
            assert pidx[i, j] == p == pidx[j, i]
    with pytest.raises(ValueError):
        kern.pair_index(2, 2, 5)


def test_pair_order_is_lexicographic():
    iu, ju, _ = kern.pair_arrays(3)
    assert list(zip(iu.tolist(), ju.tolist())) == [(0, 1), (0, 2), (1, 2)]


def test_coupling_zero_matrix_gives_zero():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 2))
    out = kern.coupling_term(np.zeros((4, 4)), X, 1.0)
    assert np.all(out == 0)


def test_coupling_vanishes_on_consensus_states():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(5, 5))
    np.fill_diagonal(A, 0.0)
    v = rng.normal(size=3)
    X = np.tile(v, (5, 1))
    out = kern.coupling_term(A, X, 2.0)
    assert np.allclose(out, 0.0, atol=1e-12)


def test_xi_and_e_hat_hand_values():
    states = np.array([[[0.0], [1.0], [3.0]]])
    xi = kern.xi_series(states)
    assert np.allclose(xi[0], [1.0, 9.0, 4.0])
    assert np.allclose(kern.e_hat_series(states), [3.0])


def test_rk4_const_linear_matches_scalar_exponential():
    E = np.array([[-2.0]])
    out = kern.rk4_const_linear(E, np.zeros(1), np.ones(1), 1e-3, 2000)
    assert abs(out[-1, 0] - np.exp(-4.0)) < 1e-12


def test_rk4_const_principal_norm_decay():
    E = np.array([[-1.0, 0.5], [0.5, -1.0]])
    norms, U = kern.rk4_const_principal(E, 1e-3, 1000)
    # row-dominance margin 0.5 -> inf-norm bounded by exp(-0.5 t)
    assert norms[0] == 1.0
    assert norms[-1] <= np.exp(-0.5) * (1 + 1e-9)
    # principal solution of a constant system is the matrix exponential
    w, V = np.linalg.eigh(E)
    expm = V @ np.diag(np.exp(w)) @ V.T
    assert np.allclose(U, expm, atol=1e-10)


@pytest.mark.skipif(not HAVE_BOTH, reason="numba not installed")
@pytest.mark.parametrize("name", sorted(kern.IMPLEMENTATIONS["numpy"]))
def test_backends_agree(name):
    np_impl = kern.IMPLEMENTATIONS["numpy"][name]
    nb_impl = kern.IMPLEMENTATIONS["numba"][name]
    A, X, states, alpha = _rand_inputs(42)
    n = A.shape[0]
    iu, ju, pidx = kern.pair_arrays(n)
    if name == "coupling_term":
        args = (A, X, 1.7)
    elif name in ("xi_series",):
        args = (states, iu, ju)
    elif name == "e_hat_series":
        args = (states,)
    elif name == "delta_gamma":
        args = (A, alpha, iu, ju)
    elif name == "assemble_comparison":
        delta, _ = kern.delta_gamma(A, alpha)
        args = (A, delta, iu, ju, pidx)
    elif name == "rk4_const_linear":
        E = np.ascontiguousarray(A[:3, :3]) - 2 * np.eye(3)
        args = (E, np.ones(3), np.ones(3), 1e-2, 50)
    elif name == "rk4_sampled_linear":
        rng = np.random.default_rng(3)
        Es = rng.normal(size=(20, 3, 4, 4)) - 3 * np.eye(4)
        bs = rng.normal(size=(20, 3, 4)) ** 2
        args = (Es, bs, np.full(20, 1e-2), np.ones(4))
    elif name == "rk4_const_principal":
        E = np.ascontiguousarray(A[:3, :3]) - 2 * np.eye(3)
        args = (E, np.eye(3), 1e-2, 50)
    elif name == "rk4_sampled_principal":
        rng = np.random.default_rng(4)
        Es = rng.normal(size=(20, 3, 4, 4)) - 3 * np.eye(4)
        args = (Es, np.full(20, 1e-2), np.eye(4))
    else:  # pragma: no cover
        pytest.fail(f"no input recipe for kernel {name}")
    out_np = np_impl(*args)
    out_nb = nb_impl(*args)
    if isinstance(out_np, tuple):
        for x, y in zip(out_np, out_nb):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)
    else:
        np.testing.assert_allclose(out_np, out_nb, rtol=1e-12, atol=1e-12)


def test_backend_name_reports_active_path():
    assert kern.backend() in ("numba", "numpy")
    assert kern.backend() == ("numba" if kern.USE_NUMBA else "numpy")
