import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from bnec.channel import NoiseVector
from bnec.codec import (
    ReceivedVector,
    edge_symbols,
    input_recovery,
    pattern_parity,
    propagate,
    propagate_batch,
    recover_input,
    syndrome,
)
from bnec.errors import DimensionMismatch, NotInCodeSpace, UnknownReceiver


def matrix_model(code, u, eff):
    """y = gev . [u; e_eff] on every edge."""
    F = code.field
    return [F.dot(code.gev[i], list(u) + list(eff)) for i in range(1, code.n_edges + 1)]


@st.composite
def noisy_inputs(draw, code):
    q, E = code.field.q, code.n_edges
    u = draw(st.lists(st.integers(0, q - 1), min_size=code.k, max_size=code.k))
    errors = draw(st.lists(st.integers(0, q - 1), min_size=E, max_size=E))
    erased = draw(st.frozensets(st.integers(1, E), max_size=2))
    return u, NoiseVector(tuple(errors), erased)


def test_repetition_example(rep):
    # error 4 on edge 1 reaches the first path: 5 + 4 = 2 in F_7
    out = propagate(rep, [5], NoiseVector((4, 0, 0, 0, 0, 0)))
    assert out["t"].values == (2, 5, 5)
    assert syndrome(rep, "t", out["t"]) == (4, 0)


def test_repetition_erasure(rep):
    out = propagate(rep, [5], NoiseVector((0,) * 6, frozenset({4})))
    assert out["t"].values == (0, 5, 5)
    assert out["t"].known_erasures == frozenset({4})


@pytest.mark.parametrize("name", ["three_path", "butterfly", "delta3"])
def test_propagate_matches_matrix(designed, name):
    code = designed[name]

    @settings(max_examples=40, deadline=None)
    @given(noisy_inputs(code))
    def check(arg):
        u, noise = arg
        y, eff = edge_symbols(code, u, noise)
        assert y == matrix_model(code, u, eff)
        for i in noise.erased:
            assert y[i - 1] == 0
        for t, z in propagate(code, u, noise).items():
            assert z.values == tuple(y[i - 1] for i in code.receiver(t).input_edges)

    check()


@pytest.mark.parametrize("name", ["three_path", "butterfly", "delta3"])
def test_batch_matches_scalar(designed, name):
    code = designed[name]
    rng = np.random.default_rng(3)
    N, E, q = 50, code.n_edges, code.field.q
    U = rng.integers(0, q, size=(N, code.k))
    errors = np.where(rng.random((N, E)) < 0.3, rng.integers(0, q, size=(N, E)), 0)
    erased = rng.random((N, E)) < 0.2
    Y, eff = propagate_batch(code, U, errors, erased)
    for n in range(N):
        noise = NoiseVector(tuple(int(x) for x in errors[n]), frozenset(int(i) + 1 for i in np.flatnonzero(erased[n])))
        y, e = edge_symbols(code, [int(x) for x in U[n]], noise)
        assert list(Y[n]) == y and list(eff[n]) == e


@pytest.mark.parametrize("name", ["three_path", "butterfly", "delta3"])
def test_syndrome_ignores_input(designed, name):
    code = designed[name]
    q = code.field.q

    @settings(max_examples=30, deadline=None)
    @given(noisy_inputs(code), st.lists(st.integers(0, q - 1), min_size=code.k, max_size=code.k))
    def check(arg, u2):
        u, noise = arg
        noise = NoiseVector(noise.errors)  # errors only
        a, b = propagate(code, u, noise), propagate(code, u2, noise)
        for t in code.receivers:
            assert syndrome(code, t, a[t]) == syndrome(code, t, b[t])

    check()


def test_syndrome_is_d_times_noise(designed):
    code = designed["delta3"]
    rc = code.receiver("t")
    rng = np.random.default_rng(0)
    for _ in range(30):
        e = [int(x) for x in rng.integers(0, code.field.q, size=code.n_edges)]
        z = propagate(code, [3], NoiseVector(tuple(e)))["t"]
        assert syndrome(code, "t", z) == rc.D.matvec(e)


def test_syndrome_length_check(rep):
    with pytest.raises(DimensionMismatch):
        syndrome(rep, "t", (1, 2))
    with pytest.raises(UnknownReceiver):
        syndrome(rep, "nobody", (1, 2, 3))
    with pytest.raises(DimensionMismatch):
        edge_symbols(rep, [1, 2], NoiseVector.zero(6))


def test_pattern_parity(rep):
    P = pattern_parity(rep, "t", (4,))
    assert P.shape == (2, 1)
    D = rep.receiver("t").D
    assert (P.T @ D.columns([3])).is_zero()


@pytest.mark.parametrize("name", ["three_path", "delta3"])
def test_input_recovery_under_erasures(designed, name):
    code = designed[name]
    rc = code.receiver("t")
    rng = np.random.default_rng(1)
    F = code.field
    from itertools import combinations

    for phi in combinations(rc.edges, rc.delta):
        R = input_recovery(code, "t", phi)
        for _ in range(3):
            u = [int(x) for x in rng.integers(0, F.q, size=code.k)]
            noise = NoiseVector((0,) * code.n_edges, frozenset(phi))
            z = propagate(code, u, noise)["t"]
            assert tuple(R.matvec(z.values)) == tuple(u)


def test_recover_input(rep):
    assert recover_input(rep, "t", ReceivedVector("t", (3, 3, 3))) == (3,)
    with pytest.raises(NotInCodeSpace):
        recover_input(rep, "t", (3, 3, 4))
