"""Propagation of inputs and noise through a code, syndromes and input recovery."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .design import BnecCode
from .errors import DimensionMismatch, NotInCodeSpace
from .linalg import Matrix, left_inverse, nullspace_basis, rank, solve_linear


@dataclass(frozen=True)
class ReceivedVector:
    receiver: str
    values: tuple
    known_erasures: frozenset = frozenset()

    def __len__(self):
        return len(self.values)


def _values(z) -> tuple:
    return tuple(z.values) if isinstance(z, ReceivedVector) else tuple(int(x) for x in z)


def _erasures(z) -> frozenset:
    return z.known_erasures if isinstance(z, ReceivedVector) else frozenset()


def edge_symbols(code: BnecCode, u: Sequence[int], noise) -> tuple[list, list]:
    """Symbols y_1..y_E edge by edge, plus the effective additive noise.

    An erased edge outputs 0; its effective noise is minus the symbol it would
    have carried, so that y = gev . [u; e_eff] holds on every edge.
    """
    F, E = code.field, code.n_edges
    errors = tuple(noise.errors)
    if len(u) != code.k:
        raise DimensionMismatch(f"input has length {len(u)}, expected k={code.k}")
    if len(errors) != E:
        raise DimensionMismatch(f"noise has length {len(errors)}, expected |E^a|={E}")
    virt = [F.dot(r, u) for r in code.virtual_rows]
    y = [0] * (E + 1)
    eff = [0] * E
    for i in range(1, E + 1):
        acc = 0
        for r, c in zip(code.inputs[i], code.lev[i]):
            if c:
                acc = F.add(acc, F.mul(c, virt[-r - 1] if r < 0 else y[r]))
        if i in noise.erased:
            eff[i - 1] = F.neg(acc)
            y[i] = 0
        else:
            eff[i - 1] = errors[i - 1]
            y[i] = F.add(acc, errors[i - 1])
    return y[1:], eff


def propagate(code: BnecCode, u: Sequence[int], noise) -> dict:
    """Received vector at every receiver; erased edges in E_t become side information."""
    y, _ = edge_symbols(code, u, noise)
    out = {}
    for t, rc in code.receivers.items():
        vals = tuple(y[i - 1] for i in rc.input_edges)
        seen = frozenset(i for i in noise.erased if i in set(rc.edges))
        out[t] = ReceivedVector(t, vals, seen)
    return out


def propagate_batch(code: BnecCode, U, errors, erased=None):
    """Vectorized edge_symbols for N inputs at once.

    U is (N, k), errors (N, E) and erased an optional boolean (N, E) array.
    Returns (Y, eff), both (N, E).
    """
    F, E = code.field, code.n_edges
    U = np.asarray(U, dtype=np.int64).reshape(-1, code.k)
    errors = np.asarray(errors, dtype=np.int64).reshape(len(U), E)
    if erased is None:
        erased = np.zeros(errors.shape, dtype=bool)
    virt = F.np_matvec(np.asarray(code.virtual_rows, dtype=np.int64).reshape(-1, code.k), U)
    Y = np.zeros((len(U), E), dtype=np.int64)
    eff = np.zeros((len(U), E), dtype=np.int64)
    for i in range(1, E + 1):
        acc = np.zeros(len(U), dtype=np.int64)
        for r, c in zip(code.inputs[i], code.lev[i]):
            if c:
                src = virt[:, -r - 1] if r < 0 else Y[:, r - 1]
                acc = F.np_add(acc, F.np_mul(c, src))
        gone = erased[:, i - 1]
        eff[:, i - 1] = np.where(gone, F.np_neg(acc), errors[:, i - 1])
        Y[:, i - 1] = np.where(gone, 0, F.np_add(acc, errors[:, i - 1]))
    return Y, eff


def syndrome(code: BnecCode, t, z) -> tuple:
    rc = code.receiver(t)
    vals = _values(z)
    if len(vals) != rc.h:
        raise DimensionMismatch(f"received vector has length {len(vals)}, expected h={rc.h}")
    return rc.H.T.matvec(vals)


def _cached(rc, key, make):
    c = rc.cache.get(key)
    if c is None:
        c = rc.cache[key] = make()
    return c


def pattern_parity(code: BnecCode, t, phi) -> Matrix:
    """Columns span the annihilator of the D columns named by phi (delta_t rows)."""
    rc = code.receiver(t)
    phi = tuple(sorted(phi))

    def make():
        Dphi = rc.D.columns([x - 1 for x in phi])
        return nullspace_basis(Dphi.T)

    return _cached(rc, ("parity", phi), make)


def input_recovery(code: BnecCode, t, phi=()) -> Matrix:
    """k x h matrix R with R (G u + K^phi x) = u whenever the pattern is solvable."""
    rc = code.receiver(t)
    phi = tuple(sorted(phi))

    def make():
        Kp = rc.K.columns([x - 1 for x in phi])
        cols = []
        r = 0
        # keep a basis of K^phi so [G | basis] has full column rank
        for j in range(Kp.ncols):
            trial = cols + [j]
            if rank(Kp.columns(trial)) > r:
                cols, r = trial, r + 1
        L = left_inverse(rc.G.hstack(Kp.columns(cols)))
        return L.select_rows(range(code.k))

    return _cached(rc, ("recover", phi), make)


def recover_input(code: BnecCode, t, corrected) -> tuple:
    """The unique u with G_t u = corrected."""
    rc = code.receiver(t)
    res = solve_linear(rc.G, _values(corrected))
    if res.kind == "none":
        raise NotInCodeSpace("vector is not in the column span of G_t")
    return res.solution
