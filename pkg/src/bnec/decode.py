"""Receiver-side detection and decoding.

Decoders here:

* ``decode_exhaustive``: brute-force oracle over (u, erasure values, errors).
* ``decode_bd``: bounded-distance syndrome lookup, one table per erasure pattern.
* ``decode_three_stage``: errors-only, tests every pattern of size delta//2.
* ``decode_complete``: errors-only minimum-weight decoding up to delta-1 errors.
* ``decode_complete_ml_basic`` / ``decode_complete_ml_threestage``: maximum
  likelihood over coded error vectors.

Syndrome keys are tuples of element codes; the JSON dumps encode them as a
base-q integer with the first component most significant.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, product

import numpy as np

from .codec import _erasures, _values, input_recovery, pattern_parity, syndrome
from .design import BnecCode
from .errors import Ambiguous, BadDecoder, CodeDefect, ErasuresPresent, InstanceTooLarge
from .linalg import Matrix, in_column_span, left_inverse, rank, same_column_span, solve_linear

FORMAT_VERSION = 1
EXHAUSTIVE_LIMIT = 1 << 22
ML_SYNDROME_LIMIT = 1 << 24
ML_ENUM_LIMIT = 1 << 23
TIE_RTOL = 1e-9


class Status(str, Enum):
    CLEAN = "clean"
    CORRECTED = "corrected"
    DETECTED = "detected_uncorrectable"


@dataclass(frozen=True)
class DecodeOutcome:
    status: Status
    u_hat: tuple | None = None
    coded_error: tuple | None = None
    pattern: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.status is not Status.DETECTED


DETECTED = DecodeOutcome(Status.DETECTED)


def radix_key(values, q: int) -> int:
    n = 0
    for x in values:
        n = n * q + int(x)
    return n


def radix_unkey(n: int, q: int, length: int) -> tuple:
    out = []
    for _ in range(length):
        n, r = divmod(n, q)
        out.append(r)
    return tuple(reversed(out))


def detect(code: BnecCode, t, z) -> bool:
    """True iff the syndrome is nonzero."""
    return any(syndrome(code, t, z))


def _finish(code, t, vals, c, pattern=None, clean=False):
    """Outcome for a received vector once its coded error c is fixed."""
    rc = code.receiver(t)
    F = code.field
    w = F.vsub(vals, c)
    u = input_recovery(code, t, ()).matvec(w)
    if rc.G.matvec(u) != w:
        return DETECTED
    return DecodeOutcome(Status.CLEAN if clean else Status.CORRECTED, u, tuple(c), pattern)


def _clean(code, t, vals):
    return _finish(code, t, vals, (0,) * len(vals), (), clean=True)


# bounded-distance decoding

@dataclass
class BdTable:
    receiver: str
    q: int
    delta: int
    h: int
    tables: dict  # erasure pattern -> {projected syndrome: error part of the coded vector}

    @property
    def n_tables(self) -> int:
        return len(self.tables)

    def n_entries(self, phi=None) -> int:
        if phi is not None:
            return len(self.tables[tuple(sorted(phi))])
        return sum(len(v) for v in self.tables.values())

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "receiver": self.receiver,
            "q": self.q,
            "delta": self.delta,
            "h": self.h,
            "tables": [
                {
                    "pattern": list(phi),
                    "entries": {str(radix_key(k, self.q)): list(v) for k, v in sorted(tab.items())},
                    "key_length": len(next(iter(tab))) if tab else 0,
                }
                for phi, tab in sorted(self.tables.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "BdTable":
        tables = {}
        for rec in d["tables"]:
            n = rec["key_length"]
            tables[tuple(rec["pattern"])] = {
                radix_unkey(int(k), d["q"], n): tuple(v) for k, v in rec["entries"].items()
            }
        return cls(d["receiver"], d["q"], d["delta"], d["h"], tables)


def _weighted_sum(F, cols, vals, n):
    acc = [0] * n
    for col, v in zip(cols, vals):
        for j, x in enumerate(col):
            if x:
                acc[j] = F.add(acc[j], F.mul(v, x))
    return tuple(acc)


def build_bd_tables(code: BnecCode, t) -> BdTable:
    """Per erasure pattern (size a <= delta): every error part with at most
    (delta - a) // 2 errors, keyed by the syndrome projected away from the
    erased columns of D."""
    rc = code.receiver(t)
    F, q, d = code.field, code.field.q, rc.delta
    Kc = {i: rc.K.col(i - 1) for i in rc.edges}
    Dc = {i: rc.D.col(i - 1) for i in rc.edges}
    tables = {}
    for a in range(min(d, len(rc.edges)) + 1):
        beta = (d - a) // 2
        for phi in combinations(rc.edges, a):
            PT = pattern_parity(code, t, phi).T
            Kphi = rc.K.columns([x - 1 for x in phi])
            others = [x for x in rc.edges if x not in phi]
            tab = {}
            for w in range(beta + 1):
                for supp in combinations(others, w):
                    kc = [Kc[x] for x in supp]
                    dc = [Dc[x] for x in supp]
                    for vals in product(range(1, q), repeat=w):
                        c = _weighted_sum(F, kc, vals, rc.h)
                        key = PT.matvec(_weighted_sum(F, dc, vals, d))
                        old = tab.get(key)
                        if old is None:
                            tab[key] = c
                        elif old != c and not in_column_span(Kphi, F.vsub(c, old)):
                            raise CodeDefect(phi, key)
            tables[phi] = tab
    return BdTable(t, q, d, rc.h, tables)


def decode_bd(code: BnecCode, t, z, tables: BdTable, erasures=None) -> DecodeOutcome:
    rc = code.receiver(t)
    F = code.field
    vals = _values(z)
    er = frozenset(erasures) if erasures is not None else _erasures(z)
    if len(er) > rc.delta:
        return DETECTED
    s = syndrome(code, t, vals)
    if not er and not any(s):
        return _clean(code, t, vals)
    phi = tuple(sorted(er))
    if phi not in tables.tables:
        raise ValueError(f"erasures {list(phi)} are not all in E_t of {t!r}")
    key = pattern_parity(code, t, phi).T.matvec(s)
    c_err = tables.tables[phi].get(key)
    if c_err is None:
        return DETECTED
    u = input_recovery(code, t, phi).matvec(F.vsub(vals, c_err))
    coded = F.vsub(vals, rc.G.matvec(u))
    return DecodeOutcome(Status.CORRECTED, u, coded, phi)


# pattern banks

def coded_map(code: BnecCode, t, phi) -> Matrix:
    """h x delta matrix M with M s = K^phi e whenever s = D^phi e."""
    rc = code.receiver(t)
    phi = tuple(sorted(phi))
    key = ("coded_map", phi)
    M = rc.cache.get(key)
    if M is None:
        Dp = rc.D.columns([x - 1 for x in phi])
        basis, r = [], 0
        for j in range(len(phi)):
            if rank(Dp.columns(basis + [j])) > r:
                basis, r = basis + [j], r + 1
        if not basis:
            M = Matrix.zeros(code.field, rc.h, rc.delta)
        else:
            L = left_inverse(Dp.columns(basis))
            M = rc.K.columns([phi[j] - 1 for j in basis]) @ L
        rc.cache[key] = M
    return M


def _accepts(code, t, phi, s) -> bool:
    return not any(pattern_parity(code, t, phi).T.matvec(s))


def decode_three_stage(code: BnecCode, t, z) -> DecodeOutcome:
    """Errors-only: zero syndrome, else patterns of size delta//2 explaining s."""
    if _erasures(z):
        raise ErasuresPresent("the three-stage decoder handles errors only")
    rc = code.receiver(t)
    vals = _values(z)
    s = syndrome(code, t, vals)
    if not any(s):
        return _clean(code, t, vals)
    found = None
    for phi in combinations(rc.edges, rc.delta // 2):
        if _accepts(code, t, phi, s):
            c = coded_map(code, t, phi).matvec(s)
            if found is None:
                found = (phi, c)
            elif c != found[1]:
                raise CodeDefect(phi, s)
    if found is None:
        return DETECTED
    return _finish(code, t, vals, found[1], found[0])


def _bank(code, t, size):
    rc = code.receiver(t)
    key = ("bank", size)
    bank = rc.cache.get(key)
    if bank is None:
        bank = []
        for phi in combinations(rc.edges, size):
            PT = np.asarray(pattern_parity(code, t, phi).T.tolist(), dtype=np.int64).reshape(-1, rc.delta)
            M = np.asarray(coded_map(code, t, phi).tolist(), dtype=np.int64).reshape(rc.h, rc.delta)
            bank.append((phi, PT, M))
        rc.cache[key] = bank
    return bank


def complete_decode_syndromes(code: BnecCode, t, S):
    """Vectorized minimum-weight decoding of many syndromes.

    Returns (clean, ok, C): clean marks zero syndromes, ok marks syndromes with
    a unique lightest explanation of weight <= delta-1, C holds its coded vector.
    """
    rc = code.receiver(t)
    F, d, h = code.field, rc.delta, rc.h
    S = np.asarray(S, dtype=np.int64).reshape(-1, d)
    N = len(S)
    clean = ~S.any(axis=1)
    done = clean.copy()
    ok = np.zeros(N, dtype=bool)
    C = np.zeros((N, h), dtype=np.int64)
    for b in range(max(1, d // 2), d):
        found = np.zeros(N, dtype=bool)
        conflict = np.zeros(N, dtype=bool)
        Cb = np.zeros((N, h), dtype=np.int64)
        live = np.flatnonzero(~done)
        if not len(live):
            break
        Sl = S[live]
        for phi, PT, M in _bank(code, t, b):
            if PT.shape[0]:
                acc = ~F.np_matvec(PT, Sl).any(axis=1)
            else:
                acc = np.ones(len(live), dtype=bool)
            if not acc.any():
                continue
            idx = live[acc]
            cc = F.np_matvec(M, S[idx])
            seen = found[idx]
            Cb[idx[~seen]] = cc[~seen]
            conflict[idx[seen]] |= (Cb[idx[seen]] != cc[seen]).any(axis=1)
            found[idx] = True
        good = found & ~conflict
        ok |= good
        C[good] = Cb[good]
        done |= found
    return clean, ok, C


def decode_complete(code: BnecCode, t, z) -> DecodeOutcome:
    """Errors-only: the coded error of the lightest explanation, if all lightest agree."""
    if _erasures(z):
        raise ErasuresPresent("the complete decoder handles errors only")
    vals = _values(z)
    s = syndrome(code, t, vals)
    if not any(s):
        return _clean(code, t, vals)
    _, ok, C = complete_decode_syndromes(code, t, [s])
    if not ok[0]:
        return DETECTED
    return _finish(code, t, vals, tuple(int(x) for x in C[0]))


# exhaustive oracle

def _all_vectors(q, n):
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(product(range(q), repeat=n)), dtype=np.int64)


def _error_parts(code, t, others, beta):
    """Coded vectors K e for all e on `others` with at most beta nonzeros."""
    rc = code.receiver(t)
    F, q = code.field, code.field.q
    rows = [(0,) * rc.h]
    for w in range(1, beta + 1):
        for supp in combinations(others, w):
            cols = [rc.K.col(x - 1) for x in supp]
            for vals in product(range(1, q), repeat=w):
                rows.append(_weighted_sum(F, cols, vals, rc.h))
    return np.asarray(rows, dtype=np.int64)


def _exhaustive_table(code, t, phi):
    rc = code.receiver(t)
    key = ("exhaustive", phi)
    tab = rc.cache.get(key)
    if tab is not None:
        return tab
    F, q, k = code.field, code.field.q, code.k
    beta = (rc.delta - len(phi)) // 2
    others = [x for x in rc.edges if x not in phi]
    n_err = sum(math.comb(len(others), w) * (q - 1) ** w for w in range(beta + 1))
    total = q ** k * q ** len(phi) * n_err
    if total > EXHAUSTIVE_LIMIT or rc.h * math.log2(q) > 62:
        raise InstanceTooLarge(f"exhaustive table for pattern {list(phi)} needs {total} rows")
    U = _all_vectors(q, k)
    X = _all_vectors(q, len(phi))
    G = np.asarray(rc.G.tolist(), dtype=np.int64).reshape(rc.h, k)
    Kp = np.asarray(rc.K.columns([x - 1 for x in phi]).tolist(), dtype=np.int64).reshape(rc.h, len(phi))
    V = F.np_matvec(G, U)
    W = F.np_matvec(Kp, X)
    Ce = _error_parts(code, t, others, beta)
    Z = F.np_add(F.np_add(V[:, None, None, :], W[None, :, None, :]), Ce[None, None, :, :])
    Z = Z.reshape(-1, rc.h)
    uid = np.repeat(np.arange(len(U)), len(X) * len(Ce))
    weights = q ** np.arange(rc.h - 1, -1, -1, dtype=np.int64)
    keys = Z @ weights
    order = np.lexsort((uid, keys))
    keys, uid = keys[order], uid[order]
    first = np.r_[True, keys[1:] != keys[:-1]]
    starts = np.flatnonzero(first)
    ukeys = keys[starts]
    lo = uid[starts]
    hi = np.maximum.reduceat(uid, starts)
    tab = (ukeys, lo, lo != hi, U)
    rc.cache[key] = tab
    return tab


def decode_exhaustive(code: BnecCode, t, z) -> DecodeOutcome:
    """Search every (u, erasure values, errors within budget) explaining z."""
    rc = code.receiver(t)
    F = code.field
    vals = _values(z)
    er = tuple(sorted(_erasures(z)))
    if len(er) > rc.delta:
        return DETECTED
    ukeys, uid, amb, U = _exhaustive_table(code, t, er)
    key = radix_key(vals, F.q)
    pos = int(np.searchsorted(ukeys, key))
    if pos == len(ukeys) or ukeys[pos] != key:
        return DETECTED
    if amb[pos]:
        raise Ambiguous(f"received vector {vals} has several inputs within budget")
    u = tuple(int(x) for x in U[uid[pos]])
    coded = F.vsub(vals, rc.G.matvec(u))
    clean = not er and not any(coded)
    return DecodeOutcome(Status.CLEAN if clean else Status.CORRECTED, u, coded, er)


# equivalence and probabilities

def patterns_equivalent(code: BnecCode, t, phi1, phi2) -> bool:
    K = code.receiver(t).K
    A = K.columns([x - 1 for x in sorted(phi1)])
    B = K.columns([x - 1 for x in sorted(phi2)])
    return same_column_span(A, B)


def _error_values(e):
    if hasattr(e, "errors"):
        if e.erased:
            raise ErasuresPresent("error-vector probabilities are defined for errors only")
        return tuple(e.errors)
    return tuple(int(x) for x in e)


def error_vector_probability(model, e, edges=None) -> float:
    """Pr(e) with p/(q-1) per errored edge and 1-p per clean edge.

    ``edges`` (1-based indices) restricts the product, e.g. to E_t.
    """
    vals = _error_values(e)
    if len(vals) != model.n_edges:
        raise ValueError(f"error vector has length {len(vals)}, expected {model.n_edges}")
    idx = range(1, model.n_edges + 1) if edges is None else edges
    pr = 1.0
    for i in idx:
        p = model.p_err[i - 1]
        pr *= p / (model.q - 1) if vals[i - 1] else 1.0 - p
    return pr


def _pattern_weight(model, edges, phi):
    pr = 1.0
    for i in edges:
        p = model.p_err[i - 1]
        pr *= p / (model.q - 1) if i in phi else 1.0 - p
    return pr


def coded_error_probability(code: BnecCode, t, c, model, weight_cap: int) -> float:
    """Sum of Pr(e) over error vectors on E_t with K_t e = c and at most weight_cap errors.

    Counts per exact support come from inclusion-exclusion over subsets: the
    vectors supported inside S that map to c number q^(|S| - rank K^S) when c
    lies in the span of K^S, and 0 otherwise.
    """
    rc = code.receiver(t)
    q = code.field.q
    c = tuple(int(x) for x in c)
    cap = min(weight_cap, len(rc.edges))
    cache = {}

    def inside(S):
        n = cache.get(S)
        if n is None:
            KS = rc.K.columns([x - 1 for x in S])
            n = q ** (len(S) - rank(KS)) if in_column_span(KS, c) else 0
            cache[S] = n
        return n

    total = 0.0
    for size in range(cap + 1):
        for phi in combinations(rc.edges, size):
            exact = 0
            for r in range(size + 1):
                sign = -1 if (size - r) % 2 else 1
                for S in combinations(phi, r):
                    exact += sign * inside(S)
            if exact:
                total += exact * _pattern_weight(model, rc.edges, set(phi))
    return total


def _better(a, b) -> bool:
    """Candidate a = (prob, min weight, c) beats b under the tie rules."""
    pa, wa, ca = a
    pb, wb, cb = b
    if not math.isclose(pa, pb, rel_tol=TIE_RTOL, abs_tol=0.0):
        return pa > pb
    if wa != wb:
        return wa < wb
    return ca < cb


# complete ML decoding

@dataclass
class MlTable:
    receiver: str
    q: int
    delta: int
    entries: dict  # syndrome -> coded error vector
    probs: dict  # syndrome -> Pr(chosen c)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "receiver": self.receiver,
            "q": self.q,
            "delta": self.delta,
            "entries": {str(radix_key(s, self.q)): list(c) for s, c in sorted(self.entries.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def enumerate_errors(code: BnecCode, t, model, max_weight: int):
    """Arrays (S, C, P, W) over every error vector on E_t with at most max_weight errors."""
    rc = code.receiver(t)
    F, q = code.field, code.field.q
    D = np.asarray(rc.D.tolist(), dtype=np.int64).reshape(rc.delta, -1)
    K = np.asarray(rc.K.tolist(), dtype=np.int64).reshape(rc.h, -1)
    total = sum(math.comb(len(rc.edges), w) * (q - 1) ** w for w in range(max_weight + 1))
    if total > ML_ENUM_LIMIT:
        raise InstanceTooLarge(f"{total} error vectors to enumerate")
    Ss, Cs, Ps, Ws = [], [], [], []
    for w in range(max_weight + 1):
        combos = list(product(range(1, q), repeat=w))
        vals = np.array(combos, dtype=np.int64).reshape(len(combos), w)
        for supp in combinations(rc.edges, w):
            cols = [x - 1 for x in supp]
            Ss.append(F.np_matvec(D[:, cols], vals))
            Cs.append(F.np_matvec(K[:, cols], vals))
            Ps.append(np.full(len(vals), _pattern_weight(model, rc.edges, set(supp))))
            Ws.append(np.full(len(vals), w))
    return np.concatenate(Ss), np.concatenate(Cs), np.concatenate(Ps), np.concatenate(Ws)


def build_ml_table(code: BnecCode, t, model) -> MlTable:
    """For every syndrome, the coded error vector of largest total probability
    over error vectors of weight <= delta_t."""
    rc = code.receiver(t)
    q, d = code.field.q, rc.delta
    if q ** d > ML_SYNDROME_LIMIT:
        raise InstanceTooLarge(f"q^delta = {q ** d} syndromes")
    S, C, P, W = enumerate_errors(code, t, model, d)
    sk = S @ (q ** np.arange(d - 1, -1, -1, dtype=np.int64)) if d else np.zeros(len(S), dtype=np.int64)
    ck = C @ (q ** np.arange(rc.h - 1, -1, -1, dtype=np.int64))
    order = np.lexsort((ck, sk))
    sk, ck, P, W, C = sk[order], ck[order], P[order], W[order], C[order]
    first = np.r_[True, (sk[1:] != sk[:-1]) | (ck[1:] != ck[:-1])]
    starts = np.flatnonzero(first)
    psum = np.add.reduceat(P, starts)
    wmin = np.minimum.reduceat(W, starts)
    best = {}
    for n, st in enumerate(starts):
        cand = (float(psum[n]), int(wmin[n]), tuple(int(x) for x in C[st]))
        key = int(sk[st])
        if key not in best or _better(cand, best[key]):
            best[key] = cand
    entries = {radix_unkey(k, q, d): v[2] for k, v in best.items()}
    probs = {radix_unkey(k, q, d): v[0] for k, v in best.items()}
    return MlTable(t, q, d, entries, probs)


def _ml_table(code, t, model):
    rc = code.receiver(t)
    key = ("ml", model)
    tab = rc.cache.get(key)
    if tab is None:
        tab = rc.cache[key] = build_ml_table(code, t, model)
    return tab


def decode_complete_ml_basic(code: BnecCode, t, z, model, table: MlTable | None = None) -> DecodeOutcome:
    if _erasures(z):
        raise ErasuresPresent("ML decoding handles errors only")
    table = table or _ml_table(code, t, model)
    vals = _values(z)
    s = syndrome(code, t, vals)
    if not any(s):
        return _clean(code, t, vals)
    c = table.entries.get(s)
    if c is None:
        return DETECTED
    return _finish(code, t, vals, c)


def min_explaining_weight(code: BnecCode, t, c, cap: int) -> int | None:
    """Smallest |S| over S in E_t with c in span(K^S), searched up to cap."""
    rc = code.receiver(t)
    for w in range(cap + 1):
        for S in combinations(rc.edges, w):
            if in_column_span(rc.K.columns([x - 1 for x in S]), c):
                return w
    return None


def decode_complete_ml_threestage(code: BnecCode, t, z, model) -> DecodeOutcome:
    """Candidates from every pattern of size delta-1 explaining s, ranked by Pr(c)."""
    if _erasures(z):
        raise ErasuresPresent("ML decoding handles errors only")
    rc = code.receiver(t)
    d = rc.delta
    vals = _values(z)
    s = syndrome(code, t, vals)
    if not any(s):
        return _clean(code, t, vals)
    cands = {}
    if d >= 1:
        for phi in combinations(rc.edges, d - 1):
            if _accepts(code, t, phi, s):
                c = coded_map(code, t, phi).matvec(s)
                cands.setdefault(c, phi)
    if not cands:
        best = None
        for phi in combinations(rc.edges, d):
            if not _accepts(code, t, phi, s):
                continue
            c = coded_map(code, t, phi).matvec(s)
            e = _solve_pattern_errors(code, t, phi, s)
            full = [0] * code.n_edges
            for x, v in zip(phi, e):
                full[x - 1] = v
            pr = error_vector_probability(model, full, rc.edges)
            if best is None or pr > best[0]:
                best = (pr, c, phi)
        if best is None:
            return DETECTED
        cands[best[1]] = best[2]
    ranked = None
    for c, phi in cands.items():
        cand = (
            coded_error_probability(code, t, c, model, d),
            min_explaining_weight(code, t, c, d),
            c,
        )
        if ranked is None or _better(cand, ranked[0]):
            ranked = (cand, phi)
    (_, _, c), phi = ranked
    return _finish(code, t, vals, c, phi)


def _solve_pattern_errors(code, t, phi, s):
    rc = code.receiver(t)
    res = solve_linear(rc.D.columns([x - 1 for x in phi]), s)
    return res.solution


DECODERS = ("exhaustive", "bd", "three-stage", "complete", "ml-basic", "ml-3stage")


def make_decoder(code: BnecCode, t, name: str, model=None):
    """A callable z -> DecodeOutcome for one receiver."""
    if name == "exhaustive":
        return lambda z: decode_exhaustive(code, t, z)
    if name == "bd":
        tables = build_bd_tables(code, t)
        return lambda z: decode_bd(code, t, z, tables)
    if name == "three-stage":
        return lambda z: decode_three_stage(code, t, z)
    if name == "complete":
        return lambda z: decode_complete(code, t, z)
    if name == "ml-basic":
        table = build_ml_table(code, t, model)
        return lambda z: decode_complete_ml_basic(code, t, z, model, table)
    if name == "ml-3stage":
        return lambda z: decode_complete_ml_threestage(code, t, z, model)
    raise BadDecoder(f"unknown decoder {name!r}; choose from {DECODERS}")


ERRORS_ONLY = {"three-stage", "complete", "ml-basic", "ml-3stage"}
