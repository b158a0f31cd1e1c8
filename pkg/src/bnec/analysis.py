"""Closed-form performance bounds, table-size counts and Monte Carlo checks."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from itertools import product
from statistics import NormalDist

import numpy as np

from .channel import NoiseModel, sample_noise_batch
from .codec import ReceivedVector, propagate_batch
from .decode import DECODERS, ERRORS_ONLY, Status, make_decoder
from .errors import BadDecoder, NotIndependent
from .linalg import Matrix, is_k_independent


def _binom_pmf(n, i, p):
    return math.comb(n, i) * p ** i * (1 - p) ** (n - i)


def detection_prob_bound(n_edges: int, delta: int, rho1: float) -> float:
    """Probability of at most delta errors on the receiver's edges."""
    return sum(_binom_pmf(n_edges, i, rho1) for i in range(min(delta, n_edges) + 1))


def bd_correction_bound(n_edges: int, delta: int, rho1: float, rho2: float = 0.0) -> float:
    """Probability that a erasures and b errors on non-erased edges satisfy a + 2b <= delta."""
    total = 0.0
    for a in range(min(delta, n_edges) + 1):
        pa = _binom_pmf(n_edges, a, rho2)
        inner = sum(_binom_pmf(n_edges - a, j, rho1) for j in range((delta - a) // 2 + 1) if j <= n_edges - a)
        total += pa * inner
    return total


def complete_failure_term(n_active: int, b: int, delta: int, q: int) -> float:
    """Upper bound on the failing fraction of weight-b error vectors."""
    return math.comb(n_active, b) * float(q) ** (b - delta)


def complete_correction_terms(n_active: int, n_edges: int, delta: int, rho1: float, q: int):
    """(bound, clamped) where clamped tells whether any per-weight factor hit 0."""
    value = bd_correction_bound(n_edges, delta, rho1)
    clamped = False
    for i in range(delta // 2 + 1, delta):
        f = 1.0 - complete_failure_term(n_active, i, delta, q)
        if f < 0:
            f, clamped = 0.0, True
        value += f * _binom_pmf(n_edges, i, rho1)
    return value, clamped


def complete_correction_bound(n_active: int, n_edges: int, delta: int, rho1: float, q: int) -> float:
    return complete_correction_terms(n_active, n_edges, delta, rho1, q)[0]


# non-uniform networks: exact Poisson-binomial style recursions

def detection_prob_exact(p_err, delta: int) -> float:
    """P(at most delta of the independent error events happen)."""
    dist = np.zeros(delta + 2)
    dist[0] = 1.0
    for p in p_err:
        nxt = dist * (1 - p)
        nxt[1:] += dist[:-1] * p
        nxt[-1] += dist[-1] * p  # overflow bucket
        dist = nxt
    return float(dist[: delta + 1].sum())


def bd_correction_exact(p_err, p_ers, delta: int) -> float:
    """P(a + 2b <= delta) with a erasures and b errors on the surviving edges."""
    dist = {(0, 0): 1.0}
    for pe, ps in zip(p_err, p_ers):
        nxt = {}
        for (a, b), pr in dist.items():
            for (da, db), w in (((0, 0), (1 - ps) * (1 - pe)), ((1, 0), ps), ((0, 1), (1 - ps) * pe)):
                na, nb = a + da, b + db
                if w and na + 2 * nb <= delta:
                    nxt[(na, nb)] = nxt.get((na, nb), 0.0) + pr * w
        dist = nxt
    return sum(dist.values())


# table sizes

def table_counts(n_edges: int, delta: int, q: int, k: int, alpha: int = 0) -> dict:
    if alpha > delta:
        raise ValueError(f"alpha={alpha} exceeds delta={delta}")

    def per_pattern(a):
        return sum(math.comb(n_edges - a, i) * (q - 1) ** i for i in range((delta - a) // 2 + 1))

    n_cn_phi = per_pattern(alpha)
    n_cn = sum(math.comb(n_edges, j) * per_pattern(j) for j in range(delta + 1))
    return {
        "n_cn_pattern": n_cn_phi,
        "n_cn": n_cn,
        "n_rec_pattern": q ** k * n_cn_phi,
        "n_rec": q ** k * n_cn,
        "n_syndrome_pattern": n_cn_phi,
        "n_error": {
            r: sum(math.comb(n_edges, i) * (q - 1) ** i for i in range(1, r + 1))
            for r in range(1, delta + 1)
        },
        "n_error_cap": {r: math.comb(n_edges, r) * q ** r for r in range(1, delta + 1)},
    }


# solution counts of sum_i d_i e_i = 0

def lemma1_bound(q: int, m: int, delta: int) -> tuple:
    """(value, direction): exactly 1 when m <= delta, else at most q^(m - delta)."""
    if m <= delta:
        return 1, "exact"
    return q ** (m - delta), "upper_bound"


def lemma1_count(D: Matrix) -> int:
    """Brute-force number of e in F_q^m with D e = 0 (D is delta x m)."""
    F = D.field
    delta, m = D.shape
    if m and not is_k_independent(D.T, min(delta, m)):
        raise NotIndependent(f"columns are not {min(delta, m)}-independent")
    if m == 0:
        return 1
    A = np.asarray(D.tolist(), dtype=np.int64).reshape(delta, m)
    E = np.array(list(product(range(F.q), repeat=m)), dtype=np.int64)
    return int((~F.np_matvec(A, E).any(axis=1)).sum())


# reports

@dataclass
class BoundReport:
    formula: str
    parameters: dict
    bound: float
    direction: str  # lower_bound | upper_bound | exact
    measured: float | None = None
    trials: int | None = None
    sigma: float | None = None
    interval: tuple | None = None
    passed: bool | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["interval"] is not None:
            d["interval"] = list(d["interval"])
        return d


def reports_to_json(reports, meta=None) -> str:
    doc = {"format_version": 1, "reports": [r.to_dict() for r in reports]}
    if meta:
        doc.update(meta)
    return json.dumps(doc, sort_keys=True, indent=1)


def reports_to_text(reports) -> str:
    lines = [f"{'formula':<22}{'direction':<13}{'bound':>10}{'measured':>10}{'trials':>9}  result"]
    for r in reports:
        meas = "-" if r.measured is None else f"{r.measured:.5f}"
        n = "-" if r.trials is None else str(r.trials)
        res = "-" if r.passed is None else ("pass" if r.passed else "FAIL")
        lines.append(f"{r.formula:<22}{r.direction:<13}{r.bound:>10.5f}{meas:>10}{n:>9}  {res}")
    return "\n".join(lines) + "\n"


def wilson_interval(successes: int, n: int, conf: float = 0.99) -> tuple:
    z = NormalDist().inv_cdf(0.5 + conf / 2)
    p = successes / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def _lower_bound_report(formula, params, bound, successes, n):
    measured = successes / n
    sigma = math.sqrt(max(bound * (1 - bound), 0.0) / n)
    return BoundReport(
        formula, params, bound, "lower_bound", measured, n, sigma,
        wilson_interval(successes, n), measured >= bound - 3 * sigma,
    )


def receiver_bounds(code, t, model: NoiseModel, decoder: str) -> list:
    """Closed-form (or exact recursion) bounds for one receiver: detection first, then correction."""
    rc = code.receiver(t)
    idx = [i - 1 for i in rc.edges]
    pe = [model.p_err[i] for i in idx]
    ps = [model.p_ers[i] for i in idx]
    n, d = len(rc.edges), rc.delta
    uniform = len(set(pe)) <= 1 and len(set(ps)) <= 1
    out = []
    if uniform:
        r1 = pe[0] if pe else 0.0
        r2 = ps[0] if ps else 0.0
        out.append(("detection", {"n_edges": n, "delta": d, "rho1": r1}, detection_prob_bound(n, d, r1)))
        if decoder == "complete":
            val = complete_correction_bound(code.n_edges, n, d, r1, model.q)
            out.append(("complete_correction", {"n_active": code.n_edges, "n_edges": n, "delta": d,
                                                "rho1": r1, "q": model.q}, val))
        elif decoder in ERRORS_ONLY:
            out.append(("bd_correction", {"n_edges": n, "delta": d, "rho1": r1, "rho2": 0.0},
                        bd_correction_bound(n, d, r1)))
        else:
            out.append(("bd_correction", {"n_edges": n, "delta": d, "rho1": r1, "rho2": r2},
                        bd_correction_bound(n, d, r1, r2)))
    else:
        out.append(("detection_exact", {"delta": d}, detection_prob_exact(pe, d)))
        zero = [0.0] * n if decoder in ERRORS_ONLY else ps
        out.append(("bd_correction_exact", {"delta": d}, bd_correction_exact(pe, zero, d)))
    return out


def monte_carlo(code, t, model: NoiseModel, decoder: str, trials: int, seed: int) -> list:
    """Empirical detection and correction rates at receiver t against their bounds.

    Correction: the decoder returns the transmitted u.  Detection: the errors
    (erasures ignored) either leave the received vector unchanged or give a
    nonzero syndrome.  Errors-only decoders are run with erasures switched off.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if decoder not in DECODERS:
        raise BadDecoder(f"unknown decoder {decoder!r}; choose from {DECODERS}")
    rc = code.receiver(t)
    F = code.field
    notes = []
    run_model = model
    if decoder in ERRORS_ONLY and any(model.p_ers):
        run_model = model.errors_only()
        notes.append("erasures disabled for an errors-only decoder")
    dec = make_decoder(code, t, decoder, run_model)
    rng = np.random.default_rng(seed)
    errors, erased = sample_noise_batch(run_model, rng, trials)
    U = rng.integers(0, F.q, size=(trials, code.k))
    Y, _ = propagate_batch(code, U, errors, erased)
    Z = Y[:, [i - 1 for i in rc.input_edges]]
    in_t = np.zeros(code.n_edges, dtype=bool)
    in_t[[i - 1 for i in rc.edges]] = True
    memo = {}
    corrected = 0
    for n in range(trials):
        er = tuple(int(i) + 1 for i in np.flatnonzero(erased[n] & in_t))
        z = tuple(int(x) for x in Z[n])
        out = memo.get((z, er))
        if out is None:
            out = memo[(z, er)] = dec(ReceivedVector(t, z, frozenset(er)))
        if out.status is not Status.DETECTED and out.u_hat == tuple(int(x) for x in U[n]):
            corrected += 1
    # detection is a property of the error part alone
    K = np.asarray(rc.K.tolist(), dtype=np.int64).reshape(rc.h, -1)
    D = np.asarray(rc.D.tolist(), dtype=np.int64).reshape(rc.delta, -1)
    C = F.np_matvec(K, errors)
    if rc.delta:
        S = F.np_matvec(D, errors)
        flagged = S.any(axis=1)
    else:
        flagged = np.zeros(trials, dtype=bool)
    detected = int((~C.any(axis=1) | flagged).sum())

    reports = []
    (fd, pd, bd), (fc, pc, bc) = receiver_bounds(code, t, run_model, decoder)
    base = {"receiver": t, "decoder": decoder, "seed": seed}
    r = _lower_bound_report(fd, {**pd, **base}, bd, detected, trials)
    r.notes = list(notes)
    reports.append(r)
    r = _lower_bound_report(fc, {**pc, **base}, bc, corrected, trials)
    r.notes = list(notes)
    reports.append(r)
    return reports
