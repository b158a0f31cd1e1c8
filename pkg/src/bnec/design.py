"""Construction and validation of block network error control codes.

Every active edge i carries the global encoding vector gev_i = [g_i | kappa_i]
of length k + |E^a|: the symbol on edge i is g_i . u + kappa_i . e.  The
source is fed by h_max noise-free virtual edges whose rows form a
Vandermonde seed; virtual edges are referenced by negative numbers -1..-h_max
wherever a predecessor list mixes them with real edge indices.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .errors import (
    DesignFailed,
    InfeasibleRate,
    InstanceTooLarge,
    KTooLarge,
    ParseError,
    RankDeficient,
    UnknownReceiver,
)
from .field import FieldSpec, make_field, next_supported_size
from .linalg import Matrix, _rank_rows, nullspace_basis, rank
from .netgraph import (
    EdgeIndexing,
    NetworkGraph,
    edge_disjoint_paths,
    index_active_edges,
    is_virtual,
    min_cut,
    network_from_dict,
    network_to_dict,
    with_virtual_source,
)

FORMAT_VERSION = 1
MAX_EDGES = 24
MAX_DELTA = 6


@dataclass
class ReceiverCode:
    receiver: str
    input_edges: tuple
    paths: tuple  # per path: real edge indices, upstream first
    edges: tuple  # E_t, sorted
    h: int
    delta: int
    G: Matrix
    K: Matrix
    H: Matrix
    D: Matrix
    cache: dict = field(default_factory=dict, repr=False, compare=False)


@dataclass
class BnecCode:
    k: int
    field: FieldSpec
    graph: NetworkGraph
    indexing: EdgeIndexing
    h_max: int
    virtual_rows: tuple
    inputs: dict  # edge index -> predecessor references (negative = virtual)
    lev: dict  # edge index -> coefficients aligned with inputs[i]
    gev: dict  # edge index -> tuple of length k + |E^a|
    receivers: dict
    seed: int | None = None

    @property
    def n_edges(self) -> int:
        return self.indexing.size

    def receiver(self, t) -> ReceiverCode:
        try:
            return self.receivers[t]
        except KeyError:
            raise UnknownReceiver(f"{t!r} is not a receiver") from None


@dataclass
class DesignConfig:
    q: int = 0  # 0 picks the sufficient size automatically
    seed: int = 0
    max_retries_per_edge: int | None = None
    erasure_check_sizes: str = "exactly_delta"
    allow_large: bool = False

    def __post_init__(self):
        if self.max_retries_per_edge is not None and self.max_retries_per_edge < 1:
            raise ValueError("max_retries_per_edge must be >= 1")
        if self.erasure_check_sizes not in ("exactly_delta", "up_to_delta"):
            raise ValueError(f"unknown erasure_check_sizes {self.erasure_check_sizes!r}")


def min_cuts(g: NetworkGraph) -> dict:
    return {t: min_cut(g, t) for t in g.receivers}


def required_field_size(g: NetworkGraph, k: int) -> int:
    """Sum over receivers of C(|E^a|, delta_t) * C(h_t, k), real edges only."""
    E = index_active_edges(g).size
    total = 0
    for t, h in min_cuts(g).items():
        if k > h:
            raise KTooLarge(f"k={k} exceeds the min-cut {h} of receiver {t!r}")
        total += comb(E, h - k) * comb(h, k)
    return total


def vandermonde_rows(F: FieldSpec, n: int, k: int) -> tuple:
    """Rows (1, a, a^2, ..., a^{k-1}) for a = 0, 1, ..., n-1 (as element codes)."""
    if k > 1 and n > F.q:
        raise InfeasibleRate(f"F_{F.q} has too few elements for a {k}-independent seed of {n} rows")
    return tuple(tuple(F.pow(a, j) for j in range(k)) for a in range(n))


def _combine(F, parts, width):
    acc = [0] * width
    for c, row in parts:
        if c:
            for j, x in enumerate(row):
                if x:
                    acc[j] = F.add(acc[j], F.mul(c, x))
    return acc


def _virtual_gev(vrow, E):
    return tuple(vrow) + (0,) * E


def _edge_inputs(g, idx, h_max):
    inputs = {}
    for i in range(1, idx.size + 1):
        if g.edge(idx.edge_id(i)).start == g.source:
            inputs[i] = tuple(-j for j in range(1, h_max + 1))
        else:
            inputs[i] = idx.in_sets[i]
    return inputs


def _gev_from_lev(F, k, E, i, refs, coeffs, gev, vrows):
    parts = []
    for r, c in zip(refs, coeffs):
        row = _virtual_gev(vrows[-r - 1], E) if r < 0 else gev[r]
        parts.append((c, row))
    out = _combine(F, parts, k + E)
    out[k + i - 1] = F.add(out[k + i - 1], 1)
    return tuple(out)


def receiver_paths(g: NetworkGraph, idx: EdgeIndexing, hs: dict, h_max: int) -> dict:
    """Per receiver: h_t disjoint paths, each as (virtual ref, real edge indices...)."""
    gv = with_virtual_source(g, h_max)
    gidx = index_active_edges(gv)
    out = {}
    for t in g.receivers:
        ps = edge_disjoint_paths(gv, t, hs[t], gidx)
        paths = []
        for ids in ps.edge_ids:
            head = -int(ids[0][len("__virtual_"):])
            assert is_virtual(ids[0]) and not any(is_virtual(e) for e in ids[1:])
            paths.append((head,) + tuple(idx.index_of[e] for e in ids[1:]))
        out[t] = paths
    return out


def _check_patterns(F, k, E_t, delta, sizes):
    if sizes == "up_to_delta":
        rng = range(0, delta + 1)
    else:
        rng = [delta]
    pats = []
    for a in rng:
        pats.extend(frozenset(p) for p in combinations(E_t, min(a, len(E_t))))
    return pats


def _feasible(F, k, rows, paths, patterns, i):
    """Every checked erasure pattern can still be resolved after edge i.

    Rows whose path still has an erasure position ahead of i are set aside;
    the others must carry the input independently of the erased columns so far.
    """
    seen = set()
    for phi in patterns:
        past = tuple(sorted(x for x in phi if x <= i))
        J = frozenset(j for j, p in enumerate(paths) if any(x in phi and x > i for x in p[1:]))
        key = (past, J)
        if key in seen:
            continue
        seen.add(key)
        R = [r for j, r in enumerate(rows) if j not in J]
        KR = [tuple(r[k + x - 1] for x in past) for r in R]
        A = [tuple(r[:k]) + kr for r, kr in zip(R, KR)]
        if _rank_rows(F, A, k + len(past)) != k + _rank_rows(F, KR, len(past)):
            return False
    return True


def design_code(g: NetworkGraph, k: int, cfg: DesignConfig | None = None) -> BnecCode:
    """Randomized edge-by-edge construction with per-edge independence checks."""
    cfg = cfg or DesignConfig()
    idx = index_active_edges(g)
    E = idx.size
    hs = min_cuts(g)
    if k < 1:
        raise InfeasibleRate("k must be at least 1")
    for t, h in hs.items():
        if k > h:
            raise InfeasibleRate(f"k={k} exceeds the min-cut {h} of receiver {t!r}")
    deltas = {t: h - k for t, h in hs.items()}
    if not cfg.allow_large and (E > MAX_EDGES or max(deltas.values()) > MAX_DELTA):
        raise InstanceTooLarge(
            f"|E^a|={E}, max delta={max(deltas.values())} exceed the default limits "
            f"({MAX_EDGES}, {MAX_DELTA})"
        )
    h_max = max(hs.values())
    q = cfg.q or next_supported_size(max(required_field_size(g, k), h_max))
    F = make_field(q)
    vrows = vandermonde_rows(F, h_max, k)
    inputs = _edge_inputs(g, idx, h_max)
    paths = receiver_paths(g, idx, hs, h_max)
    retries = cfg.max_retries_per_edge or 64 * len(g.receivers)
    rng = np.random.default_rng(cfg.seed)

    patterns = {
        t: _check_patterns(F, k, sorted(idx.receiver_edges[t]), deltas[t], cfg.erasure_check_sizes)
        for t in g.receivers
    }
    cut = {t: [_virtual_gev(vrows[-p[0] - 1], E) for p in paths[t]] for t in g.receivers}
    where = {}
    for t in g.receivers:
        for j, p in enumerate(paths[t]):
            for x in p[1:]:
                where.setdefault(x, []).append((t, j))

    gev, lev = {}, {}
    for i in range(1, E + 1):
        refs = inputs[i]
        for _ in range(retries):
            m = tuple(int(x) for x in rng.integers(0, q, size=len(refs)))
            row = _gev_from_lev(F, k, E, i, refs, m, gev, vrows)
            trial = {}
            ok = True
            for t, j in where.get(i, ()):
                rows = list(trial.get(t, cut[t]))
                rows[j] = row
                trial[t] = rows
            for t, rows in trial.items():
                if not _feasible(F, k, rows, paths[t], patterns[t], i):
                    ok = False
                    break
            if ok:
                break
        else:
            raise DesignFailed(idx.edge_id(i), retries)
        gev[i], lev[i] = row, m
        cut.update(trial)

    return assemble_code(g, k, F, lev, vrows, paths=paths, seed=cfg.seed)


def assemble_code(g: NetworkGraph, k: int, F: FieldSpec, lev: dict, virtual_rows,
                  parity: dict | None = None, paths: dict | None = None,
                  seed: int | None = None) -> BnecCode:
    """Build a full code from local encoding vectors (gev's follow by propagation)."""
    idx = index_active_edges(g)
    E = idx.size
    hs = min_cuts(g)
    h_max = len(virtual_rows)
    if h_max < max(hs.values()):
        raise InfeasibleRate(f"{h_max} virtual rows but a min-cut of {max(hs.values())}")
    vrows = tuple(tuple(int(x) for x in r) for r in virtual_rows)
    if any(len(r) != k for r in vrows):
        raise ValueError("virtual rows must have length k")
    inputs = _edge_inputs(g, idx, h_max)
    if paths is None:
        paths = receiver_paths(g, idx, hs, h_max)
    gev = {}
    levs = {}
    for i in range(1, E + 1):
        m = tuple(int(x) for x in lev[i])
        if len(m) != len(inputs[i]):
            raise ValueError(f"lev of edge {i} has {len(m)} entries, expected {len(inputs[i])}")
        levs[i] = m
        gev[i] = _gev_from_lev(F, k, E, i, inputs[i], m, gev, vrows)
    receivers = {}
    for t in g.receivers:
        ins = tuple(p[-1] for p in paths[t])
        G = Matrix(F, [gev[i][:k] for i in ins], k)
        K = Matrix(F, [gev[i][k:] for i in ins], E)
        H = parity[t] if parity and t in parity else parity_check_matrix(G)
        receivers[t] = ReceiverCode(
            receiver=t,
            input_edges=ins,
            paths=tuple(tuple(p[1:]) for p in paths[t]),
            edges=tuple(sorted(idx.receiver_edges[t])),
            h=len(ins),
            delta=len(ins) - k,
            G=G,
            K=K,
            H=H,
            D=H.T @ K,
        )
    return BnecCode(k, F, g, idx, h_max, vrows, inputs, levs, gev, receivers, seed)


def parity_check_matrix(G: Matrix) -> Matrix:
    """H with H^T G = 0 and rank h - k, from the dual space of G's columns."""
    if rank(G) < G.ncols:
        raise RankDeficient(f"G has rank {rank(G)} < k={G.ncols}")
    return nullspace_basis(G.T)


# validation

def pattern_solvable(G: Matrix, Kphi: Matrix) -> bool:
    """u is uniquely determined from G u + K^phi x: G has full column rank and meets K^phi only in 0."""
    k = G.ncols
    if Kphi.ncols == 0:
        return rank(G) == k
    return rank(G.hstack(Kphi)) == k + rank(Kphi)


def check_patterns(G: Matrix, K: Matrix, edges, size: int) -> list:
    """[(pattern, ok)] for every size-`size` subset of `edges` (1-based K columns)."""
    size = min(size, len(edges))
    return [
        (phi, pattern_solvable(G, K.columns([x - 1 for x in phi])))
        for phi in combinations(sorted(edges), size)
    ]


@dataclass
class ValidationReport:
    ok: bool
    patterns: list  # (receiver, pattern, ok)
    failures: list  # human-readable problems

    def failed_patterns(self, t=None):
        return [p for r, p, ok in self.patterns if not ok and (t is None or r == t)]


def validate_code(code: BnecCode) -> ValidationReport:
    F, k, E = code.field, code.k, code.n_edges
    failures, pats = [], []
    for i in range(1, E + 1):
        row = code.gev.get(i)
        if row is None or len(row) != k + E:
            failures.append(f"edge {i}: missing or malformed gev")
            continue
        kap = row[k:]
        if kap[i - 1] != 1 or any(kap[j] for j in range(i, E)):
            failures.append(f"edge {i}: noise part is not unit upper-triangular")
        expect = _gev_from_lev(F, k, E, i, code.inputs[i], code.lev[i], code.gev, code.virtual_rows)
        if expect != tuple(row):
            failures.append(f"edge {i}: gev disagrees with its local encoding vector")
    for t, rc in code.receivers.items():
        G, K, H, D = rc.G, rc.K, rc.H, rc.D
        if G.shape != (rc.h, k) or K.shape != (rc.h, E) or H.shape != (rc.h, rc.delta):
            failures.append(f"{t}: matrix shapes do not match h={rc.h}, k={k}, delta={rc.delta}")
            continue
        for r, i in enumerate(rc.input_edges):
            if code.gev.get(i) != G.rows[r] + K.rows[r]:
                failures.append(f"{t}: row {r} of [G|K] is not the gev of input edge {i}")
        if rank(G) != k:
            failures.append(f"{t}: rank(G) = {rank(G)} < k")
        if not (H.T @ G).is_zero():
            failures.append(f"{t}: H^T G != 0")
        if rank(H) != rc.delta:
            failures.append(f"{t}: rank(H) = {rank(H)} != delta = {rc.delta}")
        if D != H.T @ K:
            failures.append(f"{t}: D != H^T K")
        outside = [j for j in range(1, E + 1) if j not in set(rc.edges)]
        if outside and not K.columns([j - 1 for j in outside]).is_zero():
            failures.append(f"{t}: K has nonzero columns outside E_t")
        for phi, ok in check_patterns(G, K, rc.edges, rc.delta):
            pats.append((t, phi, ok))
            if not ok:
                failures.append(f"{t}: erasure pattern {list(phi)} leaves u unsolvable")
    return ValidationReport(not failures, pats, failures)


# serialization

def _mat(M: Matrix):
    return {"shape": list(M.shape), "rows": M.tolist()}


def _unmat(F, d):
    return Matrix(F, d["rows"], d["shape"][1])


def code_to_dict(code: BnecCode) -> dict:
    idx = code.indexing
    return {
        "format_version": FORMAT_VERSION,
        "k": code.k,
        "field": {"q": code.field.q, "poly": code.field.poly},
        "network": network_to_dict(code.graph),
        "seed": code.seed,
        "h_max": code.h_max,
        "virtual_rows": [list(r) for r in code.virtual_rows],
        "edges": [
            {
                "index": i,
                "id": idx.edge_id(i),
                "in": list(idx.in_sets[i]),
                "inputs": list(code.inputs[i]),
                "lev": list(code.lev[i]),
                "gev": list(code.gev[i]),
            }
            for i in range(1, code.n_edges + 1)
        ],
        "receivers": {
            t: {
                "input_edges": list(rc.input_edges),
                "paths": [list(p) for p in rc.paths],
                "edges": list(rc.edges),
                "G": _mat(rc.G),
                "K": _mat(rc.K),
                "H": _mat(rc.H),
                "D": _mat(rc.D),
            }
            for t, rc in code.receivers.items()
        },
    }


def code_from_dict(doc: dict) -> BnecCode:
    try:
        if doc.get("format_version") != FORMAT_VERSION:
            raise ParseError(f"unsupported format_version {doc.get('format_version')!r}")
        F = make_field(doc["field"]["q"], doc["field"]["poly"])
        g = network_from_dict(doc["network"])
        k = doc["k"]
        edges = doc["edges"]
        active = tuple(e["id"] for e in edges)
        index_of = {eid: n + 1 for n, eid in enumerate(active)}
        in_sets = {e["index"]: tuple(e["in"]) for e in edges}
        recv = doc["receivers"]
        idx = EdgeIndexing(
            active, index_of, {t: frozenset(r["edges"]) for t, r in recv.items()}, in_sets
        )
        receivers = {}
        for t, r in recv.items():
            G, K, H, D = (_unmat(F, r[x]) for x in ("G", "K", "H", "D"))
            receivers[t] = ReceiverCode(
                t, tuple(r["input_edges"]), tuple(tuple(p) for p in r["paths"]),
                tuple(r["edges"]), G.nrows, G.nrows - k, G, K, H, D,
            )
        return BnecCode(
            k=k,
            field=F,
            graph=g,
            indexing=idx,
            h_max=doc["h_max"],
            virtual_rows=tuple(tuple(r) for r in doc["virtual_rows"]),
            inputs={e["index"]: tuple(e["inputs"]) for e in edges},
            lev={e["index"]: tuple(e["lev"]) for e in edges},
            gev={e["index"]: tuple(e["gev"]) for e in edges},
            receivers=receivers,
            seed=doc.get("seed"),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed code document: {exc!r}") from None


def dump_code(code: BnecCode) -> str:
    return json.dumps(code_to_dict(code), sort_keys=True, indent=1)


def load_code(text: str) -> BnecCode:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return code_from_dict(doc)


def code_hash(code: BnecCode) -> str:
    blob = json.dumps(code_to_dict(code), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
