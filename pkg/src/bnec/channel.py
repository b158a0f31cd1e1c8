"""Per-edge error/erasure noise and the packet abstraction.

Each active edge first suffers an additive error (probability p_err, value
uniform over the q-1 nonzero symbols) and then an erasure (probability
p_ers) that zeroes its output.  Within a packet the erasure pattern is drawn
once and the errors are redrawn for every symbol time.

Random streams: packet n of a run seeded with s uses
``numpy.random.default_rng([s, n])``.  Inside a stream the draws happen in a
fixed order: erasure uniforms for all edges, then for each symbol the error
uniforms followed by the error values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import ReceivedVector, propagate
from .errors import BadProbability, DimensionMismatch, HeaderOverflow, ParseError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class NoiseModel:
    q: int
    p_err: tuple  # per active edge, index order
    p_ers: tuple

    def __post_init__(self):
        if len(self.p_err) != len(self.p_ers):
            raise DimensionMismatch("p_err and p_ers lengths differ")
        for p in self.p_err + self.p_ers:
            if not 0.0 <= p <= 1.0:
                raise BadProbability(f"probability {p} outside [0, 1]")

    @property
    def n_edges(self) -> int:
        return len(self.p_err)

    @classmethod
    def from_code(cls, code, p_err=None, p_ers=None) -> "NoiseModel":
        """Per-edge probabilities from the network file, optionally overridden by scalars."""
        edges = [code.graph.edge(e) for e in code.indexing.active_edges]
        pe = tuple(e.p_err if p_err is None else float(p_err) for e in edges)
        ps = tuple(e.p_ers if p_ers is None else float(p_ers) for e in edges)
        return cls(code.field.q, pe, ps)

    @classmethod
    def uniform(cls, q, n_edges, p_err, p_ers=0.0) -> "NoiseModel":
        return cls(q, (float(p_err),) * n_edges, (float(p_ers),) * n_edges)

    def errors_only(self) -> "NoiseModel":
        return NoiseModel(self.q, self.p_err, (0.0,) * self.n_edges)

    def is_uniform(self) -> bool:
        return len(set(self.p_err)) <= 1 and len(set(self.p_ers)) <= 1


@dataclass(frozen=True)
class NoiseVector:
    errors: tuple
    erased: frozenset = frozenset()

    @classmethod
    def zero(cls, n) -> "NoiseVector":
        return cls((0,) * n)

    @property
    def weight(self) -> int:
        return sum(1 for x in self.errors if x)


@dataclass
class Packet:
    receiver: str
    header_erasures: tuple
    payload: list  # ReceivedVector per symbol time
    overflow: bool = False


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def packet_rng(seed: int, n: int) -> np.random.Generator:
    return np.random.default_rng([seed, n])


def _draw_erasures(model, rng):
    return rng.random(model.n_edges) < np.asarray(model.p_ers)


def _draw_errors(model, rng, size=None):
    shape = (model.n_edges,) if size is None else (size, model.n_edges)
    hit = rng.random(shape) < np.asarray(model.p_err)
    vals = rng.integers(1, model.q, size=shape) if model.q > 1 else np.zeros(shape, dtype=np.int64)
    return np.where(hit, vals, 0)


def sample_noise(model: NoiseModel, seed=None) -> NoiseVector:
    rng = _rng(seed)
    erased = _draw_erasures(model, rng)
    errors = _draw_errors(model, rng)
    return NoiseVector(
        tuple(int(x) for x in errors),
        frozenset(int(i) + 1 for i in np.flatnonzero(erased)),
    )


def sample_noise_batch(model: NoiseModel, seed, n: int):
    """(errors, erased) arrays of shape (n, |E^a|); erased is boolean."""
    rng = _rng(seed)
    erased = rng.random((n, model.n_edges)) < np.asarray(model.p_ers)
    errors = _draw_errors(model, rng, size=n)
    return errors.astype(np.int64), erased


def simulate_packet(code, payload: Sequence[Sequence[int]], seed, model: NoiseModel | None = None,
                    erasures=None, strict: bool = True) -> dict:
    """One packet of len(payload) symbols through the network.

    ``erasures`` forces the packet's erasure pattern instead of drawing it.
    """
    if len(payload) < 1:
        raise ValueError("a packet carries at least one symbol")
    model = model or NoiseModel.from_code(code)
    rng = _rng(seed)
    drawn = _draw_erasures(model, rng)
    if erasures is None:
        erased = frozenset(int(i) + 1 for i in np.flatnonzero(drawn))
    else:
        erased = frozenset(int(i) for i in erasures)
    symbols = []
    for u in payload:
        errs = _draw_errors(model, rng)
        noise = NoiseVector(tuple(int(x) for x in errs), erased)
        symbols.append(propagate(code, u, noise))
    out = {}
    for t, rc in code.receivers.items():
        header = tuple(sorted(erased & set(rc.edges)))
        over = len(header) > rc.delta
        if over and strict:
            raise HeaderOverflow(t, header, rc.delta)
        out[t] = Packet(t, header, [s[t] for s in symbols], over)
    return out


# packet traces (JSON lines)

def trace_records(packet_no: int, packets: dict) -> list:
    return [
        {
            "format_version": FORMAT_VERSION,
            "packet": packet_no,
            "receiver": t,
            "header": list(p.header_erasures),
            "overflow": p.overflow,
            "payload": [list(z.values) for z in p.payload],
        }
        for t, p in sorted(packets.items())
    ]


def dump_trace(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def load_trace(text: str) -> list:
    """Back to (packet number, Packet) pairs."""
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
            if r.get("format_version") != FORMAT_VERSION:
                raise ParseError(f"line {n}: unsupported format_version")
            header = tuple(r["header"])
            zs = [ReceivedVector(r["receiver"], tuple(v), frozenset(header)) for v in r["payload"]]
            out.append((r["packet"], Packet(r["receiver"], header, zs, bool(r.get("overflow", False)))))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"line {n}: {exc}") from None
    return out
