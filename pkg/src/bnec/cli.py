"""Command-line front end: design, simulate, analyze, verify."""
from __future__ import annotations

import argparse
import json
import os
import sys
from itertools import combinations, product
from math import comb

import numpy as np

from . import __version__
from .analysis import (
    BoundReport,
    monte_carlo,
    receiver_bounds,
    reports_to_json,
    reports_to_text,
    table_counts,
)
from .channel import NoiseModel, NoiseVector, dump_trace, packet_rng, simulate_packet, trace_records
from .codec import propagate, propagate_batch
from .decode import DECODERS, ERRORS_ONLY, Status, build_bd_tables, decode_bd, make_decoder
from .design import (
    DesignConfig,
    code_hash,
    design_code,
    dump_code,
    load_code,
    validate_code,
)
from .errors import BnecError
from .fixtures import FIXTURES, load_fixture
from .netgraph import load_network_file, network_hash

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _net(arg):
    if arg is None:
        raise UsageError("--net is required")
    if os.path.exists(arg):
        return load_network_file(arg)
    if arg in FIXTURES:
        return load_fixture(arg)
    raise UsageError(f"network {arg!r} is neither a file nor a bundled fixture {FIXTURES}")


def _code(args):
    """Load --code if given, else design one from --net."""
    if args.code:
        if not os.path.exists(args.code):
            raise UsageError(f"code file {args.code!r} not found")
        with open(args.code, encoding="utf-8") as fh:
            return load_code(fh.read())
    g = _net(args.net)
    return design_code(g, args.k, DesignConfig(q=args.q, seed=args.seed))


def _meta(args, code=None, g=None):
    meta = {"tool": "bnec", "version": __version__, "command": args.command, "seed": args.seed}
    if code is not None:
        g = code.graph
        meta["code_hash"] = code_hash(code)
    if g is not None:
        meta["network_hash"] = network_hash(g)
    return meta


def _emit(args, doc: dict, text: str | None = None):
    if args.format == "text" and text is not None:
        out = text
    else:
        out = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if getattr(args, "report", None):
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def cmd_design(args) -> int:
    g = _net(args.net)
    code = design_code(g, args.k, DesignConfig(q=args.q, seed=args.seed))
    rep = validate_code(code)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dump_code(code))
    doc = _meta(args, code)
    doc.update({
        "q": code.field.q,
        "k": code.k,
        "receivers": {t: {"h": rc.h, "delta": rc.delta} for t, rc in code.receivers.items()},
        "validation": {"ok": rep.ok, "failures": rep.failures},
    })
    lines = [f"designed BNEC code over F_{code.field.q}, k={code.k}, seed={args.seed}"]
    for t, rc in code.receivers.items():
        lines.append(f"  receiver {t}: h={rc.h} delta={rc.delta}")
    lines.append("validation: " + ("ok" if rep.ok else "FAILED"))
    lines.extend("  " + f for f in rep.failures)
    _emit(args, doc, "\n".join(lines) + "\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    code = _code(args)
    model = NoiseModel.from_code(code)
    decs = {t: make_decoder(code, t, args.decoder, model) for t in code.receivers}
    stats = {t: {"symbols": 0, "corrected": 0, "detected": 0, "wrong": 0, "overflow_packets": 0,
                 "skipped": 0} for t in code.receivers}
    records = []
    for n in range(args.trials):
        rng = packet_rng(args.seed, n)
        payload = [tuple(int(x) for x in rng.integers(0, code.field.q, size=code.k))
                   for _ in range(args.packet_len)]
        packets = simulate_packet(code, payload, rng, model, strict=False)
        records.extend(trace_records(n, packets))
        for t, pkt in packets.items():
            st = stats[t]
            st["overflow_packets"] += pkt.overflow
            for u, z in zip(payload, pkt.payload):
                st["symbols"] += 1
                if pkt.overflow or (args.decoder in ERRORS_ONLY and pkt.header_erasures):
                    st["skipped"] += 1
                    continue
                out = decs[t](z)
                if out.status is Status.DETECTED:
                    st["detected"] += 1
                elif out.u_hat == u:
                    st["corrected"] += 1
                else:
                    st["wrong"] += 1
    for st in stats.values():
        st["success_rate"] = st["corrected"] / st["symbols"] if st["symbols"] else None
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(dump_trace(records))
    doc = _meta(args, code)
    doc.update({"decoder": args.decoder, "packets": args.trials, "packet_len": args.packet_len,
                "receivers": stats})
    lines = [f"{args.trials} packets of {args.packet_len} symbols, decoder {args.decoder}"]
    for t, st in stats.items():
        lines.append(f"  {t}: " + ", ".join(f"{k}={v}" for k, v in sorted(st.items())))
    _emit(args, doc, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_analyze(args) -> int:
    code = _code(args)
    model = NoiseModel.from_code(code)
    reports = []
    for t, rc in code.receivers.items():
        if args.trials > 0:
            reports.extend(monte_carlo(code, t, model, args.decoder, args.trials, args.seed))
        else:
            for formula, params, bound in receiver_bounds(code, t, model, args.decoder):
                reports.append(BoundReport(formula, {**params, "receiver": t}, bound, "lower_bound"))
        counts = table_counts(len(rc.edges), rc.delta, code.field.q, code.k, 0)
        reports.append(BoundReport("table_entries", {"receiver": t, "alpha": 0},
                                   counts["n_cn_pattern"], "upper_bound"))
    meta = _meta(args, code)
    meta["decoder"] = args.decoder
    _emit(args, json.loads(reports_to_json(reports, meta)), reports_to_text(reports))
    if any(r.passed is False for r in reports):
        return EXIT_FAIL
    return EXIT_OK


# verify: property checks on one code

def _exhaustive_budget_noise(code, t, limit):
    """Every (erasures, errors) inside E_t with a + 2b <= delta, or None if too many."""
    rc = code.receiver(t)
    q, d, E = code.field.q, rc.delta, code.n_edges
    count = 0
    for a in range(d + 1):
        for b in range((d - a) // 2 + 1):
            count += comb(len(rc.edges), a) * comb(len(rc.edges) - a, b) * (q - 1) ** b
    if count > limit:
        return None
    out = []
    for a in range(d + 1):
        for phi in combinations(rc.edges, a):
            others = [x for x in rc.edges if x not in phi]
            for b in range((d - a) // 2 + 1):
                for supp in combinations(others, b):
                    for vals in product(range(1, q), repeat=b):
                        e = [0] * E
                        for x, v in zip(supp, vals):
                            e[x - 1] = v
                        out.append(NoiseVector(tuple(e), frozenset(phi)))
    return out


def _random_budget_noise(code, t, rng, n):
    rc = code.receiver(t)
    q, d, E = code.field.q, rc.delta, code.n_edges
    out = []
    for _ in range(n):
        a = int(rng.integers(0, d + 1))
        b = int(rng.integers(0, (d - a) // 2 + 1))
        pick = [int(x) for x in rng.permutation(rc.edges)[: a + b]]
        e = [0] * E
        for x in pick[a:]:
            e[x - 1] = int(rng.integers(1, q))
        out.append(NoiseVector(tuple(e), frozenset(pick[:a])))
    return out


def verify_code(code, seed: int = 0, limit: int = 50000) -> list:
    """[(check name, passed, detail)]"""
    F = code.field
    rng = np.random.default_rng(seed)
    results = []
    rep = validate_code(code)
    results.append(("validate", rep.ok, "; ".join(rep.failures[:5])))
    if not rep.ok:
        return results
    # propagation agrees with the matrix form and syndromes ignore the input
    n = 200
    U = rng.integers(0, F.q, size=(n, code.k))
    errs = np.where(rng.random((n, code.n_edges)) < 0.3,
                    rng.integers(1, F.q, size=(n, code.n_edges)), 0)
    gone = rng.random((n, code.n_edges)) < 0.1
    Y, eff = propagate_batch(code, U, errs, gone)
    ok_prop, ok_synd = True, True
    for t, rc in code.receivers.items():
        G = np.asarray(rc.G.tolist()).reshape(rc.h, code.k)
        K = np.asarray(rc.K.tolist()).reshape(rc.h, -1)
        Z = Y[:, [i - 1 for i in rc.input_edges]]
        direct = F.np_add(F.np_matvec(G, U), F.np_matvec(K, eff))
        ok_prop &= bool((direct == Z).all())
        # erasures cancel input-dependent symbols, so this one is errors-only
        U2 = rng.integers(0, F.q, size=(n, code.k))
        Z1 = propagate_batch(code, U, errs)[0][:, [i - 1 for i in rc.input_edges]]
        Z2 = propagate_batch(code, U2, errs)[0][:, [i - 1 for i in rc.input_edges]]
        if rc.delta:
            Ht = np.asarray(rc.H.T.tolist()).reshape(rc.delta, rc.h)
            ok_synd &= bool((F.np_matvec(Ht, Z1) == F.np_matvec(Ht, Z2)).all())
    results.append(("propagate_matches_matrix", ok_prop, ""))
    results.append(("syndrome_input_independent", ok_synd, ""))
    # bounded-distance correction inside the budget
    for t in code.receivers:
        tables = build_bd_tables(code, t)
        noises = _exhaustive_budget_noise(code, t, limit)
        mode = "exhaustive"
        if noises is None:
            noises, mode = _random_budget_noise(code, t, rng, 5000), "sampled"
        bad = 0
        for noise in noises:
            u = tuple(int(x) for x in rng.integers(0, F.q, size=code.k))
            z = propagate(code, u, noise)[t]
            out = decode_bd(code, t, z, tables)
            bad += out.status is Status.DETECTED or out.u_hat != u
        results.append((f"bd_corrects_budget[{t}]", bad == 0, f"{mode}, {len(noises)} cases, {bad} failures"))
        # detection of up to delta errors with a visible effect
        rc = code.receiver(t)
        missed, checked = 0, 0
        for b in range(1, rc.delta + 1):
            for supp in combinations(rc.edges, b):
                for vals in product(range(1, F.q), repeat=b):
                    checked += 1
                    if checked > limit:
                        break
                    e = [0] * code.n_edges
                    for x, v in zip(supp, vals):
                        e[x - 1] = v
                    c = rc.K.matvec(e)
                    if any(c) and not any(rc.D.matvec(e)):
                        missed += 1
        results.append((f"detection[{t}]", missed == 0, f"{min(checked, limit)} error vectors, {missed} missed"))
    return results


def cmd_verify(args) -> int:
    if args.code:
        code = _code(args)
        if args.net:
            g = _net(args.net)
            if network_hash(g) != network_hash(code.graph):
                raise BnecError("code was designed for a different network")
    else:
        code = _code(args)
    results = verify_code(code, args.seed)
    ok = all(p for _, p, _ in results)
    doc = _meta(args, code)
    doc.update({"ok": ok, "checks": [{"name": n, "passed": p, "detail": d} for n, p, d in results]})
    text = "".join(f"{'PASS' if p else 'FAIL'}  {n}  {d}\n" for n, p, d in results)
    _emit(args, doc, text)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bnec", description="Block network error control codes.")
    p.add_argument("--version", action="version", version=f"bnec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, trials=0):
        sp.add_argument("--net", help="network JSON file or bundled fixture name")
        sp.add_argument("--code", help="code JSON file (skips design)")
        sp.add_argument("--k", type=int, default=1)
        sp.add_argument("--q", type=int, default=0, help="field size (0: automatic)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("json", "text"), default="json")
        sp.add_argument("--report", help="write the report here instead of stdout")
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--decoder", choices=DECODERS, default="bd")

    d = sub.add_parser("design", help="design a code for a network")
    common(d)
    d.add_argument("--out", help="write the code JSON here")
    s = sub.add_parser("simulate", help="simulate packets and decode them")
    common(s, trials=100)
    s.add_argument("--packet-len", type=int, default=1)
    s.add_argument("--trace", help="write packet traces (JSON lines) here")
    a = sub.add_parser("analyze", help="bounds and Monte Carlo estimates")
    common(a, trials=10000)
    v = sub.add_parser("verify", help="run the property checks on a code")
    common(v)
    return p


COMMANDS = {"design": cmd_design, "simulate": cmd_simulate, "analyze": cmd_analyze, "verify": cmd_verify}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "trials", 0) < 0 or getattr(args, "packet_len", 1) < 1:
        print("bnec: error: --trials must be >= 0 and --packet-len >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bnec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BnecError as exc:
        print(f"bnec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
