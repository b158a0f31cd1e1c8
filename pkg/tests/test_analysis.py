import json
import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from bnec.analysis import (
    bd_correction_bound,
    bd_correction_exact,
    complete_correction_bound,
    complete_correction_terms,
    detection_prob_bound,
    detection_prob_exact,
    lemma1_bound,
    lemma1_count,
    monte_carlo,
    receiver_bounds,
    reports_to_json,
    reports_to_text,
    table_counts,
    wilson_interval,
)
from bnec.channel import NoiseModel
from bnec.errors import BadDecoder, NotIndependent
from bnec.field import make_field
from bnec.linalg import Matrix

probs = st.floats(0.0, 1.0, allow_nan=False)


def enum_patterns(pe, ps, accept):
    """Oracle: sum over every per-edge state (clean, erased, errored)."""
    total = 0.0
    for states in product(range(3), repeat=len(pe)):
        pr = 1.0
        for s, a, b in zip(states, pe, ps):
            pr *= (1 - b) * (1 - a) if s == 0 else (b if s == 1 else (1 - b) * a)
        if accept(states.count(1), states.count(2)):
            total += pr
    return total


@pytest.mark.parametrize("fn,args,want", [
    (detection_prob_bound, (6, 2, 0.1), 0.98415),
    (bd_correction_bound, (5, 2, 0.1), 0.91854),
    (bd_correction_bound, (6, 2, 0.05), 0.96723),
])
def test_published_values(fn, args, want):
    assert round(fn(*args), 5) == want


@pytest.mark.parametrize("n,d", [(6, 2), (5, 0), (4, 4), (10, 3)])
def test_trivial_cases(n, d):
    assert detection_prob_bound(n, d, 0.0) == 1.0
    assert bd_correction_bound(n, d, 0.0, 0.0) == 1.0
    assert detection_prob_bound(n, n, 0.3) == pytest.approx(1.0)
    assert bd_correction_bound(n, 0, 0.2) == pytest.approx(0.8 ** n)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 4), probs, probs)
def test_bd_bound_matches_enumeration(n, d, r1, r2):
    want = enum_patterns([r1] * n, [r2] * n, lambda a, b: a + 2 * b <= d)
    assert bd_correction_bound(n, d, r1, r2) == pytest.approx(want, abs=1e-12)
    assert bd_correction_exact([r1] * n, [r2] * n, d) == pytest.approx(want, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(probs, min_size=1, max_size=6), st.lists(probs, min_size=6, max_size=6), st.integers(0, 4))
def test_exact_recursions(pe, ps, d):
    ps = ps[: len(pe)]
    assert bd_correction_exact(pe, ps, d) == pytest.approx(
        enum_patterns(pe, ps, lambda a, b: a + 2 * b <= d), abs=1e-12)
    assert detection_prob_exact(pe, d) == pytest.approx(
        enum_patterns(pe, [0.0] * len(pe), lambda a, b: b <= d), abs=1e-12)


def test_complete_bound_example():
    val, clamped = complete_correction_terms(10, 10, 3, 0.05, 64)
    bd = bd_correction_bound(10, 3, 0.05)
    extra = (1 - Fraction(45, 64)) * 45 * Fraction(1, 400) * Fraction(19, 20) ** 8
    assert round(bd, 5) == 0.91386
    assert val == pytest.approx(bd + float(extra), rel=1e-12)
    assert round(val, 5) == 0.93602
    assert not clamped


def test_complete_bound_clamps():
    val, clamped = complete_correction_terms(10, 10, 3, 0.05, 16)
    assert clamped and val == pytest.approx(bd_correction_bound(10, 3, 0.05))
    assert complete_correction_bound(6, 6, 2, 0.1, 7) == bd_correction_bound(6, 2, 0.1)


def test_table_counts_repetition():
    c = table_counts(6, 2, 7, 1)
    assert (c["n_cn_pattern"], c["n_rec_pattern"]) == (37, 259)
    assert c["n_syndrome_pattern"] == 37
    assert c["n_error"][1] == 36
    with pytest.raises(ValueError):
        table_counts(6, 2, 7, 1, alpha=3)


def test_table_counts_bound_bd_tables(rep):
    from bnec.decode import build_bd_tables

    tab = build_bd_tables(rep, "t")
    c = table_counts(6, 2, 7, 1)
    assert tab.n_entries(()) <= c["n_cn_pattern"]
    assert sum(tab.n_entries(p) for p in tab.tables) <= c["n_cn"]


@pytest.mark.parametrize("cols,q,want", [
    ([[1, 0], [0, 1]], 3, 1),
    ([[1, 0, 1], [0, 1, 1]], 3, 3),
    ([[2], [1]], 5, 1),
])
def test_lemma1_examples(cols, q, want):
    assert lemma1_count(Matrix(make_field(q), cols)) == want


def test_lemma1_not_independent():
    with pytest.raises(NotIndependent):
        lemma1_count(Matrix(make_field(3), [[1, 2], [0, 0]]))


def test_lemma1_bound():
    assert lemma1_bound(3, 2, 2) == (1, "exact")
    assert lemma1_bound(3, 5, 2) == (27, "upper_bound")


def test_wilson():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0)


def test_monte_carlo_noise_free(designed):
    code = designed["butterfly"]
    m = NoiseModel.uniform(code.field.q, code.n_edges, 0.0, 0.0)
    for r in monte_carlo(code, "t1", m, "bd", 200, 1):
        assert r.measured == 1.0 and r.passed


def test_monte_carlo_repetition(rep):
    m = NoiseModel.uniform(7, 6, 0.05)
    det, cor = monte_carlo(rep, "t", m, "bd", 20000, 3)
    assert round(cor.bound, 4) == 0.9672
    assert det.passed and cor.passed
    assert cor.direction == "lower_bound" and cor.trials == 20000


def test_monte_carlo_errors(rep):
    m = NoiseModel.uniform(7, 6, 0.05)
    with pytest.raises(ValueError):
        monte_carlo(rep, "t", m, "bd", 0, 1)
    with pytest.raises(BadDecoder):
        monte_carlo(rep, "t", m, "nope", 10, 1)


def test_errors_only_decoder_note(designed):
    code = designed["butterfly"]
    m = NoiseModel.from_code(code)
    reps = monte_carlo(code, "t2", m, "three-stage", 500, 2)
    assert all(r.notes for r in reps)


def test_nonuniform_bounds(designed):
    code = designed["delta3"]
    pe = tuple(0.01 * (i + 1) for i in range(code.n_edges))
    m = NoiseModel(code.field.q, pe, (0.0,) * code.n_edges)
    (fd, _, bd), (fc, _, bc) = receiver_bounds(code, "t", m, "bd")
    assert (fd, fc) == ("detection_exact", "bd_correction_exact")
    assert bd == pytest.approx(detection_prob_exact(pe, 3))


def test_report_formats(rep):
    m = NoiseModel.uniform(7, 6, 0.05)
    reps = monte_carlo(rep, "t", m, "bd", 1000, 3)
    doc = json.loads(reports_to_json(reps, {"seed": 3}))
    assert doc["seed"] == 3 and len(doc["reports"]) == 2
    assert "bd_correction" in reports_to_text(reps)
