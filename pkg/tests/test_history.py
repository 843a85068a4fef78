from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from histmso.history import (
    EMPTY,
    READ,
    UNDEF,
    WRITE,
    AbstractExecution,
    History,
    HistoryError,
    MetaParams,
    Operation,
    canonical_form,
    check_history,
    direct_successor_on,
    is_k_transient,
    rb,
    session_order,
    succs,
    successors_on,
    validate_execution,
    validate_history,
)
from histmso.traceio import GeneratorConfig, gen_exec, gen_history

META = MetaParams(("p1", "p2"), ("x",), ("v1", "v2"))


def w(i, p, s, r, v="v1"):
    return Operation(i, p, s, r, WRITE, "x", v, EMPTY)


def rd(i, p, s, r, v="v1"):
    return Operation(i, p, s, r, READ, "x", EMPTY, v)


def names(problems):
    return {v.invariant for v in problems}


def test_fig1_is_valid(fig1):
    assert validate_history(fig1.history) == []
    assert fig1.history.ord() == ["a", "d", "f", "b", "e", "c"]
    assert fig1.history.op("c").stime == Fraction(31, 2)


def test_fig1_direct_successors(fig1):
    h = fig1.history
    assert direct_successor_on(h, "a", "p2") == "e"
    assert direct_successor_on(h, "a", "p1") == "b"
    assert succs(h, "a") == {"b", "e", "f"}
    assert succs(h, "c") == set()


def test_fig1_returns_before(fig1):
    h = fig1.history
    assert rb(h, "a", "f") and rb(h, "d", "f")
    assert not rb(h, "b", "e") and not rb(h, "e", "b")
    assert session_order(h, "a", "b") and not session_order(h, "a", "e")


def test_shared_timestamp_is_rejected():
    h = History(META, (w("a", "p1", 1, 5), w("b", "p2", 5, 7)))
    assert "distinct timestamps" in names(validate_history(h))


def test_other_invariants():
    bad = History(META, (
        w("a", "p1", 3, 2),
        w("b", "p1", 0, 4),
        Operation("c", "p3", 6, 7, READ, "x", "v1", "v9"),
        w("d", "p2", 8, 9, v=EMPTY),
        Operation("e", "p2", 10, 11, WRITE, "x", "v1", "v1"),
    ))
    got = names(validate_history(bad))
    assert {"stime < rtime", "stime > 0", "process in meta", "read has ival EMPTY", "oval in values",
            "write has ival in values", "write has oval EMPTY or UNDEF"} <= got


def test_overlap_on_one_process():
    h = History(META, (w("a", "p1", 1, 4), w("b", "p1", 2, 5)))
    assert "disjoint intervals per process" in names(validate_history(h))
    with pytest.raises(HistoryError):
        check_history(h)


def test_empty_history_is_valid():
    assert validate_history(History(META, ())) == []


def test_execution_checks():
    h = History(META, (w("a", "p1", 1, 2), rd("b", "p2", 3, 4)))
    good = AbstractExecution(h, {("a", "b")}, {("a", "b")})
    assert validate_execution(good) == []
    backwards = AbstractExecution(h, {("b", "a")}, {("b", "a")})
    got = names(validate_execution(backwards))
    assert {"rb included in ar", "rb(a,b) excludes vis(b,a)"} <= got
    assert validate_execution(backwards, real_time=False) == []
    partial = AbstractExecution(h, set(), set())
    assert "ar total and antisymmetric" in names(validate_execution(partial))


def test_k_transience():
    h = History(META, (w("a", "p1", 1, 2), rd("b", "p2", 3, 4), rd("c", "p2", 5, 6)))
    ar = {("a", "b"), ("a", "c"), ("b", "c")}
    both = AbstractExecution(h, {("a", "b"), ("a", "c")}, ar)
    first_only = AbstractExecution(h, {("a", "b")}, ar)
    assert not is_k_transient(both, 0)
    assert is_k_transient(both, 1)
    assert not is_k_transient(first_only, 1)
    assert is_k_transient(first_only, 2)
    assert successors_on(h, "a", "p2") == ["b", "c"]


def test_canonical_form_ignores_names_and_scale():
    h1 = History(META, (w("a", "p1", 1, 2), rd("b", "p2", 3, 4, UNDEF)))
    h2 = History(META, (w("x1", "p1", 10, 20), rd("x2", "p2", 30, 40, UNDEF)))
    assert canonical_form(h1) == canonical_form(h2)


configs = st.builds(
    GeneratorConfig,
    seed=st.integers(0, 10**6),
    num_procs=st.integers(1, 4),
    num_ops=st.integers(0, 12),
    num_objects=st.integers(1, 2),
    num_values=st.integers(1, 3),
    k=st.integers(0, 3),
    overlap=st.floats(0, 1),
    vis_density=st.floats(0, 1),
)


@given(configs)
def test_generated_histories_are_valid(cfg):
    h = gen_history(cfg)
    assert validate_history(h) == []
    assert len(h) == cfg.num_ops


@given(configs)
def test_generated_executions_are_real_time_and_k_transient(cfg):
    x = gen_exec(cfg)
    assert validate_execution(x, real_time=True) == []
    assert is_k_transient(x, cfg.k)


@given(configs)
def test_session_order_is_total_per_process(cfg):
    h = gen_history(cfg)
    for p in h.meta.processes:
        mine = h.on_process(p)
        for i, a in enumerate(mine):
            for b in mine[i + 1:]:
                assert session_order(h, a, b) and not session_order(h, b, a)
