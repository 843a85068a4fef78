import itertools
import random

import pytest
from hypothesis import given, strategies as st

from histmso.encoding import (
    BitLayout,
    EncodingError,
    WordModel,
    decode,
    encode,
    encode_exec,
    encode_timeline,
    from_binary,
    parse_word_model,
    to_binary,
)
from histmso.history import (
    EMPTY,
    READ,
    UNDEF,
    WRITE,
    AbstractExecution,
    History,
    MetaParams,
    Operation,
    canonical_form,
    is_k_transient,
    successors_on,
)
from histmso.traceio import GeneratorConfig, gen_exec, gen_history

FIG1_ACTIVE = ["000", "100", "110", "010", "000", "001", "101", "100", "110", "010", "110", "100", "000"]


def bits(s):
    return [int(c) for c in s]


def test_fig1_active_vectors(fig1):
    w = encode_timeline(fig1.history)
    assert w.restrict("active") == [bits(s) for s in FIG1_ACTIVE]


def test_fig1_attribute_lanes(fig1):
    h = fig1.history
    w = encode(h)
    layout = w.layout
    assert w.letters[0] == (0,) * layout.width
    # position 1 is the start of a = write(x, v1)
    assert w.event_index[1] == ("a", "start")
    assert w.lane("type")[1] == (1,)
    assert from_binary(w.lane("val")[1]) == h.meta.values.index("v1")
    assert from_binary(w.lane("obj")[1]) == h.meta.objects.index("x")
    assert w.restrict("active") == encode_timeline(h).restrict("active")


def test_read_value_lane_uses_output():
    meta = MetaParams(("p1",), ("x",), ("v1", "v2", "v3"))
    h = History(meta, (Operation("r", "p1", 1, 2, READ, "x", EMPTY, "v3"),))
    w = encode(h)
    assert from_binary(w.lane("val")[1]) == 2
    assert from_binary(w.lane("val")[2]) == 2
    h2 = History(meta, (Operation("r", "p1", 1, 2, READ, "x", EMPTY, EMPTY),))
    assert from_binary(encode(h2).lane("val")[1]) == w.layout.empty_code


def test_write_carries_input_then_output():
    meta = MetaParams(("p1",), ("x",), ("v1",))
    h = History(meta, (Operation("w", "p1", 1, 2, WRITE, "x", "v1", UNDEF),))
    w = encode(h)
    assert from_binary(w.lane("val")[1]) == 0
    assert from_binary(w.lane("val")[2]) == w.layout.undef_code


def test_trivial_timelines():
    meta = MetaParams(("p1", "p2"), ("x",), ("v1",))
    assert encode_timeline(History(meta, ())).restrict("active") == [[0, 0]]
    h = History(meta, (Operation("a", "p1", 1, 2, READ, "x", EMPTY, "v1"),))
    assert encode_timeline(h).restrict("active") == [[0, 0], [1, 0], [0, 0]]


def test_layout_widths():
    meta = MetaParams(("p1", "p2", "p3"), ("x", "y", "z"), ("v1", "v2", "v3"))
    hist = BitLayout(meta, "history")
    # 3 values + EMPTY + UNDEF need 3 bits, 3 objects need 2
    assert hist.width == 3 + 1 + 3 + 2
    ex = BitLayout(meta, "exec", 2)
    assert ex.width == hist.width + 2 + 2 * 2 + 2 * 3
    names = ex.names
    assert len(names) == len(set(names)) == ex.width
    pos = 0
    for g, lanes in ex.groups:
        assert ex.offset[g] == pos
        pos += len(lanes)
    assert BitLayout(MetaParams(("p1",), ("x",), ("v1",)), "history").obj_width == 0


def test_layout_rejects_bad_arguments():
    meta = MetaParams(("p1",), ("x",), ("v1",))
    with pytest.raises(EncodingError):
        BitLayout(meta, "bogus")
    with pytest.raises(EncodingError):
        BitLayout(meta, "exec", -1)
    with pytest.raises(EncodingError):
        BitLayout(meta).value_code("v9")


@given(st.integers(0, 255), st.integers(8, 10))
def test_binary_codes_round_trip(code, width):
    assert from_binary(to_binary(code, width)) == code


def test_binary_overflow():
    with pytest.raises(EncodingError):
        to_binary(4, 2)


@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(0, 10))
def test_history_round_trip(seed, m, n):
    h = gen_history(GeneratorConfig(seed=seed, num_procs=m, num_ops=n, num_objects=2, num_values=2, undef_prob=0.2))
    w = encode(h)
    back = decode(w)
    assert canonical_form(back) == canonical_form(h)
    assert back.ids == h.ids
    assert encode(back).letters == w.letters
    assert back.rb_pairs() == h.rb_pairs()


@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(0, 8), st.integers(0, 2))
def test_exec_round_trip(seed, m, n, k):
    x = gen_exec(GeneratorConfig(seed=seed, num_procs=m, num_ops=n, k=k, exec_mode=True, vis_density=0.5))
    back = decode(encode_exec(x, k))
    assert back.ar == x.ar
    assert back.vis == x.vis
    assert canonical_form(back.history) == canonical_form(x.history)


def test_timeline_decode_keeps_shape(fig1):
    back = decode(encode_timeline(fig1.history))
    assert [(o.proc, o.stime, o.rtime) for o in back.ops] == [
        (o.proc, o.stime, o.rtime) for o in decode(encode(fig1.history)).ops]


def _pair(ar):
    meta = MetaParams(("p1", "p2"), ("x",), ("v1",))
    h = History(meta, (Operation("a", "p1", 1, 3, WRITE, "x", "v1", EMPTY),
                       Operation("b", "p2", 2, 4, WRITE, "x", "v1", EMPTY)))
    return AbstractExecution(h, frozenset(), frozenset(ar))


def test_arc_bit_follows_arbitration():
    for ar, bit in (({("a", "b")}, 0), ({("b", "a")}, 1)):
        x = _pair(ar)
        w = encode_exec(x, 0)
        start_b = w.event_index.index(("b", "start"))
        assert w.lane("arc")[start_b] == (bit,)
        assert decode(w).ar == frozenset(ar)


def test_rb_ordered_pair_has_no_arc_bits():
    meta = MetaParams(("p1", "p2"), ("x",), ("v1",))
    h = History(meta, (Operation("a", "p1", 1, 2, WRITE, "x", "v1", EMPTY),
                       Operation("b", "p2", 3, 4, READ, "x", EMPTY, "v1")))
    x = AbstractExecution(h, frozenset({("a", "b")}), frozenset({("a", "b")}))
    w = encode_exec(x, 1)
    assert all(not any(l) for l in w.lane("arc"))
    assert all(not any(l) for l in w.lane("visc"))
    start_a = w.event_index.index(("a", "start"))
    slot = w.layout.offset["visrb"] + 1 * w.layout.k
    assert w.letters[start_a][slot] == 1


@given(st.integers(0, 10**6), st.integers(0, 2))
def test_empty_visibility_has_no_visibility_bits(seed, k):
    x = gen_exec(GeneratorConfig(seed=seed, num_procs=3, num_ops=7, k=k, exec_mode=True, vis_density=0.0))
    x = AbstractExecution(x.history, frozenset(), x.ar)
    w = encode_exec(x, k)
    assert all(not any(l) for l in w.lane("visc"))
    assert all(not any(l) for l in w.lane("visrb"))


def test_exec_preconditions():
    x = _pair({("a", "b")})
    with pytest.raises(EncodingError):
        encode_exec(x, -1)
    meta = x.meta
    h = History(meta, (Operation("a", "p1", 1, 2, WRITE, "x", "v1", EMPTY),
                       Operation("b", "p2", 3, 4, READ, "x", EMPTY, "v1")))
    # b returns-before-preceded by a but arbitrated before it
    with pytest.raises(EncodingError):
        encode_exec(AbstractExecution(h, frozenset(), frozenset({("b", "a")})), 1)
    # a visible to the second p2 operation after it but not the first: not 1-transient
    h3 = History(meta, (Operation("a", "p1", 1, 2, WRITE, "x", "v1", EMPTY),
                        Operation("b", "p2", 3, 4, READ, "x", EMPTY, "v1"),
                        Operation("c", "p2", 5, 6, READ, "x", EMPTY, "v1")))
    ar = {("a", "b"), ("a", "c"), ("b", "c")}
    x3 = AbstractExecution(h3, frozenset({("a", "c")}), frozenset(ar))
    with pytest.raises(EncodingError):
        encode_exec(x3, 1)
    assert decode(encode_exec(x3, 2)).vis == x3.vis


def _transient_by_definition(x, k):
    h = x.history
    for a in h.ids:
        for p in h.meta.processes:
            chain = successors_on(h, a, p)
            seen = [(a, b) in x.vis for b in chain]
            if k == 0:
                if any(seen):
                    return False
            elif len(seen) > k and any(s != seen[k - 1] for s in seen[k:]):
                return False
    return True


def test_transience_detector_matches_definition():
    rng = random.Random(7)
    for _ in range(300):
        cfg = GeneratorConfig(seed=rng.randrange(10**9), num_procs=rng.randint(1, 3), num_ops=rng.randint(0, 7),
                              k=2, exec_mode=True, vis_density=rng.random())
        x = gen_exec(cfg)
        # scramble visibility among rb pairs to produce non-transient cases
        extra = {(a, b) for a, b in x.history.rb_pairs() if rng.random() < 0.3}
        x = AbstractExecution(x.history, x.vis | extra, x.ar)
        for k in range(4):
            assert is_k_transient(x, k) == _transient_by_definition(x, k)


def test_decode_errors():
    meta = MetaParams(("p1", "p2"), ("x",), ("v1",))
    layout = BitLayout(meta, "timeline")
    assert len(decode(WordModel(layout, ((0, 0),)))) == 0
    with pytest.raises(EncodingError, match="at once"):
        decode(WordModel(layout, ((0, 0), (1, 1), (0, 0))))
    with pytest.raises(EncodingError, match="not null"):
        decode(WordModel(layout, ((1, 0), (0, 0))))
    with pytest.raises(EncodingError, match="never returns"):
        decode(WordModel(layout, ((0, 0), (1, 0))))


def test_decode_rejects_mismatched_attributes():
    meta = MetaParams(("p1",), ("x",), ("v1", "v2"))
    h = History(meta, (Operation("r", "p1", 1, 2, READ, "x", EMPTY, "v1"),))
    w = encode(h)
    letters = [list(l) for l in w.letters]
    off = w.layout.offset["val"]
    letters[2][off + w.layout.val_width - 1] ^= 1
    with pytest.raises(EncodingError):
        decode(WordModel(w.layout, letters))


def test_trailing_null_letters_are_padding(fig1):
    w = encode(fig1.history)
    padded = WordModel(w.layout, w.letters + ((0,) * w.layout.width,) * 3)
    assert canonical_form(decode(padded)) == canonical_form(fig1.history)


def test_decode_rejects_cyclic_arbitration():
    # three pairwise concurrent operations with arc bits forming a cycle
    meta = MetaParams(("p1", "p2", "p3"), ("x",), ("v1",))
    ops = tuple(Operation(n, p, s, 10 + s, READ, "x", EMPTY, "v1")
                for n, p, s in (("a", "p1", 1), ("b", "p2", 2), ("c", "p3", 3)))
    h = History(meta, ops)
    x = AbstractExecution(h, frozenset(), frozenset({("a", "b"), ("b", "c"), ("a", "c")}))
    w = encode_exec(x, 0)
    letters = [list(l) for l in w.letters]
    start_c = w.event_index.index(("c", "start"))
    arc = w.layout.offset["arc"]
    # c before a (slot 0), c after b (slot 1): a < b < c < a
    letters[start_c][arc] = 1
    letters[start_c][arc + 1] = 0
    with pytest.raises(EncodingError, match="cyclic"):
        decode(WordModel(w.layout, letters))


@pytest.mark.parametrize("mode", ["timeline", "history", "exec"])
def test_serialization_is_bit_exact(fig1, mode):
    if mode == "exec":
        w = encode_exec(fig1, 1)
    elif mode == "history":
        w = encode(fig1.history)
    else:
        w = encode_timeline(fig1.history)
    text = w.serialize()
    back = parse_word_model(text)
    assert back == w
    assert back.event_index == w.event_index
    assert back.serialize() == text
    assert "|" in text.splitlines()[6] or mode == "timeline"


def test_parse_rejects_bad_lines(fig1):
    text = encode(fig1.history).serialize()
    lines = text.splitlines()
    with pytest.raises(EncodingError):
        parse_word_model("\n".join(lines[1:]))
    bad = lines[:5] + ["0|1|2|0"] + lines[6:]
    with pytest.raises(EncodingError):
        parse_word_model("\n".join(bad))


def test_all_small_words_round_trip_or_fail_cleanly():
    meta = MetaParams(("p1", "p2"), ("x",), ("v1",))
    layout = BitLayout(meta, "history")
    letters = list(itertools.product((0, 1), repeat=layout.width))
    ok = 0
    for n in range(1, 4):
        for word in itertools.product(letters, repeat=n):
            w = WordModel(layout, ((0,) * layout.width,) + word)
            try:
                h = decode(w)
            except EncodingError:
                continue
            ok += 1
            assert encode(h).letters == w.letters[: len(encode(h).letters)]
    assert ok > 0
