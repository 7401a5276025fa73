import itertools
import json
import random

import pytest

from adaptsyn.casestudies import default_gridworld, gen_gridworld
from adaptsyn.systems import (DynamicsSpec, ObservationMismatchError,
                              Partition, Pts, embed, make_nonblocking,
                              make_pts, make_ts, pts_from_json, pts_to_json,
                              quotient, robustify)
from oracles import enumerate_traces


def test_embed_deterministic_dynamics():
    dyn = DynamicsSpec(
        states=(0, 1, 2), inputs=("inc", "stay"), params=("p",),
        disturbances=(0,),
        step=lambda x, u, th, d: min(x + 1, 2) if u == "inc" else x,
        predicates=(("top", lambda x: x == 2),),
    )
    pts = embed(dyn)
    assert pts.sink is None
    for x in range(3):
        for u in range(2):
            assert len(pts.succ[x][u][0]) == 1
    assert pts.label_names(2) == ("top",)


def test_embed_requires_nonempty_domains():
    base = dict(states=(0,), inputs=("u",), disturbances=(0,),
                step=lambda x, u, th, d: x, predicates=())
    with pytest.raises(ValueError):
        embed(DynamicsSpec(params=(), **base))
    with pytest.raises(ValueError):
        embed(DynamicsSpec(params=("p",), **dict(base, disturbances=())))


def test_embed_grid_drift_overrides_motion():
    cfg = default_gridworld()
    pts = gen_gridworld(cfg)
    x = pts.state_id("c7_4")          # inside the drift band
    u = pts.input_id("right")
    th = pts.param_id("+2")
    # commanded one right, drifted two left: net one cell to the left
    assert [pts.states[s] for s in pts.succ[x][u][th]] == ["c6_4"]
    th = pts.param_id("-2")
    up = pts.input_id("up")
    # one up and two to the right
    assert [pts.states[s] for s in pts.succ[x][up][th]] == ["c9_5"]


def test_embed_disturbance_image():
    dyn = DynamicsSpec(
        states=tuple(range(10)), inputs=("u",), params=("p",),
        disturbances=(-1, 0, 1),
        step=lambda x, u, th, d: min(max(x + d, 0), 9),
        predicates=(),
    )
    pts = embed(dyn)
    for x in range(10):
        for d in (-1, 0, 1):
            assert min(max(x + d, 0), 9) in pts.succ[x][0][0]


def test_embed_single_param_is_plain_ts():
    dyn = DynamicsSpec(
        states=(0, 1), inputs=("u",), params=("only",), disturbances=(0,),
        step=lambda x, u, th, d: 1 - x, predicates=(),
    )
    pts = embed(dyn)
    assert pts.params == ("only",)
    ts = robustify(pts)
    for x in range(2):
        assert ts.succ[x][0] == pts.succ[x][0][0]


def test_embed_out_of_domain_goes_to_sink():
    dyn = DynamicsSpec(
        states=(0, 1), inputs=("u",), params=("p",), disturbances=(0,),
        step=lambda x, u, th, d: x + 1,      # leaves the domain from 1
        predicates=(("bad", lambda x: False),),
    )
    pts = embed(dyn, sink_props=("bad",))
    assert pts.sink is not None
    assert pts.succ[1][0][0] == (pts.sink,)
    assert pts.label_names(pts.sink) == ("bad",)
    # sink is absorbing
    assert pts.succ[pts.sink][0][0] == (pts.sink,)


# ---------------------------------------------------------------------------
# Non-blocking completion
# ---------------------------------------------------------------------------

def test_make_nonblocking_noop():
    ts = make_ts(("a",), ("u",), (), {}, {("a", "u"): ["a"]})
    ts2, sink = make_nonblocking(ts)
    assert sink is None and ts2 is ts


def test_make_nonblocking_completes():
    ts = make_ts(("a", "b"), ("u",), (), {}, {("a", "u"): ["b"]})
    ts2, sink = make_nonblocking(ts)
    assert sink == 2
    assert ts2.succ[1][0] == (sink,)
    assert ts2.succ[sink][0] == (sink,)
    assert ts2.is_nonblocking()


def test_make_nonblocking_pts_with_labels():
    pts = make_pts(("a", "b"), ("u",), ("t",), ("bad",), {},
                   {("a", "u", "t"): ["b"]})
    pts2, sink = make_nonblocking(pts, sink_props=("bad",))
    assert pts2.succ[1][0][0] == (sink,)
    assert pts2.label_names(sink) == ("bad",)


# ---------------------------------------------------------------------------
# Quotients
# ---------------------------------------------------------------------------

def chain_ts():
    return make_ts(
        states=("a", "b", "c", "d"), inputs=("u",), props=("tail",),
        labels={"c": ["tail"], "d": ["tail"]},
        transitions={("a", "u"): ["b"], ("b", "u"): ["c"],
                     ("c", "u"): ["d"], ("d", "u"): ["d"]})


def test_quotient_identity_partition():
    ts = chain_ts()
    q = quotient(ts, Partition(tuple((s, frozenset({s})) for s in ts.states)))
    assert q.states == ts.states
    assert q.succ == ts.succ
    assert q.labels == ts.labels


def test_quotient_single_cell_needs_uniform_labels():
    ts = make_ts(("a", "b"), ("u", "v"), (), {},
                 {("a", "u"): ["b"], ("a", "v"): ["a"],
                  ("b", "u"): ["a"], ("b", "v"): ["b"]})
    q = quotient(ts, Partition((("all", frozenset({"a", "b"})),)))
    assert q.n_states == 1
    assert q.succ[0] == ((0,), (0,))


def test_quotient_rejects_mixed_labels():
    ts = chain_ts()
    with pytest.raises(ObservationMismatchError) as e:
        quotient(ts, Partition((("left", frozenset({"a", "b", "c"})),
                                ("right", frozenset({"d"})))))
    msg = str(e.value)
    assert "left" in msg and ("a" in msg or "b" in msg) and "c" in msg


def test_quotient_rejects_bad_partitions():
    ts = chain_ts()
    with pytest.raises(ValueError):
        quotient(ts, Partition((("p", frozenset({"a"})),)))  # no cover
    with pytest.raises(ValueError):
        quotient(ts, Partition((("p", frozenset({"a", "b"})),
                                ("q", frozenset({"b", "c", "d"})))))  # overlap


def test_quotient_simulates_chain():
    """Every concrete trace's cell projection is a quotient trace."""
    ts = chain_ts()
    part = Partition((("ab", frozenset({"a", "b"})), ("cd", frozenset({"c", "d"}))))
    q = quotient(ts, part)
    cell_of = {ts.state_id(s): ci for ci, (_, members) in
               enumerate([("ab", {"a", "b"}), ("cd", {"c", "d"})])
               for s in members}
    concrete = enumerate_traces(lambda x, u: ts.succ[x][u], range(4), 1, 5)
    quotient_traces = set(enumerate_traces(lambda x, u: q.succ[x][u], range(2), 1, 5))
    for tr in concrete:
        assert tuple(cell_of[x] for x in tr) in quotient_traces


# ---------------------------------------------------------------------------
# Robustification
# ---------------------------------------------------------------------------

def test_robustify_two_param(demo_pts):
    ts = robustify(demo_pts)
    x1, x2, x3 = (demo_pts.state_id(s) for s in ("x1", "x2", "x3"))
    u1, u2 = (demo_pts.input_id(u) for u in ("u1", "u2"))
    assert ts.succ[x1][u2] == (x3,)          # both slices agree
    assert ts.succ[x2][u1] == (x2, x3)       # slices disagree: union


def test_robustify_is_union_random():
    rng = random.Random(0)
    for _ in range(30):
        n_x, n_u, n_t = 3, 2, 3
        trans = {}
        for x, u, t in itertools.product(range(n_x), range(n_u), range(n_t)):
            size = rng.randint(1, n_x)
            trans[(f"s{x}", f"u{u}", f"t{t}")] = [f"s{i}" for i in rng.sample(range(n_x), size)]
        pts = make_pts([f"s{i}" for i in range(n_x)], [f"u{i}" for i in range(n_u)],
                       [f"t{i}" for i in range(n_t)], (), {}, trans)
        ts = robustify(pts)
        for x in range(n_x):
            for u in range(n_u):
                union = set().union(*(pts.succ[x][u][t] for t in range(n_t)))
                assert set(ts.succ[x][u]) == union


# ---------------------------------------------------------------------------
# Embedding soundness and model files
# ---------------------------------------------------------------------------

def test_embedding_soundness_exhaustive():
    cfg = default_gridworld()
    pts = gen_gridworld(cfg)
    from adaptsyn.casestudies import GRID_MOVES
    for (c, r) in [(0, 0), (7, 4), (7, 5), (14, 9), (5, 5)]:
        x = pts.state_id(f"c{c}_{r}")
        for u, (dc, dr) in GRID_MOVES.items():
            for theta in cfg.drifts:
                c2, r2 = c + dc, r + dr
                if (c, r) in cfg.band:
                    c2 -= theta
                if 0 <= c2 < cfg.width and 0 <= r2 < cfg.height:
                    target = pts.state_id(f"c{c2}_{r2}")
                else:
                    target = pts.sink
                succ = pts.succ[x][pts.input_id(u)][pts.param_id(f"{theta:+d}")]
                assert target in succ


def test_pts_json_roundtrip(demo_pts):
    text = pts_to_json(demo_pts)
    pts = pts_from_json(text)
    assert pts.states == demo_pts.states
    assert pts.inputs == demo_pts.inputs
    assert pts.params == demo_pts.params
    assert pts.succ == demo_pts.succ


def test_pts_json_blocking_completion():
    doc = {
        "states": ["a", "b"], "inputs": ["u"], "params": ["t"],
        "props": [], "labels": {},
        "transitions": [{"x": "a", "u": "u", "theta": "t", "successors": ["b"]}],
    }
    pts = pts_from_json(json.dumps(doc))
    assert pts.is_nonblocking()
    assert pts.sink is not None
    raw = pts_from_json(json.dumps(doc), complete_blocking=False)
    assert not raw.is_nonblocking()
