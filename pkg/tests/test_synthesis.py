import random

import pytest

from adaptsyn.adaptive import build_ats
from adaptsyn.logic import compile_to_dra, parse_ltl
from adaptsyn.synthesis import (AlphabetMismatchError, StrategyDomainError,
                                build_product, execute_strategy,
                                project_initial, solve_game, solve_rabin,
                                strategy_records, verify_solution,
                                winning_source_states)
from adaptsyn.systems import make_pts, make_ts, robustify
from oracles import rabin_winning_oracle, random_game

P2 = ("pi1", "pi2")


def reference_dra():
    return compile_to_dra(parse_ltl("GF pi1 & F pi2", P2), P2)


# ---------------------------------------------------------------------------
# Product construction
# ---------------------------------------------------------------------------

def test_product_self_loop_reaches_accepting():
    ts = make_ts(("x",), ("u",), P2, {"x": ["pi1", "pi2"]}, {("x", "u"): ["x"]})
    prod = build_product(ts, reference_dra())
    # (x, s0) step consumes {pi1, pi2}: goes to (x, s2) and loops there
    assert set(prod.nodes) == {(0, 0), (0, 2)}
    s2_node = prod.index[(0, 2)]
    assert prod.succ[s2_node][0] == (s2_node,)


def test_product_with_universal_automaton_is_isomorphic():
    ts = make_ts(("a", "b"), ("u", "v"), (), {},
                 {("a", "u"): ["b"], ("a", "v"): ["a"],
                  ("b", "u"): ["a", "b"], ("b", "v"): ["b"]})
    dra = compile_to_dra(parse_ltl("true", ("p",)), ("p",))
    prod = build_product(ts, dra)
    assert prod.n_nodes == ts.n_states
    for x in range(ts.n_states):
        pid = prod.index[(x, 0)]
        for u in range(2):
            assert {prod.nodes[m][0] for m in prod.succ[pid][u]} == set(ts.succ[x][u])


def test_product_over_ats(demo_pts):
    ats = build_ats(demo_pts)
    dra = compile_to_dra(parse_ltl("true", ("p",)), ("p",))
    prod = build_product(ats, dra)
    assert prod.n_nodes == ats.n_states


def test_product_alphabet_mismatch():
    ts = make_ts(("x",), ("u",), ("q",), {"x": ["q"]}, {("x", "u"): ["x"]})
    with pytest.raises(AlphabetMismatchError):
        build_product(ts, reference_dra())


# ---------------------------------------------------------------------------
# Small hand-checked games
# ---------------------------------------------------------------------------

def test_safety_game_trap_avoidable():
    # nodes 0,1 safe; node 2 trap. input 0 risks the trap from 1, input 1 loops.
    succ = (((1,), (0,)), ((2, 0), (1,)), ((2,), (2,)))
    pairs = ((frozenset({2}), frozenset({0, 1})),)
    sol = solve_game(succ, 2, pairs)
    assert sol.winning == {0, 1}
    assert sol.strategy[1] == 1          # must avoid the risky input
    verify_solution(succ, 2, pairs, sol)


def test_losing_when_every_input_traps():
    succ = (((1,), (1,)), ((1,), (1,)))
    pairs = ((frozenset({1}), frozenset({0})),)
    sol = solve_game(succ, 2, pairs)
    assert sol.winning == frozenset()


def test_buechi_progress_needed():
    # visiting node 1 infinitely often requires cycling 0 -> 1 -> 0
    succ = (((1,), (0,)), ((0,), (0,)))
    pairs = ((frozenset(), frozenset({1})),)
    sol = solve_game(succ, 2, pairs)
    assert sol.winning == {0, 1}
    assert sol.strategy[0] == 0
    verify_solution(succ, 2, pairs, sol)


def test_blocking_game_rejected():
    with pytest.raises(ValueError):
        solve_game((((),),), 1, ((frozenset(), frozenset({0})),))


# ---------------------------------------------------------------------------
# Oracle equivalence
# ---------------------------------------------------------------------------

def test_single_pair_matches_oracle():
    rng = random.Random(101)
    for _ in range(150):
        succ, k, pairs = random_game(rng, max_nodes=8, max_inputs=2, n_pairs=1)
        sol = solve_game(succ, k, pairs)
        assert set(sol.winning) == rabin_winning_oracle(succ, k, pairs)
        verify_solution(succ, k, pairs, sol)


def test_two_pair_matches_oracle():
    rng = random.Random(202)
    for _ in range(60):
        succ, k, pairs = random_game(rng, max_nodes=6, max_inputs=2, n_pairs=2)
        sol = solve_game(succ, k, pairs)
        assert set(sol.winning) == rabin_winning_oracle(succ, k, pairs), (succ, pairs)


def test_three_pair_matches_oracle():
    rng = random.Random(303)
    for _ in range(25):
        succ, k, pairs = random_game(rng, max_nodes=5, max_inputs=2, n_pairs=3)
        sol = solve_game(succ, k, pairs)
        assert set(sol.winning) == rabin_winning_oracle(succ, k, pairs), (succ, pairs)


# ---------------------------------------------------------------------------
# Adaptive synthesis on a miniature identification problem
# ---------------------------------------------------------------------------

def probe_pts():
    """A probe input reveals the parameter; the matching commit input then
    reaches the goal, while committing blind risks the trap."""
    trans = {}
    # probe from s: lands l under t1, r under t2
    trans[("s", "probe", "t1")] = ["l"]
    trans[("s", "probe", "t2")] = ["r"]
    # commit inputs from l/r: correct one reaches goal, wrong one traps
    for spot, good in (("l", "t1"), ("r", "t2")):
        for inp, target in (("a", "goal" if good == "t1" else "bad"),
                            ("b", "goal" if good == "t2" else "bad")):
            pass
    trans[("l", "a", "t1")] = ["goal"]
    trans[("l", "a", "t2")] = ["bad"]
    trans[("l", "b", "t1")] = ["bad"]
    trans[("l", "b", "t2")] = ["goal"]
    trans[("r", "a", "t1")] = ["goal"]
    trans[("r", "a", "t2")] = ["bad"]
    trans[("r", "b", "t1")] = ["bad"]
    trans[("r", "b", "t2")] = ["goal"]
    # staying put is allowed everywhere else
    for x in ("s", "l", "r", "goal", "bad"):
        for u in ("probe", "a", "b"):
            for t in ("t1", "t2"):
                trans.setdefault((x, u, t), [x])
    # goal returns to s so it can be visited again
    for t in ("t1", "t2"):
        trans[("goal", "probe", t)] = ["s"]
    return make_pts(("s", "l", "r", "goal", "bad"), ("probe", "a", "b"),
                    ("t1", "t2"), ("target", "unsafe"),
                    {"goal": ["target"], "bad": ["unsafe"]}, trans)


def test_adaptive_beats_robust_on_probe_model():
    pts = probe_pts()
    props = pts.props
    dra = compile_to_dra(parse_ltl("GF target & G !unsafe", props), props)

    ats = build_ats(pts)
    prod = build_product(ats, dra)
    sol = solve_rabin(prod)
    region = project_initial(sol, prod)
    assert pts.state_id("s") in region

    robust = robustify(pts)
    rprod = build_product(robust, dra)
    rsol = solve_rabin(rprod)
    rregion = winning_source_states(rsol, rprod)
    assert pts.state_id("s") not in rregion
    # adaptivity dominates robustness everywhere
    assert set(rregion) <= set(region)


def test_adaptivity_dominates_robustness_random():
    rng = random.Random(404)
    import itertools
    from adaptsyn.systems import make_pts as _make
    for _ in range(12):
        n_x, n_u, n_t = 3, 2, 2
        trans = {}
        for x, u, t in itertools.product(range(n_x), range(n_u), range(n_t)):
            size = rng.randint(1, n_x)
            trans[(f"s{x}", f"u{u}", f"t{t}")] = [f"s{i}" for i in rng.sample(range(n_x), size)]
        labels = {"s0": ["goal"]}
        pts = _make([f"s{i}" for i in range(n_x)], [f"u{i}" for i in range(n_u)],
                    [f"t{i}" for i in range(n_t)], ("goal",), labels, trans)
        dra = compile_to_dra(parse_ltl("GF goal", ("goal",)), ("goal",))
        ats = build_ats(pts)
        sol = solve_rabin(build_product(ats, dra))
        region = set(project_initial(sol, build_product(ats, dra)))
        robust = robustify(pts)
        rprod = build_product(robust, dra)
        rsol = solve_rabin(rprod)
        rregion = set(winning_source_states(rsol, rprod))
        assert rregion <= region


# ---------------------------------------------------------------------------
# Strategy queries and exports
# ---------------------------------------------------------------------------

def test_execute_strategy_and_domain_error():
    pts = probe_pts()
    dra = compile_to_dra(parse_ltl("GF target & G !unsafe", pts.props), pts.props)
    ats = build_ats(pts)
    prod = build_product(ats, dra)
    sol = solve_rabin(prod)
    s_id = pts.state_id("s")
    u = execute_strategy(sol, prod, s_id, pts.full_param_set, dra.initial)
    assert pts.inputs[u] == "probe"
    bad = pts.state_id("bad")
    with pytest.raises(StrategyDomainError):
        execute_strategy(sol, prod, bad, pts.full_param_set, dra.initial)


def test_strategy_records_shape():
    pts = probe_pts()
    dra = compile_to_dra(parse_ltl("GF target & G !unsafe", pts.props), pts.props)
    ats = build_ats(pts)
    prod = build_product(ats, dra)
    sol = solve_rabin(prod)
    recs = strategy_records(sol, prod)
    assert recs and set(recs[0]) == {"x", "theta_set", "dra_state", "input"}
    assert all(r["input"] in pts.inputs for r in recs)
