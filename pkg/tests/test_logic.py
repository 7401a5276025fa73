import itertools
import random

import pytest

from adaptsyn.logic import (And, Atom, Dra, Finally, Globally, LassoWord,
                            LtlSyntaxError, Not, Or, TrueFormula,
                            UndeclaredPropositionError,
                            UnsupportedFragmentError, Until, accepts,
                            compile_to_dra, dra_to_dot, format_dra, lasso,
                            parse_dra_file, parse_ltl)
from oracles import ltl_holds

P2 = ("pi1", "pi2")


def reference_dra():
    """Automaton for 'infinitely often pi1, eventually pi2'."""
    return compile_to_dra(parse_ltl("GF pi1 & F pi2", P2), P2)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def test_parse_shapes():
    assert parse_ltl("GF pi1 & F pi2", P2) == And(
        Globally(Finally(Atom("pi1"))), Finally(Atom("pi2")))
    assert parse_ltl("G !unsafe", ("unsafe",)) == Globally(Not(Atom("unsafe")))
    assert parse_ltl("pi1", P2) == Atom("pi1")


def test_parse_precedence():
    # ! > G,F > U > & > |
    f = parse_ltl("a | b & c", ("a", "b", "c"))
    assert f == Or(Atom("a"), And(Atom("b"), Atom("c")))
    f = parse_ltl("G a U b", ("a", "b"))
    assert f == Until(Globally(Atom("a")), Atom("b"))
    f = parse_ltl("!a & b", ("a", "b"))
    assert f == And(Not(Atom("a")), Atom("b"))
    assert parse_ltl("true & a", ("a",)) == And(TrueFormula(), Atom("a"))


def test_parse_parentheses():
    f = parse_ltl("G (a | b)", ("a", "b"))
    assert f == Globally(Or(Atom("a"), Atom("b")))


def test_parse_errors():
    with pytest.raises(LtlSyntaxError) as e:
        parse_ltl("G (a", ("a",))
    assert e.value.position >= 3
    with pytest.raises(UndeclaredPropositionError):
        parse_ltl("G q", ("a",))
    with pytest.raises(LtlSyntaxError):
        parse_ltl("", ("a",))
    with pytest.raises(LtlSyntaxError):
        parse_ltl("a &", ("a",))
    with pytest.raises(ValueError):
        parse_ltl("a", ("a", "a"))  # duplicate declaration
    with pytest.raises(ValueError):
        parse_ltl("a", ("a", "U"))  # reserved name


# ---------------------------------------------------------------------------
# Acceptance on lasso words
# ---------------------------------------------------------------------------

def test_reference_verdicts():
    d = reference_dra()
    assert accepts(d, lasso([{"pi2"}], [{"pi1", "pi2"}], P2)) is True
    assert accepts(d, lasso([], [{"pi1"}], P2)) is False
    assert accepts(d, lasso([{"pi1"}], [set(), {"pi2"}], P2)) is False


def test_reference_automaton_shape():
    d = reference_dra()
    assert d.n_states == 3
    assert d.pairs == ((frozenset({0}), frozenset({2})),)


# ---------------------------------------------------------------------------
# Fragment compiler
# ---------------------------------------------------------------------------

def test_compile_safety_only():
    props = ("x_le_1", "x_ge_m1")
    d = compile_to_dra(parse_ltl("G x_le_1 & G x_ge_m1", props), props)
    assert d.n_states == 2
    (fin, acc), = d.pairs
    good, trap = 0, 1
    assert fin == {trap} and acc == {good}
    both = 0b11
    assert d.step(good, both) == good
    for a in range(4):
        if a != both:
            assert d.step(good, a) == trap
        assert d.step(trap, a) == trap  # absorbing


def test_compile_surveillance_shape():
    props = ("A", "B", "unsafe")
    d = compile_to_dra(parse_ltl("GF A & GF B & G !unsafe", props), props)
    (fin, acc), = d.pairs
    assert len(d.pairs) == 1
    assert len(fin) == 1          # the trap
    trap = next(iter(fin))
    for a in range(d.n_letters):
        assert d.step(trap, a) == trap
    unsafe_bit = 1 << props.index("unsafe")
    assert d.step(d.initial, unsafe_bit) == trap


def test_compile_rejects_outside_fragment():
    props = ("a", "b")
    for text in ("a U b", "F G a", "G F G a", "a", "!a", "F (a U b)", "G (F a | b)"):
        with pytest.raises(UnsupportedFragmentError):
            compile_to_dra(parse_ltl(text, props), props)


def test_compile_true_is_universal():
    d = compile_to_dra(parse_ltl("true", ("a",)), ("a",))
    assert d.n_states == 1
    for prefix, cycle in [((), (0,)), ((1,), (0, 1))]:
        assert accepts(d, LassoWord(prefix, cycle))


def test_compile_undeclared_atom():
    f = parse_ltl("G a", ("a",))
    with pytest.raises(UndeclaredPropositionError):
        compile_to_dra(f, ("b",))


# ---------------------------------------------------------------------------
# Compiler vs direct semantics
# ---------------------------------------------------------------------------

def _fragment_formulas(literals):
    """All conjunctions with <= 2 invariant, <= 2 recurrence and <= 2
    one-shot bodies drawn from the literal pool."""
    pool = [frozenset(c) for r in (0, 1, 2) for c in itertools.combinations(literals, r)]
    for g_bodies in pool:
        for gf_bodies in pool:
            for f_bodies in pool:
                if not (g_bodies or gf_bodies or f_bodies):
                    continue
                f: list = [Globally(b) for b in sorted(g_bodies, key=str)]
                f += [Globally(Finally(b)) for b in sorted(gf_bodies, key=str)]
                f += [Finally(b) for b in sorted(f_bodies, key=str)]
                formula = f[0]
                for part in f[1:]:
                    formula = And(formula, part)
                yield formula


def _all_lassos(n_props, max_prefix, max_cycle):
    letters = range(1 << n_props)
    for lp in range(max_prefix + 1):
        for prefix in itertools.product(letters, repeat=lp):
            for lc in range(1, max_cycle + 1):
                for cycle in itertools.product(letters, repeat=lc):
                    yield LassoWord(prefix, cycle)


def test_compiler_agrees_with_semantics_two_atoms():
    """Exhaustive over two-atom literal formulas and short lassos."""
    props = ("a", "b")
    literals = (Atom("a"), Atom("b"), Not(Atom("a")), Not(Atom("b")))
    words = list(_all_lassos(2, 1, 2))
    for f in _fragment_formulas(literals):
        d = compile_to_dra(f, props)
        assert len(d.pairs) == 1
        for w in words:
            assert accepts(d, w) == ltl_holds(f, w, props), (f, w)


def test_compiler_agrees_with_semantics_sampled():
    """Seeded sample of three-atom formulas (with some non-literal bodies)
    against longer lassos."""
    props = ("a", "b", "c")
    rng = random.Random(7)
    bodies = [Atom("a"), Atom("b"), Atom("c"), Not(Atom("a")), Not(Atom("c")),
              Or(Atom("a"), Atom("b")), And(Atom("a"), Not(Atom("b")))]
    words = []
    for _ in range(120):
        lp = rng.randint(0, 3)
        lc = rng.randint(1, 3)
        words.append(LassoWord(tuple(rng.randrange(8) for _ in range(lp)),
                               tuple(rng.randrange(8) for _ in range(lc))))
    for _ in range(250):
        parts = []
        for wrap in (Globally, lambda x: Globally(Finally(x)), Finally):
            for body in rng.sample(bodies, rng.randint(0, 2)):
                parts.append(wrap(body))
        if not parts:
            continue
        f = parts[0]
        for p in parts[1:]:
            f = And(f, p)
        d = compile_to_dra(f, props)
        for w in words:
            assert accepts(d, w) == ltl_holds(f, w, props), (f, w)


# ---------------------------------------------------------------------------
# Exchange format
# ---------------------------------------------------------------------------

def test_format_roundtrip():
    d = reference_dra()
    d2 = parse_dra_file(format_dra(d))
    assert d2.n_states == d.n_states
    assert d2.delta == d.delta
    assert d2.pairs == d.pairs
    assert d2.props == d.props


def test_import_reference_automaton():
    text = """
states 3
initial 0
props pi1 pi2
pairs 1
0 {} 0
0 {pi1} 0
0 {pi2} 1
0 {pi1 pi2} 2
1 {} 1
1 {pi2} 1
1 {pi1} 2
1 {pi1 pi2} 2
2 {} 1
2 {pi2} 1
2 {pi1} 2
2 {pi1 pi2} 2
F_1: 0
I_1: 2
"""
    d = parse_dra_file(text)
    assert d.n_states == 3 and len(d.pairs) == 1
    assert accepts(d, lasso([{"pi2"}], [{"pi1", "pi2"}], P2))
    assert not accepts(d, lasso([], [{"pi1"}], P2))


def test_import_non_total_rejected():
    text = """
states 1
initial 0
props p
pairs 1
0 {} 0
F_1:
I_1: 0
"""
    with pytest.raises(Exception) as e:
        parse_dra_file(text)
    assert "non-total" in str(e.value)


def test_import_universal():
    text = """
states 1
initial 0
props p
pairs 1
0 {} 0
0 {p} 0
F_1:
I_1: 0
"""
    d = parse_dra_file(text)
    assert accepts(d, LassoWord((), (0,)))
    assert accepts(d, LassoWord((1,), (0, 1)))


def test_import_dangling_state():
    text = """
states 1
initial 0
props p
pairs 1
0 {} 2
0 {p} 0
F_1:
I_1: 0
"""
    with pytest.raises(Exception) as e:
        parse_dra_file(text)
    assert "dangling" in str(e.value)


def test_dot_export_smoke():
    out = dra_to_dot(reference_dra())
    assert out.startswith("digraph") and "s0" in out
