"""LTL formulas, deterministic Rabin automata, and lasso-word acceptance.

Formulas are plain recursive dataclasses.  Letters of the alphabet 2^Pi are
integer bitmasks over a fixed ordering of the declared propositions, which
keeps automaton tables dense and removes symbolic-label ambiguity.

The compiler handles conjunctions of three kinds of obligations over
propositional bodies (any boolean combination of atoms):

  * invariants        G b        -- must hold at every step,
  * recurrence        G F c      -- must hold infinitely often,
  * one-shot goals    F d        -- must hold at least once.

Anything outside that shape is rejected with ``UnsupportedFragmentError``;
arbitrary Rabin automata can still be supplied through the text exchange
format (``parse_dra_file`` / ``format_dra``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

RESERVED_WORDS = frozenset({"G", "F", "U", "true"})


class LtlSyntaxError(ValueError):
    """Raised on malformed formula text; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UndeclaredPropositionError(ValueError):
    pass


class UnsupportedFragmentError(ValueError):
    """Raised when a formula cannot be compiled; names the offending part."""

    def __init__(self, subformula: "Formula"):
        super().__init__(f"cannot compile subformula: {formula_str(subformula)}")
        self.subformula = subformula


class DraFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Formula AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Globally(Formula):
    arg: Formula


@dataclass(frozen=True)
class Finally(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


def formula_str(f: Formula) -> str:
    if isinstance(f, TrueFormula):
        return "true"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return f"!{formula_str(f.arg)}"
    if isinstance(f, And):
        return f"({formula_str(f.left)} & {formula_str(f.right)})"
    if isinstance(f, Or):
        return f"({formula_str(f.left)} | {formula_str(f.right)})"
    if isinstance(f, Globally):
        return f"G {formula_str(f.arg)}"
    if isinstance(f, Finally):
        return f"F {formula_str(f.arg)}"
    if isinstance(f, Until):
        return f"({formula_str(f.left)} U {formula_str(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def atoms_of(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, (Not, Globally, Finally)):
        return atoms_of(f.arg)
    if isinstance(f, (And, Or, Until)):
        return atoms_of(f.left) | atoms_of(f.right)
    return set()


def is_propositional(f: Formula) -> bool:
    if isinstance(f, (TrueFormula, Atom)):
        return True
    if isinstance(f, Not):
        return is_propositional(f.arg)
    if isinstance(f, (And, Or)):
        return is_propositional(f.left) and is_propositional(f.right)
    return False


# ---------------------------------------------------------------------------
# Letters
# ---------------------------------------------------------------------------

def letter_mask(props_on: Iterable[str], props: Sequence[str]) -> int:
    """Encode a set of proposition names as a bitmask over the ordering."""
    mask = 0
    for name in props_on:
        try:
            mask |= 1 << props.index(name)
        except ValueError:
            raise UndeclaredPropositionError(f"undeclared proposition: {name}") from None
    return mask


def letter_names(mask: int, props: Sequence[str]) -> tuple[str, ...]:
    return tuple(p for i, p in enumerate(props) if mask >> i & 1)


def eval_prop(f: Formula, mask: int, props: Sequence[str]) -> bool:
    """Evaluate a propositional formula on a single letter."""
    if isinstance(f, TrueFormula):
        return True
    if isinstance(f, Atom):
        return bool(mask >> props.index(f.name) & 1)
    if isinstance(f, Not):
        return not eval_prop(f.arg, mask, props)
    if isinstance(f, And):
        return eval_prop(f.left, mask, props) and eval_prop(f.right, mask, props)
    if isinstance(f, Or):
        return eval_prop(f.left, mask, props) or eval_prop(f.right, mask, props)
    raise ValueError(f"not propositional: {formula_str(f)}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Return (kind, value, position) tokens.

    A bare run of capital G/F letters is split into individual temporal
    operators so that ``GF p`` reads as G(F(p)).
    """
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()!&|":
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word == "U":
                tokens.append(("op", "U", i))
            elif word == "true":
                tokens.append(("true", word, i))
            elif set(word) <= {"G", "F"}:
                for k, c in enumerate(word):
                    tokens.append(("op", c, i + k))
            else:
                tokens.append(("ident", word, i))
            i = j
            continue
        raise LtlSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    """Recursive descent with precedence ! > G,F > U > & > |."""

    def __init__(self, text: str, props: Sequence[str]):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.props = tuple(props)

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        f = self.parse_or()
        kind, value, at = self.peek()
        if kind != "end":
            raise LtlSyntaxError(f"unexpected token {value!r}", at)
        return f

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while self.peek()[:2] == ("op", "|"):
            self.take()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self) -> Formula:
        f = self.parse_until()
        while self.peek()[:2] == ("op", "&"):
            self.take()
            f = And(f, self.parse_until())
        return f

    def parse_until(self) -> Formula:
        f = self.parse_unary()
        if self.peek()[:2] == ("op", "U"):
            self.take()
            return Until(f, self.parse_until())
        return f

    def parse_unary(self) -> Formula:
        kind, value, at = self.peek()
        if kind == "op" and value == "!":
            self.take()
            return Not(self.parse_unary())
        if kind == "op" and value == "G":
            self.take()
            return Globally(self.parse_unary())
        if kind == "op" and value == "F":
            self.take()
            return Finally(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Formula:
        kind, value, at = self.take()
        if kind == "true":
            return TrueFormula()
        if kind == "ident":
            if value not in self.props:
                raise UndeclaredPropositionError(f"undeclared proposition: {value}")
            return Atom(value)
        if kind == "op" and value == "(":
            f = self.parse_or()
            kind, value, at = self.take()
            if (kind, value) != ("op", ")"):
                raise LtlSyntaxError("expected ')'", at)
            return f
        raise LtlSyntaxError(f"expected proposition or '(', got {value!r}", at)


def parse_ltl(text: str, props: Sequence[str]) -> Formula:
    """Parse formula text against a declared proposition list."""
    if not text.strip():
        raise LtlSyntaxError("empty formula", 0)
    for p in props:
        if not p or p in RESERVED_WORDS:
            raise ValueError(f"invalid proposition name: {p!r}")
    if len(set(props)) != len(tuple(props)):
        raise ValueError("duplicate proposition names")
    return _Parser(text, props).parse()


# ---------------------------------------------------------------------------
# Deterministic Rabin automata
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dra:
    """Complete DRA over the alphabet 2^props.

    ``delta[s][letter]`` is total; ``pairs`` holds (fin, inf) state sets:
    a run is accepted iff for some pair the fin set is visited finitely
    often and the inf set infinitely often.
    """

    n_states: int
    initial: int
    props: tuple[str, ...]
    delta: tuple[tuple[int, ...], ...]
    pairs: tuple[tuple[frozenset[int], frozenset[int]], ...]

    def __post_init__(self):
        n_letters = 1 << len(self.props)
        if not self.pairs:
            raise ValueError("acceptance condition must have at least one pair")
        if not 0 <= self.initial < self.n_states:
            raise ValueError("initial state out of range")
        if len(self.delta) != self.n_states:
            raise ValueError("delta must have one row per state")
        for row in self.delta:
            if len(row) != n_letters:
                raise ValueError("delta row does not cover the alphabet")
            for s in row:
                if not 0 <= s < self.n_states:
                    raise ValueError(f"dangling state reference: {s}")
        for fin, inf in self.pairs:
            if not (fin <= set(range(self.n_states)) and inf <= set(range(self.n_states))):
                raise ValueError("acceptance pair references unknown states")

    @property
    def n_letters(self) -> int:
        return 1 << len(self.props)

    def step(self, state: int, letter: int) -> int:
        return self.delta[state][letter]


@dataclass(frozen=True)
class LassoWord:
    """Ultimately periodic word: finite prefix followed by a repeated cycle."""

    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("cycle must be non-empty")

    def at(self, k: int) -> int:
        if k < len(self.prefix):
            return self.prefix[k]
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]


def lasso(prefix: Iterable[Iterable[str]], cycle: Iterable[Iterable[str]],
          props: Sequence[str]) -> LassoWord:
    """Build a lasso word from sequences of proposition-name sets."""
    return LassoWord(tuple(letter_mask(a, props) for a in prefix),
                     tuple(letter_mask(a, props) for a in cycle))


def accepts(dra: Dra, word: LassoWord) -> bool:
    """Check the Rabin condition on the unique run over the lasso word.

    The run is advanced through the prefix, then around the cycle until a
    (state, cycle position) pair repeats; the states seen inside that loop
    are exactly the ones visited infinitely often.
    """
    state = dra.initial
    for a in word.prefix:
        state = dra.delta[state][a]
    seen: dict[tuple[int, int], int] = {}
    trace: list[int] = []
    pos = 0
    while (state, pos) not in seen:
        seen[(state, pos)] = len(trace)
        trace.append(state)
        state = dra.delta[state][word.cycle[pos]]
        pos = (pos + 1) % len(word.cycle)
    inf = set(trace[seen[(state, pos)]:])
    return any(not (inf & fin) and (inf & acc) for fin, acc in dra.pairs)


# ---------------------------------------------------------------------------
# Fragment compiler
# ---------------------------------------------------------------------------

def split_obligations(f: Formula) -> tuple[list[Formula], list[Formula], list[Formula]]:
    """Split a conjunction into (invariant bodies, recurrence bodies, one-shot bodies)."""
    invariants: list[Formula] = []
    recurrent: list[Formula] = []
    oneshot: list[Formula] = []

    def walk(g: Formula) -> None:
        if isinstance(g, And):
            walk(g.left)
            walk(g.right)
            return
        if isinstance(g, TrueFormula):
            return
        if isinstance(g, Globally):
            body = g.arg
            if isinstance(body, Finally) and is_propositional(body.arg):
                recurrent.append(body.arg)
                return
            if is_propositional(body):
                invariants.append(body)
                return
            raise UnsupportedFragmentError(g)
        if isinstance(g, Finally) and is_propositional(g.arg):
            oneshot.append(g.arg)
            return
        raise UnsupportedFragmentError(g)

    walk(f)
    return invariants, recurrent, oneshot


def compile_to_dra(f: Formula, props: Sequence[str]) -> Dra:
    """Compile an obligation conjunction into a single-pair DRA.

    Construction: an absorbing trap catches any invariant violation.  While
    one-shot goals are outstanding the automaton only tracks which of them
    remain.  Once they are all discharged, a round-robin counter walks the
    recurrence obligations, advancing (possibly several positions, at most
    one full round per letter) whenever the pointed obligation holds; states
    entered by completing a round carry a marker.  The single pair is
    (trap + still-pending states, marker states), so accepted runs are
    exactly those that never trap, discharge every one-shot goal, and
    complete rounds forever.
    """
    props = tuple(props)
    invariants, recurrent, oneshot = split_obligations(f)
    undeclared = atoms_of(f) - set(props)
    if undeclared:
        raise UndeclaredPropositionError(f"undeclared propositions: {sorted(undeclared)}")

    guard: Formula = TrueFormula()
    for body in invariants:
        guard = body if isinstance(guard, TrueFormula) else And(guard, body)
    n_rec = len(recurrent)

    TRAP = ("trap",)

    def advance(pos: int, a: int):
        if n_rec == 0:
            return ("run", 0, True)
        wrapped = False
        steps = 0
        while steps < n_rec and eval_prop(recurrent[pos], a, props):
            pos = (pos + 1) % n_rec
            steps += 1
            if pos == 0:
                wrapped = True
        return ("run", pos, wrapped)

    def step(state, a: int):
        if state == TRAP:
            return TRAP
        if not eval_prop(guard, a, props):
            return TRAP
        if state[0] == "pend":
            left = frozenset(k for k in state[1] if not eval_prop(oneshot[k], a, props))
            if left:
                return ("pend", left)
            return advance(0, a)
        return advance(state[1], a)

    if oneshot:
        start = ("pend", frozenset(range(len(oneshot))))
    elif n_rec:
        start = ("run", 0, False)
    else:
        start = ("run", 0, True)

    # breadth-first exploration in letter order gives stable state numbering
    index = {start: 0}
    order = [start]
    queue = [start]
    while queue:
        state = queue.pop(0)
        for a in range(1 << len(props)):
            nxt = step(state, a)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)

    delta = tuple(tuple(index[step(s, a)] for a in range(1 << len(props))) for s in order)
    fin = frozenset(i for i, s in enumerate(order) if s == TRAP or s[0] == "pend")
    acc = frozenset(i for i, s in enumerate(order) if s[0] == "run" and s[2])
    return Dra(n_states=len(order), initial=0, props=props, delta=delta,
               pairs=((fin, acc),))


# ---------------------------------------------------------------------------
# Text exchange format
# ---------------------------------------------------------------------------

def parse_dra_file(text: str) -> Dra:
    """Parse the explicit-transition exchange format.

    Header: ``states N``, ``initial K``, ``props p1 p2 ...``, ``pairs R``.
    Body: one ``src {p ...} dst`` line per transition (letters written as
    brace-enclosed proposition sets) and ``F_i:`` / ``I_i:`` lines listing
    pair members.  The transition function must be total.
    """
    n_states = initial = n_pairs = None
    props: tuple[str, ...] | None = None
    transitions: dict[tuple[int, int], int] = {}
    fin_sets: dict[int, frozenset[int]] = {}
    inf_sets: dict[int, frozenset[int]] = {}

    def parse_ids(rest: str, lineno: int) -> frozenset[int]:
        try:
            return frozenset(int(tok) for tok in rest.split())
        except ValueError:
            raise DraFormatError(f"line {lineno}: malformed state id list") from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "states":
            n_states = int(rest)
        elif head == "initial":
            initial = int(rest)
        elif head == "props":
            props = tuple(rest.split())
        elif head == "pairs":
            n_pairs = int(rest)
        elif head.startswith("F_") and head.endswith(":"):
            fin_sets[int(head[2:-1])] = parse_ids(rest, lineno)
        elif head.startswith("I_") and head.endswith(":"):
            inf_sets[int(head[2:-1])] = parse_ids(rest, lineno)
        else:
            if props is None or n_states is None:
                raise DraFormatError(f"line {lineno}: transition before header")
            open_b = line.find("{")
            close_b = line.find("}")
            if open_b < 0 or close_b < open_b:
                raise DraFormatError(f"line {lineno}: expected 'src {{props}} dst'")
            try:
                src = int(line[:open_b])
                dst = int(line[close_b + 1:])
            except ValueError:
                raise DraFormatError(f"line {lineno}: malformed transition") from None
            try:
                a = letter_mask(line[open_b + 1:close_b].split(), props)
            except UndeclaredPropositionError as e:
                raise DraFormatError(f"line {lineno}: {e}") from None
            for s in (src, dst):
                if not 0 <= s < n_states:
                    raise DraFormatError(f"line {lineno}: dangling state reference: {s}")
            if (src, a) in transitions and transitions[(src, a)] != dst:
                raise DraFormatError(f"line {lineno}: conflicting transition")
            transitions[(src, a)] = dst

    if None in (n_states, initial, n_pairs) or props is None:
        raise DraFormatError("missing header line (states/initial/props/pairs)")
    n_letters = 1 << len(props)
    delta_rows = []
    for s in range(n_states):
        row = []
        for a in range(n_letters):
            if (s, a) not in transitions:
                raise DraFormatError(
                    f"non-total transition function: state {s} has no transition "
                    f"on letter {{{' '.join(letter_names(a, props))}}}")
            row.append(transitions[(s, a)])
        delta_rows.append(tuple(row))
    pairs = []
    for i in range(1, n_pairs + 1):
        if i not in fin_sets or i not in inf_sets:
            raise DraFormatError(f"missing F_{i}/I_{i} lines")
        pairs.append((fin_sets[i], inf_sets[i]))
    try:
        return Dra(n_states=n_states, initial=initial, props=props,
                   delta=tuple(delta_rows), pairs=tuple(pairs))
    except ValueError as e:
        raise DraFormatError(str(e)) from None


def format_dra(dra: Dra) -> str:
    lines = [f"states {dra.n_states}", f"initial {dra.initial}",
             f"props {' '.join(dra.props)}", f"pairs {len(dra.pairs)}"]
    for s in range(dra.n_states):
        for a in range(dra.n_letters):
            lines.append(f"{s} {{{' '.join(letter_names(a, dra.props))}}} {dra.delta[s][a]}")
    for i, (fin, acc) in enumerate(dra.pairs, start=1):
        lines.append(f"F_{i}: {' '.join(str(s) for s in sorted(fin))}")
        lines.append(f"I_{i}: {' '.join(str(s) for s in sorted(acc))}")
    return "\n".join(lines) + "\n"


def dra_to_dot(dra: Dra) -> str:
    lines = ["digraph dra {", "  rankdir=LR;", '  init [shape=point, label=""];',
             f"  init -> s{dra.initial};"]
    fin0 = set().union(*(fin for fin, _ in dra.pairs))
    acc0 = set().union(*(acc for _, acc in dra.pairs))
    for s in range(dra.n_states):
        marks = []
        if s in fin0:
            marks.append("F")
        if s in acc0:
            marks.append("I")
        shape = "doublecircle" if s in acc0 else "circle"
        tag = f" [{','.join(marks)}]" if marks else ""
        lines.append(f'  s{s} [shape={shape}, label="s{s}{tag}"];')
    for s in range(dra.n_states):
        by_dst: dict[int, list[int]] = {}
        for a in range(dra.n_letters):
            by_dst.setdefault(dra.delta[s][a], []).append(a)
        for dst, letters in sorted(by_dst.items()):
            label = ", ".join("{%s}" % " ".join(letter_names(a, dra.props)) for a in letters)
            lines.append(f'  s{s} -> s{dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
