"""Product automata, Rabin games, and memoryless strategy extraction.

The game is turn-based: at every node the controller picks an input, then
the adversary resolves the transition non-determinism.  Winning means the
run satisfies the Rabin condition of the specification automaton against
every adversarial resolution.

The solver is a recursive pair-peeling fixpoint over controllable
attractors.  For the committed pair the play must avoid its fin set from
now on; inside that restriction the play either revisits the pair's inf
set forever (a Buechi sub-objective) or wins via one of the remaining
pairs, and an outer least fixpoint allows finitely many restarts through
already-won territory.  With a single pair this degenerates to the classic
three-level nested fixpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .adaptive import Ats
from .logic import Dra, letter_names
from .systems import TransitionSystem


class AlphabetMismatchError(ValueError):
    pass


class StrategyDomainError(KeyError):
    """Raised when the strategy is queried outside the winning region."""


# ---------------------------------------------------------------------------
# Product automaton
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProductAutomaton:
    """Reachable part of (system x specification automaton).

    A play from system state x starts at (x, s0); each step first advances
    the automaton on the observation of the current system state, then the
    system moves.  Pairs are the cylinder lifts of the automaton pairs.
    """

    sys: TransitionSystem | Ats
    dra: Dra
    nodes: tuple[tuple[int, int], ...]
    index: dict
    initial: tuple[int, ...]
    n_inputs: int
    succ: tuple[tuple[tuple[int, ...], ...], ...]
    pairs: tuple[tuple[frozenset[int], frozenset[int]], ...]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_name(self, pid: int) -> str:
        x, s = self.nodes[pid]
        sys_name = self.sys.node_name(x) if isinstance(self.sys, Ats) else self.sys.states[x]
        return f"({sys_name}, s{s})"


def build_product(system: TransitionSystem | Ats, dra: Dra) -> ProductAutomaton:
    """Materialise the product reachable from {(x, s0) | x a system state}."""
    positions = []
    for i, p in enumerate(system.props):
        if p not in dra.props:
            raise AlphabetMismatchError(
                f"system proposition {p!r} is not in the automaton alphabet {dra.props}")
        positions.append(dra.props.index(p))

    letter_cache: dict[int, int] = {}

    def dra_letter(sys_mask: int) -> int:
        letter = letter_cache.get(sys_mask)
        if letter is None:
            letter = 0
            for i, pos in enumerate(positions):
                if sys_mask >> i & 1:
                    letter |= 1 << pos
            letter_cache[sys_mask] = letter
        return letter

    n_inputs = len(system.inputs)
    index: dict[tuple[int, int], int] = {}
    nodes: list[tuple[int, int]] = []
    initial = []
    for x in range(system.n_states):
        node = (x, dra.initial)
        index[node] = len(nodes)
        initial.append(len(nodes))
        nodes.append(node)

    succ_rows: list[tuple[tuple[int, ...], ...]] = []
    head = 0
    while head < len(nodes):
        x, s = nodes[head]
        s2 = dra.step(s, dra_letter(system.label_mask(x)))
        row = []
        for u in range(n_inputs):
            dsts = []
            for x2 in system.successors(x, u):
                node = (x2, s2)
                pid = index.get(node)
                if pid is None:
                    pid = len(nodes)
                    index[node] = pid
                    nodes.append(node)
                dsts.append(pid)
            row.append(tuple(sorted(dsts)))
        succ_rows.append(tuple(row))
        head += 1

    pairs = tuple(
        (frozenset(pid for pid, (x, s) in enumerate(nodes) if s in fin),
         frozenset(pid for pid, (x, s) in enumerate(nodes) if s in acc))
        for fin, acc in dra.pairs)
    return ProductAutomaton(sys=system, dra=dra, nodes=tuple(nodes), index=index,
                            initial=tuple(initial), n_inputs=n_inputs,
                            succ=tuple(succ_rows), pairs=pairs)


# ---------------------------------------------------------------------------
# Rabin game solving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GameSolution:
    winning: frozenset[int]
    strategy: Mapping[int, int]


def _build_preds(succ, n_inputs):
    preds: list[list[tuple[int, int]]] = [[] for _ in succ]
    for n, row in enumerate(succ):
        for u in range(n_inputs):
            for m in row[u]:
                preds[m].append((n, u))
    return preds


def _attractor(succ, preds, alive, allowed, target):
    """Controllable attractor of ``target`` within ``alive``.

    Counter-based backward propagation: a node joins as soon as some
    allowed input has every alive successor already inside.  Successors
    outside ``alive`` are escapes to territory the caller already won and
    count as inside.  Returns the attractor and an input per attracted
    node (target nodes keep their previously assigned inputs).
    """
    attr = set(target)
    strat: dict[int, int] = {}
    cnt: dict[tuple[int, int], int] = {}
    stack: list[int] = []
    for n in sorted(alive):
        if n in attr:
            continue
        for u in allowed.get(n, ()):
            c = 0
            for m in succ[n][u]:
                if m in alive and m not in target:
                    c += 1
            if c == 0:
                if n not in attr:
                    attr.add(n)
                    strat[n] = u
                    stack.append(n)
            else:
                cnt[(n, u)] = c
    while stack:
        m = stack.pop()
        for n, u in preds[m]:
            if n in attr or n not in alive:
                continue
            c = cnt.get((n, u))
            if c is None:
                continue
            c -= 1
            cnt[(n, u)] = c
            if c == 0:
                attr.add(n)
                strat[n] = u
                stack.append(n)
    return attr, strat


def _buchi_win(succ, preds, alive, allowed, targets):
    """Greatest set from which the controller can visit ``targets``
    infinitely often while staying inside ``alive`` (escaping counts as
    winning).  Shrinks ``alive`` until the re-entry attractor is stable."""
    region = set(alive)
    while True:
        reentry: dict[int, int] = {}
        for n in sorted(targets):
            if n not in region:
                continue
            for u in allowed.get(n, ()):
                if all(m in region for m in succ[n][u] if m in alive):
                    reentry[n] = u
                    break
        attr, strat = _attractor(succ, preds, alive, allowed, set(reentry))
        if attr == region:
            strat.update(reentry)
            return attr, strat
        region = attr


def _win_mixed(succ, preds, alive, allowed, pairs, buchi):
    """Win [some Rabin pair holds] or [some Buechi target recurs] in the
    subgame on ``alive``.  ``pairs`` lists (fin, inf) pairs whose fin sets
    intersect ``alive``; pairs with dead fin sets are folded into
    ``buchi`` by the caller."""
    live_pairs = []
    buchi = set(buchi)
    for fin, inf in pairs:
        fin, inf = fin & alive, inf & alive
        if fin:
            live_pairs.append((fin, inf))
        else:
            buchi |= inf
    if not live_pairs:
        return _buchi_win(succ, preds, alive, allowed, buchi)

    won: set[int] = set()
    strat: dict[int, int] = {}

    def absorb(new_nodes, new_strat):
        for n, u in new_strat.items():
            if n not in strat:
                strat[n] = u
        won.update(new_nodes)

    while True:
        grew = False
        for j, (fin, inf) in enumerate(live_pairs):
            escape, e_strat = _attractor(succ, preds, alive, allowed, won)
            absorb(escape, e_strat)
            sub_alive = alive - won - fin
            sub_allowed = {}
            for n in sorted(sub_alive):
                us = [u for u in allowed.get(n, ())
                      if all(m in sub_alive or m in won or m not in alive
                             for m in succ[n][u])]
                if us:
                    sub_allowed[n] = us
            sub_pairs = [p for k, p in enumerate(live_pairs) if k != j]
            sub_buchi = (buchi | inf) & sub_alive
            sub_won, sub_strat = _win_mixed(succ, preds, sub_alive, sub_allowed,
                                            sub_pairs, sub_buchi)
            if sub_won - won:
                absorb(sub_won, sub_strat)
                grew = True
        if not grew:
            break
    closure, c_strat = _attractor(succ, preds, alive, allowed, won)
    absorb(closure, c_strat)
    return won, strat


def solve_game(succ: Sequence[Sequence[Sequence[int]]], n_inputs: int,
               pairs: Sequence[tuple[frozenset[int], frozenset[int]]]) -> GameSolution:
    """Solve the Rabin game on an explicit graph; see the module docstring."""
    for n, row in enumerate(succ):
        for u in range(n_inputs):
            if not row[u]:
                raise ValueError(f"game is blocking at node {n}, input {u}")
    preds = _build_preds(succ, n_inputs)
    alive = set(range(len(succ)))
    allowed = {n: tuple(range(n_inputs)) for n in alive}
    winning, strategy = _win_mixed(succ, preds, alive, allowed, list(pairs), set())
    missing = winning - set(strategy)
    if missing:
        raise AssertionError(f"winning nodes without strategy: {sorted(missing)[:5]}")
    return GameSolution(winning=frozenset(winning),
                        strategy={n: strategy[n] for n in winning})


def solve_rabin(product: ProductAutomaton) -> GameSolution:
    return solve_game(product.succ, product.n_inputs, product.pairs)


# ---------------------------------------------------------------------------
# Verification of solutions (used by tests and the simulator)
# ---------------------------------------------------------------------------

def _sccs(graph_succ: Mapping[int, Iterable[int]]) -> list[list[int]]:
    """Tarjan, iterative."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in graph_succ:
        if root in index:
            continue
        work = [(root, iter(graph_succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for m in it:
                if m not in graph_succ:
                    continue
                if m not in index:
                    index[m] = low[m] = counter
                    counter += 1
                    stack.append(m)
                    on_stack.add(m)
                    work.append((m, iter(graph_succ.get(m, ()))))
                    advanced = True
                    break
                if m in on_stack:
                    low[node] = min(low[node], index[m])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    m = stack.pop()
                    on_stack.discard(m)
                    comp.append(m)
                    if m == node:
                        break
                out.append(comp)
    return out


def _has_cycle(graph_succ: Mapping[int, Iterable[int]]) -> set[int]:
    """Nodes lying on some cycle (SCCs of size > 1 or with a self-loop)."""
    bad: set[int] = set()
    for comp in _sccs(graph_succ):
        if len(comp) > 1:
            bad.update(comp)
        else:
            n = comp[0]
            if n in graph_succ.get(n, ()):
                bad.add(n)
    return bad


def verify_solution(succ, n_inputs, pairs, sol: GameSolution) -> None:
    """Check closure and, for single-pair games, acceptance of every play
    consistent with the strategy.  Raises AssertionError on failure."""
    induced: dict[int, tuple[int, ...]] = {}
    for n in sol.winning:
        u = sol.strategy[n]
        dsts = succ[n][u]
        for m in dsts:
            if m not in sol.winning:
                raise AssertionError(
                    f"strategy leaves the winning region: {n} -> {m}")
        induced[n] = tuple(dsts)
    if len(pairs) != 1:
        return
    fin, inf = pairs[0]
    # a play is adversary-winnable iff it can reach a cycle through fin
    # or a cycle avoiding inf
    cyc_nodes = _has_cycle(induced)
    bad = cyc_nodes & set(fin)
    no_inf = {n: tuple(m for m in ms if m not in inf)
              for n, ms in induced.items() if n not in inf}
    bad |= _has_cycle(no_inf)
    if not bad:
        return
    # no winning node may reach a bad node
    reach_bad = set(bad)
    changed = True
    while changed:
        changed = False
        for n, ms in induced.items():
            if n not in reach_bad and any(m in reach_bad for m in ms):
                reach_bad.add(n)
                changed = True
    offenders = reach_bad & sol.winning
    if offenders:
        raise AssertionError(
            f"strategy admits a losing play from {sorted(offenders)[:5]}")


# ---------------------------------------------------------------------------
# Projection and execution
# ---------------------------------------------------------------------------

def project_initial(sol: GameSolution, product: ProductAutomaton) -> tuple[int, ...]:
    """States of the underlying PTS from which the adaptive game is won when
    nothing is known yet: x0 such that ((x0, full set), s0) is winning."""
    ats = product.sys
    if not isinstance(ats, Ats):
        raise TypeError("projection needs a product built over an adaptive system")
    full = ats.pts.full_param_set
    out = []
    for x in range(ats.pts.n_states):
        node = ats.index.get((x, full))
        if node is None:
            continue
        pid = product.index.get((node, product.dra.initial))
        if pid is not None and pid in sol.winning:
            out.append(x)
    return tuple(out)


def winning_source_states(sol: GameSolution, product: ProductAutomaton) -> tuple[int, ...]:
    """System states x with (x, s0) winning, for plain transition systems."""
    out = []
    for x in range(product.sys.n_states):
        pid = product.index.get((x, product.dra.initial))
        if pid is not None and pid in sol.winning:
            out.append(x)
    return tuple(out)


def execute_strategy(sol: GameSolution, product: ProductAutomaton,
                     x: int, theta_set: int, s: int) -> int:
    """Input prescribed at PTS state x with estimate theta_set and automaton
    state s.  Raises StrategyDomainError outside the winning region."""
    ats = product.sys
    if not isinstance(ats, Ats):
        raise TypeError("execution needs a product built over an adaptive system")
    node = ats.index.get((x, theta_set))
    pid = None if node is None else product.index.get((node, s))
    if pid is None or pid not in sol.winning:
        raise StrategyDomainError(
            f"({ats.pts.states[x]}, {ats.pts.param_names(theta_set)}, s{s}) "
            f"is not in the winning region")
    return sol.strategy[pid]


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def strategy_records(sol: GameSolution, product: ProductAutomaton) -> list[dict]:
    ats = product.sys
    if not isinstance(ats, Ats):
        raise TypeError("strategy export needs a product over an adaptive system")
    records = []
    for pid in sorted(sol.winning):
        node, s = product.nodes[pid]
        x, theta_set = ats.nodes[node]
        records.append({
            "x": ats.pts.states[x],
            "theta_set": list(ats.pts.param_names(theta_set)),
            "dra_state": s,
            "input": ats.pts.inputs[sol.strategy[pid]],
        })
    return records


def strategy_to_json(sol: GameSolution, product: ProductAutomaton) -> str:
    return json.dumps(strategy_records(sol, product), indent=1)


def strategy_to_dot(sol: GameSolution, product: ProductAutomaton) -> str:
    lines = ["digraph strategy {", "  rankdir=LR;"]
    for pid in sorted(sol.winning):
        lines.append(f'  n{pid} [shape=box, label="{product.node_name(pid)}"];')
    for pid in sorted(sol.winning):
        u = sol.strategy[pid]
        uname = product.sys.inputs[u]
        for m in product.succ[pid][u]:
            lines.append(f'  n{pid} -> n{m} [label="{uname}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
