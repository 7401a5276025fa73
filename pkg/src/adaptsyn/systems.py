"""Plain and parametric transition systems over interned finite domains.

States, inputs, parameters and propositions are interned to dense integer
ids on construction; successor sets are stored as sorted id tuples and
per-state labels as proposition bitmasks, so downstream set hashing (the
adaptive construction and the game solver) stays cheap.  Constructed
systems are immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

SINK_NAME = "__sink__"


class ObservationMismatchError(ValueError):
    pass


def _intern(names: Sequence[str], what: str) -> dict[str, int]:
    ids = {name: i for i, name in enumerate(names)}
    if len(ids) != len(names):
        raise ValueError(f"duplicate {what} names")
    return ids


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    """Finite non-deterministic transition system with labelled states."""

    states: tuple[str, ...]
    inputs: tuple[str, ...]
    props: tuple[str, ...]
    labels: tuple[int, ...]                       # prop bitmask per state
    succ: tuple[tuple[tuple[int, ...], ...], ...]  # [state][input] -> ids
    sink: int | None = None

    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_id(self, name: str) -> int:
        return self.states.index(name)

    def input_id(self, name: str) -> int:
        return self.inputs.index(name)

    def prop_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for n in names:
            mask |= 1 << self.props.index(n)
        return mask

    def label_names(self, x: int) -> tuple[str, ...]:
        return tuple(p for i, p in enumerate(self.props) if self.labels[x] >> i & 1)

    def successors(self, x: int, u: int) -> tuple[int, ...]:
        return self.succ[x][u]

    def label_mask(self, x: int) -> int:
        return self.labels[x]

    def is_nonblocking(self) -> bool:
        return all(all(row) for row in self.succ)


@dataclass(frozen=True, eq=False)
class Pts:
    """Transition system whose transitions depend on an unknown parameter."""

    states: tuple[str, ...]
    inputs: tuple[str, ...]
    params: tuple[str, ...]
    props: tuple[str, ...]
    labels: tuple[int, ...]
    succ: tuple[tuple[tuple[tuple[int, ...], ...], ...], ...]  # [x][u][theta]
    sink: int | None = None

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_params(self) -> int:
        return len(self.params)

    @property
    def full_param_set(self) -> int:
        return (1 << len(self.params)) - 1

    def state_id(self, name: str) -> int:
        return self.states.index(name)

    def input_id(self, name: str) -> int:
        return self.inputs.index(name)

    def param_id(self, name: str) -> int:
        return self.params.index(name)

    def param_names(self, theta_set: int) -> tuple[str, ...]:
        return tuple(p for i, p in enumerate(self.params) if theta_set >> i & 1)

    def prop_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for n in names:
            mask |= 1 << self.props.index(n)
        return mask

    def label_names(self, x: int) -> tuple[str, ...]:
        return tuple(p for i, p in enumerate(self.props) if self.labels[x] >> i & 1)

    def successors(self, x: int, u: int, theta: int) -> tuple[int, ...]:
        return self.succ[x][u][theta]

    def is_nonblocking(self) -> bool:
        return all(all(all(cell) for cell in row) for row in self.succ)


def make_ts(states: Sequence[str], inputs: Sequence[str], props: Sequence[str],
            labels: Mapping[str, Iterable[str]],
            transitions: Mapping[tuple[str, str], Iterable[str]],
            sink: str | None = None) -> TransitionSystem:
    """Build a transition system from name-keyed dictionaries."""
    sid = _intern(states, "state")
    uid = _intern(inputs, "input")
    pid = _intern(props, "proposition")
    label_row = [0] * len(states)
    for name, on in labels.items():
        label_row[sid[name]] = sum(1 << pid[p] for p in set(on))
    table = [[() for _ in inputs] for _ in states]
    for (x, u), dsts in transitions.items():
        table[sid[x]][uid[u]] = tuple(sorted(sid[d] for d in set(dsts)))
    return TransitionSystem(
        states=tuple(states), inputs=tuple(inputs), props=tuple(props),
        labels=tuple(label_row),
        succ=tuple(tuple(row) for row in table),
        sink=None if sink is None else sid[sink])


def make_pts(states: Sequence[str], inputs: Sequence[str], params: Sequence[str],
             props: Sequence[str], labels: Mapping[str, Iterable[str]],
             transitions: Mapping[tuple[str, str, str], Iterable[str]],
             sink: str | None = None) -> Pts:
    """Build a parametric transition system from name-keyed dictionaries."""
    sid = _intern(states, "state")
    uid = _intern(inputs, "input")
    tid = _intern(params, "parameter")
    pid = _intern(props, "proposition")
    label_row = [0] * len(states)
    for name, on in labels.items():
        label_row[sid[name]] = sum(1 << pid[p] for p in set(on))
    table = [[[() for _ in params] for _ in inputs] for _ in states]
    for (x, u, th), dsts in transitions.items():
        table[sid[x]][uid[u]][tid[th]] = tuple(sorted(sid[d] for d in set(dsts)))
    return Pts(
        states=tuple(states), inputs=tuple(inputs), params=tuple(params),
        props=tuple(props), labels=tuple(label_row),
        succ=tuple(tuple(tuple(cell) for cell in row) for row in table),
        sink=None if sink is None else sid[sink])


# ---------------------------------------------------------------------------
# Embedding of concrete dynamics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DynamicsSpec:
    """Finite discrete-time update map with boolean output predicates.

    ``step`` may return values outside ``states``; those transitions are
    routed to a sink state when the system is embedded.
    """

    states: tuple[Hashable, ...]
    inputs: tuple[Hashable, ...]
    params: tuple[Hashable, ...]
    disturbances: tuple[Hashable, ...]
    step: Callable[[Hashable, Hashable, Hashable, Hashable], Hashable]
    predicates: tuple[tuple[str, Callable[[Hashable], bool]], ...]
    state_name: Callable[[Hashable], str] = field(default=str)
    input_name: Callable[[Hashable], str] = field(default=str)
    param_name: Callable[[Hashable], str] = field(default=str)


def embed(dyn: DynamicsSpec, sink_props: Iterable[str] = ()) -> Pts:
    """Embed dynamics into a PTS: successors of (x, u, theta) are the images
    of the disturbance set; out-of-domain images go to an absorbing sink
    whose label set is ``sink_props``."""
    if not dyn.disturbances:
        raise ValueError("disturbance set must be non-empty")
    if not dyn.params:
        raise ValueError("parameter set must be non-empty")
    state_ix = {x: i for i, x in enumerate(dyn.states)}
    names = [dyn.state_name(x) for x in dyn.states]
    props = tuple(name for name, _ in dyn.predicates)
    labels = [sum(1 << i for i, (_, mu) in enumerate(dyn.predicates) if mu(x))
              for x in dyn.states]

    sink = None
    table: list[list[list[tuple[int, ...]]]] = []
    for x in dyn.states:
        row = []
        for u in dyn.inputs:
            cell = []
            for th in dyn.params:
                dsts = set()
                for d in dyn.disturbances:
                    nxt = dyn.step(x, u, th, d)
                    if nxt in state_ix:
                        dsts.add(state_ix[nxt])
                    else:
                        if sink is None:
                            sink = len(dyn.states)
                        dsts.add(sink)
                cell.append(tuple(sorted(dsts)))
            row.append(cell)
        table.append(row)

    sink_mask = 0
    if sink is not None:
        names.append(SINK_NAME)
        prop_ix = {p: i for i, p in enumerate(props)}
        sink_mask = sum(1 << prop_ix[p] for p in sink_props)
        labels.append(sink_mask)
        self_loop = (sink,)
        table.append([[self_loop for _ in dyn.params] for _ in dyn.inputs])

    return Pts(states=tuple(names),
               inputs=tuple(dyn.input_name(u) for u in dyn.inputs),
               params=tuple(dyn.param_name(t) for t in dyn.params),
               props=props, labels=tuple(labels),
               succ=tuple(tuple(tuple(cell) for cell in row) for row in table),
               sink=sink)


# ---------------------------------------------------------------------------
# Non-blocking completion
# ---------------------------------------------------------------------------

def make_nonblocking(system: TransitionSystem | Pts, sink_props: Iterable[str] = ()):
    """Route every blocking (state, input[, parameter]) to a fresh absorbing
    sink.  Returns (system, sink id); the input is returned unchanged with
    sink id None when it is already non-blocking."""
    if system.is_nonblocking():
        return system, None
    sink = system.n_states
    names = system.states + (SINK_NAME,)
    sink_mask = system.prop_mask(sink_props)
    labels = system.labels + (sink_mask,)
    if isinstance(system, Pts):
        table = []
        for x_row in system.succ:
            table.append([[cell if cell else (sink,) for cell in row] for row in x_row])
        table.append([[(sink,) for _ in system.params] for _ in system.inputs])
        return Pts(states=names, inputs=system.inputs, params=system.params,
                   props=system.props, labels=labels,
                   succ=tuple(tuple(tuple(cell) for cell in row) for row in table),
                   sink=sink), sink
    table2 = [[cell if cell else (sink,) for cell in row] for row in system.succ]
    table2.append([(sink,) for _ in system.inputs])
    return TransitionSystem(states=names, inputs=system.inputs, props=system.props,
                            labels=labels,
                            succ=tuple(tuple(row) for row in table2),
                            sink=sink), sink


# ---------------------------------------------------------------------------
# Quotients and robustification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Named cells; must be pairwise disjoint and cover the state set."""

    cells: tuple[tuple[str, frozenset[str]], ...]


def quotient(ts: TransitionSystem, partition: Partition) -> TransitionSystem:
    """Quotient transition system over an observation-preserving partition:
    a cell edge exists iff some member state realises it."""
    covered: set[int] = set()
    members: list[tuple[str, tuple[int, ...]]] = []
    for cell_name, cell_states in partition.cells:
        ids = tuple(sorted(ts.state_id(s) for s in cell_states))
        if not ids:
            raise ValueError(f"empty cell: {cell_name}")
        if covered & set(ids):
            raise ValueError(f"cell {cell_name} overlaps another cell")
        covered |= set(ids)
        members.append((cell_name, ids))
    if covered != set(range(ts.n_states)):
        raise ValueError("partition does not cover the state set")

    for cell_name, ids in members:
        base = ts.labels[ids[0]]
        for x in ids[1:]:
            if ts.labels[x] != base:
                raise ObservationMismatchError(
                    f"partition not observation preserving: cell {cell_name} mixes "
                    f"{ts.states[ids[0]]} (labels {ts.label_names(ids[0])}) and "
                    f"{ts.states[x]} (labels {ts.label_names(x)})")

    cell_of = {}
    for ci, (_, ids) in enumerate(members):
        for x in ids:
            cell_of[x] = ci
    table = []
    for _, ids in members:
        row = []
        for u in range(len(ts.inputs)):
            dsts = {cell_of[x2] for x in ids for x2 in ts.succ[x][u]}
            row.append(tuple(sorted(dsts)))
        table.append(row)
    return TransitionSystem(
        states=tuple(name for name, _ in members), inputs=ts.inputs, props=ts.props,
        labels=tuple(ts.labels[ids[0]] for _, ids in members),
        succ=tuple(tuple(row) for row in table),
        sink=None if ts.sink is None else cell_of[ts.sink])


def robustify(pts: Pts) -> TransitionSystem:
    """Forget the parameter: successors become the union over all parameters.
    This is the conservative baseline an adaptive strategy is compared to."""
    table = []
    for x_row in pts.succ:
        row = []
        for cell_row in x_row:
            union: set[int] = set()
            for cell in cell_row:
                union |= set(cell)
            row.append(tuple(sorted(union)))
        table.append(row)
    return TransitionSystem(states=pts.states, inputs=pts.inputs, props=pts.props,
                            labels=pts.labels,
                            succ=tuple(tuple(row) for row in table),
                            sink=pts.sink)


def as_pts(ts: TransitionSystem, param_name: str = "any") -> Pts:
    """View a plain transition system as a single-parameter PTS."""
    return Pts(states=ts.states, inputs=ts.inputs, params=(param_name,),
               props=ts.props, labels=ts.labels,
               succ=tuple(tuple((cell,) for cell in row) for row in ts.succ),
               sink=ts.sink)


# ---------------------------------------------------------------------------
# PTS model files
# ---------------------------------------------------------------------------

def pts_to_json(pts: Pts) -> str:
    records = []
    for x in range(pts.n_states):
        for u, _ in enumerate(pts.inputs):
            for th, _ in enumerate(pts.params):
                dsts = pts.succ[x][u][th]
                if dsts:
                    records.append({"x": pts.states[x], "u": pts.inputs[u],
                                    "theta": pts.params[th],
                                    "successors": [pts.states[d] for d in dsts]})
    doc = {
        "states": list(pts.states),
        "inputs": list(pts.inputs),
        "params": list(pts.params),
        "props": list(pts.props),
        "labels": {pts.states[x]: list(pts.label_names(x)) for x in range(pts.n_states)},
        "transitions": records,
    }
    if pts.sink is not None:
        doc["sink"] = pts.states[pts.sink]
    return json.dumps(doc, indent=1)


def pts_from_json(text: str, complete_blocking: bool = True,
                  sink_props: Iterable[str] = ()) -> Pts:
    """Load a PTS model file.  Missing (x, u, theta) records are blocking;
    with ``complete_blocking`` they are routed to a sink on load."""
    doc = json.loads(text)
    transitions = {}
    for rec in doc["transitions"]:
        key = (rec["x"], rec["u"], rec["theta"])
        if key in transitions:
            raise ValueError(f"duplicate transition record for {key}")
        transitions[key] = rec["successors"]
    pts = make_pts(doc["states"], doc["inputs"], doc["params"], doc["props"],
                   doc.get("labels", {}), transitions,
                   sink=doc.get("sink"))
    if complete_blocking and not pts.is_nonblocking():
        pts, _ = make_nonblocking(pts, sink_props)
    return pts


def ts_to_dot(ts: TransitionSystem) -> str:
    lines = ["digraph ts {", "  rankdir=LR;"]
    for x in range(ts.n_states):
        label = ts.states[x]
        props = ",".join(ts.label_names(x))
        if props:
            label += f"\\n{{{props}}}"
        lines.append(f'  n{x} [shape=box, label="{label}"];')
    for x in range(ts.n_states):
        for u, uname in enumerate(ts.inputs):
            for d in ts.succ[x][u]:
                lines.append(f'  n{x} -> n{d} [label="{uname}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
