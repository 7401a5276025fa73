"""Adaptive transition systems: dynamics coupled with the set-valued estimator.

An ATS node is a (state, parameter-set) pair.  Applying input u at (x, v)
can land on any x' reachable under some still-possible parameter, and the
parameter set shrinks to exactly those members that allow the observed
move.  The construction below is a FIFO worklist closure over the reachable
nodes, which keeps node numbering deterministic for stable exports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .systems import Pts


@dataclass(frozen=True, eq=False)
class Ats:
    pts: Pts
    nodes: tuple[tuple[int, int], ...]            # (state id, parameter bitmask)
    index: dict
    succ: tuple[tuple[tuple[int, ...], ...], ...]  # [node][input] -> node ids
    seeds: tuple[int, ...]

    @property
    def n_states(self) -> int:
        return len(self.nodes)

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.pts.inputs

    @property
    def props(self) -> tuple[str, ...]:
        return self.pts.props

    def label_mask(self, node: int) -> int:
        return self.pts.labels[self.nodes[node][0]]

    def label_names(self, node: int) -> tuple[str, ...]:
        return self.pts.label_names(self.nodes[node][0])

    def successors(self, node: int, u: int) -> tuple[int, ...]:
        return self.succ[node][u]

    def node_name(self, node: int) -> str:
        x, theta_set = self.nodes[node]
        return f"{self.pts.states[x]}|{{{','.join(self.pts.param_names(theta_set))}}}"


def _reach_table(pts: Pts) -> list[list[tuple[tuple[int, int], ...]]]:
    """For each (x, u): successor states paired with the mask of parameters
    that can produce them."""
    table = []
    for x in range(pts.n_states):
        row = []
        for u in range(len(pts.inputs)):
            masks: dict[int, int] = {}
            for theta in range(pts.n_params):
                bit = 1 << theta
                for x2 in pts.succ[x][u][theta]:
                    masks[x2] = masks.get(x2, 0) | bit
            row.append(tuple(sorted(masks.items())))
        table.append(row)
    return table


def ats_successors(pts: Pts, node: tuple[int, int], u: int) -> list[tuple[int, int]]:
    """Successor (state, parameter-set) pairs of one node under one input."""
    x, theta_set = node
    out = []
    for theta in range(pts.n_params):
        if not theta_set >> theta & 1:
            continue
        for x2 in pts.succ[x][u][theta]:
            pair = (x2, _step_mask(pts, theta_set, x, u, x2))
            if pair not in out:
                out.append(pair)
    out.sort()
    return out


def _step_mask(pts: Pts, theta_set: int, x: int, u: int, x2: int) -> int:
    mask = 0
    for theta in range(pts.n_params):
        if theta_set >> theta & 1 and x2 in pts.succ[x][u][theta]:
            mask |= 1 << theta
    return mask


def default_seeds(pts: Pts) -> list[tuple[int, int]]:
    """Initial nodes: every state paired with the full parameter set, plus
    every state paired with each singleton (the already-identified slices)."""
    full = pts.full_param_set
    seeds = [(x, full) for x in range(pts.n_states)]
    if pts.n_params > 1:
        seeds += [(x, 1 << t) for x in range(pts.n_states) for t in range(pts.n_params)]
    return seeds


def build_ats(pts: Pts, seeds: Sequence[tuple[int, int]] | None = None) -> Ats:
    """Worklist closure of the reachable (state, parameter-set) nodes.

    Requires a non-blocking PTS.  Termination is guaranteed because there
    are at most |X| * (2^|Theta| - 1) distinct nodes.
    """
    if not pts.is_nonblocking():
        raise ValueError("PTS must be non-blocking (complete it with a sink first)")
    reach = _reach_table(pts)
    seed_list = list(seeds) if seeds is not None else default_seeds(pts)

    index: dict[tuple[int, int], int] = {}
    nodes: list[tuple[int, int]] = []
    for node in seed_list:
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
    succ_rows: list[tuple[tuple[int, ...], ...]] = []

    head = 0
    while head < len(nodes):
        x, theta_set = nodes[head]
        row = []
        for u in range(len(pts.inputs)):
            dsts = []
            for x2, mask in reach[x][u]:
                v2 = mask & theta_set
                if not v2:
                    continue
                pair = (x2, v2)
                nid = index.get(pair)
                if nid is None:
                    nid = len(nodes)
                    index[pair] = nid
                    nodes.append(pair)
                dsts.append(nid)
            row.append(tuple(sorted(dsts)))
        succ_rows.append(tuple(row))
        head += 1

    return Ats(pts=pts, nodes=tuple(nodes), index=index,
               succ=tuple(succ_rows),
               seeds=tuple(index[s] for s in seed_list))


def ats_to_dot(ats: Ats) -> str:
    lines = ["digraph ats {", "  rankdir=LR;"]
    for n in range(ats.n_states):
        props = ",".join(ats.label_names(n))
        label = ats.node_name(n) + (f"\\n{{{props}}}" if props else "")
        lines.append(f'  n{n} [shape=box, label="{label}"];')
    for n in range(ats.n_states):
        for u, uname in enumerate(ats.inputs):
            for d in ats.succ[n][u]:
                lines.append(f'  n{n} -> n{d} [label="{uname}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def ats_to_json(ats: Ats) -> str:
    pts = ats.pts
    records = []
    for n in range(ats.n_states):
        for u, uname in enumerate(ats.inputs):
            records.append({
                "x": ats.node_name(n), "u": uname,
                "successors": [ats.node_name(d) for d in ats.succ[n][u]],
            })
    doc = {
        "states": [ats.node_name(n) for n in range(ats.n_states)],
        "inputs": list(ats.inputs),
        "props": list(pts.props),
        "labels": {ats.node_name(n): list(ats.label_names(n)) for n in range(ats.n_states)},
        "transitions": records,
    }
    return json.dumps(doc, indent=1)
