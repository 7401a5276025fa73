"""Closed-loop execution of synthesized strategies against a hidden parameter.

The simulator tracks the concrete state, its abstraction cell, the
estimator set, and the specification automaton state; at each step it
queries the memoryless strategy, applies the concrete dynamics under the
hidden ground-truth parameter and a disturbance, and refines the estimate.
Leaving the winning region is impossible for a correct toolchain and is
surfaced as a hard failure, never silently tolerated.

Scalar simulations run in exact rational arithmetic: disturbances are
drawn from a fine uniform grid of the disturbance interval so cell
membership is never subject to rounding.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .abstraction import (AbstractionConfig, Box, Interval,
                          ScalarParametricAffine, box_index_of, cell_index_of)
from .adaptive import Ats
from .estimation import estimate_step
from .logic import (Dra, Formula, eval_prop, formula_str, letter_mask,
                    split_obligations)
from .synthesis import GameSolution, ProductAutomaton
from .systems import Pts

UNIFORM_GRID = 10 ** 6


class WinningRegionExitError(RuntimeError):
    """The closed loop left the winning region: an implementation bug."""


@dataclass(frozen=True)
class TraceStep:
    k: int
    x: str
    cell: str
    theta_set: tuple[str, ...]
    dra_state: int
    u: str
    d: str
    labels: tuple[str, ...]


@dataclass
class Trace:
    steps: list[TraceStep]
    props: tuple[str, ...]

    def label_masks(self) -> list[int]:
        return [letter_mask(s.labels, self.props) for s in self.steps]


def write_trace_csv(trace: Trace, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "x", "cell", "theta_set", "dra_state", "u", "d", "labels"])
        for s in trace.steps:
            w.writerow([s.k, s.x, s.cell, " ".join(s.theta_set), s.dra_state,
                        s.u, s.d, " ".join(s.labels)])


class UniformDisturbance:
    """Seeded uniform sampler on a rational grid of the interval."""

    def __init__(self, domain: Interval, seed: int, grid: int = UNIFORM_GRID):
        self._domain = domain
        self._rng = random.Random(seed)
        self._grid = grid

    def __call__(self, _candidates_score=None) -> Fraction:
        t = Fraction(self._rng.randint(0, self._grid), self._grid)
        return self._domain.lo + (self._domain.hi - self._domain.lo) * t


class AdversarialDisturbance:
    """Picks the candidate disturbance whose successor is closest to the
    losing region (ties resolved toward the smallest value)."""

    def __init__(self, domain: Interval, n_candidates: int = 21):
        if n_candidates < 2:
            raise ValueError("need at least the two endpoints")
        width = (domain.hi - domain.lo) / (n_candidates - 1)
        self.candidates = [domain.lo + k * width for k in range(n_candidates)]

    def __call__(self, score) -> Fraction:
        return min(self.candidates, key=lambda d: (score(d), d))


def losing_distance(product: ProductAutomaton, sol: GameSolution) -> dict[int, int]:
    """Graph distance from each product node to the losing set, ignoring who
    controls what (an adversary heuristic, not a game-theoretic quantity)."""
    preds: dict[int, list[int]] = {}
    for n in range(product.n_nodes):
        for u in range(product.n_inputs):
            for m in product.succ[n][u]:
                preds.setdefault(m, []).append(n)
    dist = {n: 0 for n in range(product.n_nodes) if n not in sol.winning}
    frontier = list(dist)
    while frontier:
        nxt = []
        for m in frontier:
            for n in preds.get(m, ()):
                if n not in dist:
                    dist[n] = dist[m] + 1
                    nxt.append(n)
        frontier = nxt
    return dist


# ---------------------------------------------------------------------------
# Scalar closed loop
# ---------------------------------------------------------------------------

def _dra_letter_map(props: Sequence[str], dra: Dra):
    positions = [dra.props.index(p) for p in props]

    def remap(sys_mask: int) -> int:
        letter = 0
        for i, pos in enumerate(positions):
            if sys_mask >> i & 1:
                letter |= 1 << pos
        return letter

    return remap


def simulate_scalar(sys: ScalarParametricAffine, cfg: AbstractionConfig,
                    qpts: Pts, ats: Ats, product: ProductAutomaton,
                    sol: GameSolution, theta_star: Sequence[Fraction],
                    x0: Fraction, horizon: int, seed: int = 0,
                    adversarial: bool = False) -> Trace:
    """Run the quotient-level strategy on the concrete scalar system."""
    x_cells = cfg.state_cells()
    theta_cells = cfg.parameter_cells()
    u_values = cfg.input_points()
    dra = product.dra
    remap = _dra_letter_map(qpts.props, dra)
    star_cell = box_index_of(theta_star, theta_cells)
    if star_cell is None:
        raise ValueError("ground-truth parameter lies outside the parameter domain")

    if adversarial:
        dist = losing_distance(product, sol)
        chooser = AdversarialDisturbance(cfg.d_domain)
    else:
        chooser = UniformDisturbance(cfg.d_domain, seed)

    def locate(x: Fraction) -> int:
        cell = cell_index_of(x, x_cells)
        if cell is None:
            raise WinningRegionExitError(f"state {x} left the domain {cfg.x_domain}")
        return cell

    steps: list[TraceStep] = []
    x = x0
    v = qpts.full_param_set
    s = dra.initial
    for k in range(horizon):
        cell = locate(x)
        node = ats.index.get((cell, v))
        pid = None if node is None else product.index.get((node, s))
        if pid is None or pid not in sol.winning:
            raise WinningRegionExitError(
                f"step {k}: ({qpts.states[cell]}, {qpts.param_names(v)}, s{s}) "
                f"is outside the winning region")
        u_id = sol.strategy[pid]
        s_next = dra.step(s, remap(qpts.labels[cell]))

        if adversarial:
            def score(d: Fraction) -> int:
                x2 = sys.step(x, u_values[u_id], theta_star, d)
                cell2 = cell_index_of(x2, x_cells)
                if cell2 is None:
                    return -1
                v2 = estimate_step(qpts, v, cell, u_id, cell2)
                pid2 = product.index.get((ats.index[(cell2, v2)], s_next))
                return dist.get(pid2, 10 ** 9)
            d = chooser(score)
        else:
            d = chooser()

        x2 = sys.step(x, u_values[u_id], theta_star, d)
        cell2 = locate(x2)
        steps.append(TraceStep(
            k=k, x=repr(float(x)), cell=qpts.states[cell],
            theta_set=qpts.param_names(v), dra_state=s,
            u=qpts.inputs[u_id], d=repr(float(d)),
            labels=qpts.label_names(cell)))
        v = estimate_step(qpts, v, cell, u_id, cell2)
        s = s_next
        x = x2
    return Trace(steps=steps, props=qpts.props)


# ---------------------------------------------------------------------------
# Finite-system closed loop
# ---------------------------------------------------------------------------

def simulate_pts(pts: Pts, ats: Ats, product: ProductAutomaton,
                 sol: GameSolution, theta_star: int, x0: int, horizon: int,
                 seed: int = 0, adversarial: bool = False) -> Trace:
    """Run the strategy on a finite PTS whose ground truth is the
    theta_star slice; residual non-determinism is resolved by a seeded
    choice (or adversarially via the losing-distance heuristic)."""
    dra = product.dra
    remap = _dra_letter_map(pts.props, dra)
    rng = random.Random(seed)
    dist = losing_distance(product, sol) if adversarial else None

    steps: list[TraceStep] = []
    x = x0
    v = pts.full_param_set
    s = dra.initial
    for k in range(horizon):
        node = ats.index.get((x, v))
        pid = None if node is None else product.index.get((node, s))
        if pid is None or pid not in sol.winning:
            raise WinningRegionExitError(
                f"step {k}: ({pts.states[x]}, {pts.param_names(v)}, s{s}) "
                f"is outside the winning region")
        u = sol.strategy[pid]
        s_next = dra.step(s, remap(pts.labels[x]))
        options = pts.succ[x][u][theta_star]
        if len(options) == 1:
            x2 = options[0]
        elif adversarial:
            def score(x2: int) -> int:
                v2 = estimate_step(pts, v, x, u, x2)
                pid2 = product.index.get((ats.index[(x2, v2)], s_next))
                return dist.get(pid2, 10 ** 9)
            x2 = min(options, key=lambda m: (score(m), m))
        else:
            x2 = options[rng.randrange(len(options))]
        steps.append(TraceStep(
            k=k, x=pts.states[x], cell=pts.states[x],
            theta_set=pts.param_names(v), dra_state=s,
            u=pts.inputs[u], d="0", labels=pts.label_names(x)))
        v = estimate_step(pts, v, x, u, x2)
        s = s_next
        x = x2
    return Trace(steps=steps, props=pts.props)


# ---------------------------------------------------------------------------
# Finite-horizon monitoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceStat:
    visits: int
    max_gap: int | None    # max distance between consecutive visits


@dataclass(frozen=True)
class TraceReport:
    horizon: int
    safety_violations: tuple[int, ...]
    recurrence: dict
    oneshot_first: dict

    @property
    def safe(self) -> bool:
        return not self.safety_violations


def check_trace(trace: Trace, formula: Formula) -> TraceReport:
    """Monitor invariants, recurrence gaps, and one-shot goals on a finite
    trace.  Recurrence can only be bounded, not proved, at a finite
    horizon: the caller compares max_gap against its product-size bound."""
    invariants, recurrent, oneshot = split_obligations(formula)
    masks = trace.label_masks()
    props = trace.props

    violations = tuple(k for k, m in enumerate(masks)
                       if any(not eval_prop(g, m, props) for g in invariants))

    recurrence = {}
    for body in recurrent:
        visits = [k for k, m in enumerate(masks) if eval_prop(body, m, props)]
        gaps = [b - a for a, b in zip(visits, visits[1:])]
        recurrence[formula_str(body)] = RecurrenceStat(
            visits=len(visits), max_gap=max(gaps) if gaps else None)

    oneshot_first = {}
    for body in oneshot:
        first = next((k for k, m in enumerate(masks) if eval_prop(body, m, props)), None)
        oneshot_first[formula_str(body)] = first

    return TraceReport(horizon=len(masks), safety_violations=violations,
                       recurrence=recurrence, oneshot_first=oneshot_first)
