"""Finite quotient PTS construction for scalar parametric affine dynamics.

All cell bounds and post computations use exact rational arithmetic
(``fractions.Fraction``); numeric configuration values are given as
decimal strings.  That makes transition tables bit-reproducible and lets
tests compare the interval post against a corner-evaluation oracle with
exact equality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .systems import Pts


class PartitionError(ValueError):
    """A cell straddles an observation predicate boundary."""


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __mul__(self, other: "Interval") -> "Interval":
        corners = (self.lo * other.lo, self.lo * other.hi,
                   self.hi * other.lo, self.hi * other.hi)
        return Interval(min(corners), max(corners))

    def shift(self, c: Fraction) -> "Interval":
        return Interval(self.lo + c, self.hi + c)

    def scale(self, c: Fraction) -> "Interval":
        a, b = self.lo * c, self.hi * c
        return Interval(min(a, b), max(a, b))

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def intersects(self, other: "Interval") -> bool:
        # closed-set semantics: touching at a shared endpoint counts
        return self.lo <= other.hi and other.lo <= self.hi

    def within(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


Box = tuple[Interval, ...]


def frac(text: str | int | Fraction) -> Fraction:
    return Fraction(str(text))


def grid_partition(domain: Interval, n: int) -> list[Interval]:
    """n equal-width closed cells; consecutive cells share endpoints."""
    if n < 1:
        raise ValueError("cell count must be at least 1")
    width = (domain.hi - domain.lo) / n
    return [Interval(domain.lo + k * width, domain.lo + (k + 1) * width)
            for k in range(n)]


def box_grid(domains: Sequence[Interval], counts: Sequence[int]) -> list[Box]:
    """Cartesian grid of boxes, last dimension varying fastest."""
    if len(domains) != len(counts):
        raise ValueError("one cell count per dimension required")
    cells: list[Box] = [()]
    for domain, n in zip(domains, counts):
        parts = grid_partition(domain, n)
        cells = [box + (iv,) for box in cells for iv in parts]
    return cells


def cell_index_of(x: Fraction, cells: Sequence[Interval]) -> int | None:
    """Lowest-index cell containing x (shared endpoints resolve downward)."""
    for i, cell in enumerate(cells):
        if cell.contains(x):
            return i
    return None


def box_index_of(point: Sequence[Fraction], boxes: Sequence[Box]) -> int | None:
    for i, box in enumerate(boxes):
        if all(iv.contains(v) for iv, v in zip(box, point)):
            return i
    return None


# ---------------------------------------------------------------------------
# Scalar parametric affine dynamics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarParametricAffine:
    """x+ = (1 + a) x + b u + c + d with unknown constant (a, b, c) and
    per-step disturbance d."""

    x_domain: Interval
    u_domain: Interval
    theta_domain: Box        # (a, b, c) ranges
    d_domain: Interval

    def __post_init__(self):
        if len(self.theta_domain) != 3:
            raise ValueError("theta domain must have three dimensions")

    def step(self, x: Fraction, u: Fraction, theta: Sequence[Fraction],
             d: Fraction) -> Fraction:
        a, b, c = theta
        return (1 + a) * x + b * u + c + d


def post_box(sys: ScalarParametricAffine, qx: Interval, qtheta: Box,
             u: Fraction) -> Interval:
    """Exact interval hull of the one-step image of qx under the parameter
    box and input u.  Each variable occurs once in the affine form, so the
    interval product attains its extrema at corners and the hull is tight;
    for richer dynamics this weakens to an over-approximation."""
    a, b, c = qtheta
    growth = Interval(1 + a.lo, 1 + a.hi) * qx
    return growth + b.scale(u) + c + sys.d_domain


# ---------------------------------------------------------------------------
# Observation predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdPredicate:
    """x <= threshold (op 'le') or x >= threshold (op 'ge')."""

    name: str
    op: str
    threshold: Fraction

    def __post_init__(self):
        if self.op not in ("le", "ge"):
            raise ValueError(f"unknown predicate op: {self.op}")

    def holds(self, x: Fraction) -> bool:
        return x <= self.threshold if self.op == "le" else x >= self.threshold

    def on_cell(self, cell: Interval) -> bool:
        """Truth value on a whole cell.  Cells sharing only the threshold
        point with the satisfying side are labelled by their interior;
        genuine straddles are rejected."""
        if self.op == "le":
            if cell.hi <= self.threshold:
                return True
            if cell.lo >= self.threshold:
                return False
        else:
            if cell.lo >= self.threshold:
                return True
            if cell.hi <= self.threshold:
                return False
        raise PartitionError(
            f"cell {cell} straddles predicate {self.name} "
            f"(x {self.op} {self.threshold})")


# ---------------------------------------------------------------------------
# Quotient PTS construction
# ---------------------------------------------------------------------------

def build_quotient_pts(sys: ScalarParametricAffine,
                       x_cells: Sequence[Interval],
                       theta_cells: Sequence[Box],
                       u_points: Sequence[Fraction],
                       predicates: Sequence[ThresholdPredicate],
                       sink_props: Iterable[str] = (),
                       out_name: str = "out") -> Pts:
    """Finite PTS over state cells plus an absorbing out-of-domain sink.

    A cell is a successor of (q_x, u, q_theta) iff the interval post meets
    it (closed-set semantics); the sink is added whenever the post leaves
    the state domain.  Cell labels must be constant per cell, otherwise a
    ``PartitionError`` names the offending cell.
    """
    state_names = [f"x{i}" for i in range(len(x_cells))] + [out_name]
    param_names = [f"th{j}" for j in range(len(theta_cells))]
    input_names = [_decimal_name(u) for u in u_points]
    props = tuple(p.name for p in predicates)

    labels = []
    for cell in x_cells:
        mask = 0
        for k, pred in enumerate(predicates):
            if pred.on_cell(cell):
                mask |= 1 << k
        labels.append(mask)
    sink = len(x_cells)
    sink_mask = 0
    for p in sink_props:
        sink_mask |= 1 << props.index(p)
    labels.append(sink_mask)

    table = []
    for qx in x_cells:
        row = []
        for u in u_points:
            cell_row = []
            for qth in theta_cells:
                post = post_box(sys, qx, qth, u)
                dsts = [i for i, c in enumerate(x_cells) if post.intersects(c)]
                if not post.within(sys.x_domain):
                    dsts.append(sink)
                cell_row.append(tuple(dsts))
            row.append(cell_row)
        table.append(row)
    table.append([[(sink,) for _ in theta_cells] for _ in u_points])

    return Pts(states=tuple(state_names), inputs=tuple(input_names),
               params=tuple(param_names), props=props, labels=tuple(labels),
               succ=tuple(tuple(tuple(cell) for cell in row) for row in table),
               sink=sink)


def _decimal_name(x: Fraction) -> str:
    """Short decimal rendering for grid inputs (exact when terminating)."""
    if x.denominator == 1:
        return str(x.numerator)
    value = float(x)
    for digits in range(1, 12):
        text = f"{value:.{digits}f}"
        if Fraction(text) == x:
            return text
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# Configuration files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbstractionConfig:
    """Domain bounds, partition counts, input quantisation, and predicates."""

    x_domain: Interval
    x_cells: int
    theta_domains: tuple[Interval, Interval, Interval]
    theta_cells: tuple[int, int, int]
    u_domain: Interval
    u_points: int
    d_domain: Interval
    predicates: tuple[ThresholdPredicate, ...]
    sink_props: tuple[str, ...] = ()

    def system(self) -> ScalarParametricAffine:
        return ScalarParametricAffine(x_domain=self.x_domain, u_domain=self.u_domain,
                                      theta_domain=tuple(self.theta_domains),
                                      d_domain=self.d_domain)

    def state_cells(self) -> list[Interval]:
        return grid_partition(self.x_domain, self.x_cells)

    def parameter_cells(self) -> list[Box]:
        return box_grid(self.theta_domains, self.theta_cells)

    def input_points(self) -> list[Fraction]:
        if self.u_points == 1:
            return [self.u_domain.lo]
        width = (self.u_domain.hi - self.u_domain.lo) / (self.u_points - 1)
        return [self.u_domain.lo + k * width for k in range(self.u_points)]

    def build(self) -> Pts:
        return build_quotient_pts(self.system(), self.state_cells(),
                                  self.parameter_cells(), self.input_points(),
                                  self.predicates, sink_props=self.sink_props)


def config_to_json(cfg: AbstractionConfig) -> str:
    doc = {
        "x_domain": [str(cfg.x_domain.lo), str(cfg.x_domain.hi)],
        "x_cells": cfg.x_cells,
        "theta_domains": [[str(iv.lo), str(iv.hi)] for iv in cfg.theta_domains],
        "theta_cells": list(cfg.theta_cells),
        "u_domain": [str(cfg.u_domain.lo), str(cfg.u_domain.hi)],
        "u_points": cfg.u_points,
        "d_domain": [str(cfg.d_domain.lo), str(cfg.d_domain.hi)],
        "predicates": [{"name": p.name, "op": p.op, "threshold": str(p.threshold)}
                       for p in cfg.predicates],
        "sink_props": list(cfg.sink_props),
    }
    return json.dumps(doc, indent=1)


def config_from_json(text: str) -> AbstractionConfig:
    doc = json.loads(text)

    def iv(bounds) -> Interval:
        return Interval(frac(bounds[0]), frac(bounds[1]))

    return AbstractionConfig(
        x_domain=iv(doc["x_domain"]),
        x_cells=int(doc["x_cells"]),
        theta_domains=tuple(iv(b) for b in doc["theta_domains"]),
        theta_cells=tuple(int(n) for n in doc["theta_cells"]),
        u_domain=iv(doc["u_domain"]),
        u_points=int(doc["u_points"]),
        d_domain=iv(doc["d_domain"]),
        predicates=tuple(ThresholdPredicate(p["name"], p["op"], frac(p["threshold"]))
                         for p in doc["predicates"]),
        sink_props=tuple(doc.get("sink_props", ())),
    )
