"""Shipped models: a drifty grid world and a scalar safety control problem.

The grid world is a motion planning arena with an unknown constant
horizontal drift acting inside a band of cells; the robot must visit two
regions infinitely often while never touching unsafe cells.  Without
learning the drift the crossing cannot be forced, so the robust baseline
loses everywhere while the adaptive strategy probes the band, identifies
the drift, and then crosses deterministically.

The scalar problem is the classic bounded-invariance setup: keep x inside
[-1, 1] under unknown (a, b, c) in x+ = (1+a)x + bu + c + d.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .abstraction import (AbstractionConfig, Interval, ScalarParametricAffine,
                          ThresholdPredicate, frac)
from .systems import DynamicsSpec, Pts, embed

GRID_MOVES = {"left": (-1, 0), "right": (1, 0), "up": (0, 1), "down": (0, -1)}


@dataclass(frozen=True)
class GridWorldConfig:
    """Cell arena; coordinates are (col, row) with row 0 at the bottom.

    ``drifts`` are the candidate horizontal drifts, positive pushing left,
    applied on top of the commanded move whenever the robot currently sits
    in a ``band`` cell.  ``boundary`` is "sink" (leaving the grid lands in
    an unsafe sink) or "clamp".
    """

    width: int = 15
    height: int = 10
    band: frozenset = frozenset()
    unsafe: frozenset = frozenset()
    region_a: frozenset = frozenset()
    region_b: frozenset = frozenset()
    drifts: tuple[int, ...] = (2, 1, 0, -1, -2)
    boundary: str = "sink"

    def __post_init__(self):
        cells = {(c, r) for c in range(self.width) for r in range(self.height)}
        for name, region in (("band", self.band), ("unsafe", self.unsafe),
                             ("A", self.region_a), ("B", self.region_b)):
            if not region <= cells:
                raise ValueError(f"region {name} leaves the grid")
        if self.unsafe & (self.region_a | self.region_b):
            raise ValueError("A/B regions must not overlap unsafe cells")
        if self.boundary not in ("sink", "clamp"):
            raise ValueError(f"unknown boundary policy: {self.boundary}")


def default_gridworld() -> GridWorldConfig:
    """150-cell arena: a full-width drift band on rows 4-5 separates region
    A (bottom) from region B (top).  Row 5 is only safe on columns 5..9 and
    row 6 carries two unsafe posts, so a blind crossing can always be
    drifted into an unsafe cell while any identified drift admits a safe
    two-step crossing column."""
    unsafe = {(c, 5) for c in range(15) if not 5 <= c <= 9}
    unsafe |= {(3, 6), (11, 6)}
    return GridWorldConfig(
        width=15, height=10,
        band=frozenset((c, r) for c in range(15) for r in (4, 5)),
        unsafe=frozenset(unsafe),
        region_a=frozenset({(2, 1), (3, 1)}),
        region_b=frozenset({(11, 8), (12, 8)}),
    )


GRID_FORMULA = "GF A & GF B & G !unsafe"
GRID_PROPS = ("A", "B", "unsafe")


def gen_gridworld(cfg: GridWorldConfig) -> Pts:
    """Embed the grid dynamics: deterministic per drift value, with the
    drift added to the next position whenever the current cell is in the
    band."""
    cells = tuple((c, r) for r in range(cfg.height) for c in range(cfg.width))

    def step(cell, u, theta, _d):
        c, r = cell
        dc, dr = GRID_MOVES[u]
        c2, r2 = c + dc, r + dr
        if cell in cfg.band:
            c2 -= theta
        if 0 <= c2 < cfg.width and 0 <= r2 < cfg.height:
            return (c2, r2)
        if cfg.boundary == "clamp":
            return (min(max(c2, 0), cfg.width - 1), min(max(r2, 0), cfg.height - 1))
        return ("off", c2, r2)

    dyn = DynamicsSpec(
        states=cells,
        inputs=tuple(GRID_MOVES),
        params=cfg.drifts,
        disturbances=(0,),
        step=step,
        predicates=(
            ("A", lambda cell: cell in cfg.region_a),
            ("B", lambda cell: cell in cfg.region_b),
            ("unsafe", lambda cell: cell in cfg.unsafe),
        ),
        state_name=lambda cr: f"c{cr[0]}_{cr[1]}",
        param_name=lambda t: f"{t:+d}",
    )
    return embed(dyn, sink_props=("unsafe",))


# ---------------------------------------------------------------------------
# Scalar safety control
# ---------------------------------------------------------------------------

SCALAR_FORMULA = "G x_le_1 & G x_ge_m1"
SCALAR_THETA_STAR = (Fraction("0.45"), Fraction("1.11"), Fraction("-0.18"))


def gen_scalar_safety() -> tuple[ScalarParametricAffine, str, AbstractionConfig]:
    """Bounded-invariance setup: x, u in [-1, 1] (11 input points), unknown
    parameters a in [-0.5, 0.5], b in [1, 2], c in [-0.2, 0.2] split into
    2 x 2 x 4 cells, disturbance in [-0.1, 0.1], 10 state cells."""
    cfg = AbstractionConfig(
        x_domain=Interval(frac("-1"), frac("1")),
        x_cells=10,
        theta_domains=(Interval(frac("-0.5"), frac("0.5")),
                       Interval(frac("1"), frac("2")),
                       Interval(frac("-0.2"), frac("0.2"))),
        theta_cells=(2, 2, 4),
        u_domain=Interval(frac("-1"), frac("1")),
        u_points=11,
        d_domain=Interval(frac("-0.1"), frac("0.1")),
        predicates=(ThresholdPredicate("x_le_1", "le", frac("1")),
                    ThresholdPredicate("x_ge_m1", "ge", frac("-1"))),
    )
    return cfg.system(), SCALAR_FORMULA, cfg
