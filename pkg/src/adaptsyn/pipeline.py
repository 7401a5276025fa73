"""End-to-end assemblies of the shipped case studies.

Each builder runs abstraction (where applicable), specification
compilation, adaptive-system construction, product construction, game
solving, and projection, recording wall-clock times per stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import casestudies
from .abstraction import AbstractionConfig, ScalarParametricAffine
from .adaptive import Ats, build_ats
from .casestudies import GridWorldConfig
from .logic import Dra, compile_to_dra, parse_ltl
from .synthesis import (GameSolution, ProductAutomaton, build_product,
                        project_initial, solve_rabin, winning_source_states)
from .systems import Pts, robustify
from .pipeline_util import Stopwatch


@dataclass
class ScalarArtifacts:
    sys: ScalarParametricAffine
    formula_text: str
    cfg: AbstractionConfig
    qpts: Pts
    dra: Dra
    ats: Ats
    product: ProductAutomaton
    sol: GameSolution
    region: tuple[int, ...]              # projected winning PTS states
    robust_region: tuple[int, ...]
    times: Mapping[str, float] = field(default_factory=dict)

    def region_interval(self) -> tuple[str, str] | None:
        cells = self.cfg.state_cells()
        ids = [x for x in self.region if x < len(cells)]
        if not ids:
            return None
        return str(cells[min(ids)].lo), str(cells[max(ids)].hi)


def build_scalar() -> ScalarArtifacts:
    watch = Stopwatch()
    sys, formula_text, cfg = casestudies.gen_scalar_safety()
    with watch("abstract"):
        qpts = cfg.build()
    with watch("compile_spec"):
        formula = parse_ltl(formula_text, qpts.props)
        dra = compile_to_dra(formula, qpts.props)
    with watch("robust_baseline"):
        robust_ts = robustify(qpts)
        robust_product = build_product(robust_ts, dra)
        robust_sol = solve_rabin(robust_product)
        robust_region = winning_source_states(robust_sol, robust_product)
    with watch("build_ats"):
        ats = build_ats(qpts)
    with watch("build_product"):
        product = build_product(ats, dra)
    with watch("solve"):
        sol = solve_rabin(product)
    region = project_initial(sol, product)
    return ScalarArtifacts(sys=sys, formula_text=formula_text, cfg=cfg, qpts=qpts,
                           dra=dra, ats=ats, product=product, sol=sol,
                           region=region, robust_region=robust_region,
                           times=watch.times)


@dataclass
class GridArtifacts:
    cfg: GridWorldConfig
    formula_text: str
    pts: Pts
    dra: Dra
    ats: Ats
    product: ProductAutomaton
    sol: GameSolution
    region: tuple[int, ...]
    robust_region: tuple[int, ...]
    times: Mapping[str, float] = field(default_factory=dict)


def build_grid(cfg: GridWorldConfig | None = None) -> GridArtifacts:
    watch = Stopwatch()
    cfg = cfg or casestudies.default_gridworld()
    with watch("generate"):
        pts = casestudies.gen_gridworld(cfg)
    with watch("compile_spec"):
        formula = parse_ltl(casestudies.GRID_FORMULA, pts.props)
        dra = compile_to_dra(formula, pts.props)
    with watch("robust_baseline"):
        robust_ts = robustify(pts)
        robust_product = build_product(robust_ts, dra)
        robust_sol = solve_rabin(robust_product)
        robust_region = winning_source_states(robust_sol, robust_product)
    with watch("build_ats"):
        ats = build_ats(pts)
    with watch("build_product"):
        product = build_product(ats, dra)
    with watch("solve"):
        sol = solve_rabin(product)
    region = project_initial(sol, product)
    return GridArtifacts(cfg=cfg, formula_text=casestudies.GRID_FORMULA, pts=pts,
                         dra=dra, ats=ats, product=product, sol=sol,
                         region=region, robust_region=robust_region,
                         times=watch.times)
