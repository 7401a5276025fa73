"""Correct-by-design adaptive controller synthesis for parametric systems.

The toolkit couples set-valued parameter estimation with Rabin-game
controller synthesis: a parametric transition system is expanded into an
adaptive transition system over (state, parameter-set) pairs, composed
with a deterministic Rabin automaton for the specification, and solved as
a two-player game.  A finite-abstraction front end handles scalar
parametric affine dynamics.
"""

from .abstraction import (AbstractionConfig, Box, Interval, PartitionError,
                          ScalarParametricAffine, ThresholdPredicate, box_grid,
                          build_quotient_pts, cell_index_of, frac,
                          grid_partition, post_box)
from .adaptive import Ats, ats_successors, build_ats
from .estimation import (InconsistentHistoryError, estimate_batch,
                         estimate_step)
from .logic import (Atom, Dra, Finally, Formula, Globally, LassoWord,
                    LtlSyntaxError, Not, And, Or, TrueFormula,
                    UndeclaredPropositionError, UnsupportedFragmentError,
                    Until, accepts, compile_to_dra, format_dra, lasso,
                    letter_mask, parse_dra_file, parse_ltl)
from .simulation import (Trace, UniformDisturbance, WinningRegionExitError,
                         check_trace, simulate_pts, simulate_scalar,
                         write_trace_csv)
from .synthesis import (AlphabetMismatchError, GameSolution, ProductAutomaton,
                        StrategyDomainError, build_product, execute_strategy,
                        project_initial, solve_game, solve_rabin,
                        verify_solution, winning_source_states)
from .systems import (DynamicsSpec, ObservationMismatchError, Partition, Pts,
                      TransitionSystem, embed, make_nonblocking, make_pts,
                      make_ts, pts_from_json, pts_to_json, quotient, robustify)

__version__ = "0.1.0"
