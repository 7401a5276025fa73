"""Set-valued parameter estimation for parametric transition systems.

Estimator sets are bitmasks over the PTS parameter ids.  The estimate is
sound (the ground-truth parameter is never discarded along a trajectory it
generated) and monotone non-increasing; an empty result means the observed
history is inconsistent with every parameter, i.e. the model class itself
is wrong, and is surfaced as an error rather than a value.
"""

from __future__ import annotations

from typing import Sequence

from .systems import Pts


class InconsistentHistoryError(ValueError):
    """No parameter explains the observed history."""


def full_param_set(pts: Pts) -> int:
    return pts.full_param_set


def estimate_step(pts: Pts, theta_set: int, x: int, u: int, x_next: int) -> int:
    """One recursive update: keep the parameters under which the observed
    transition x --u--> x_next is possible."""
    if theta_set == 0:
        raise ValueError("estimator set must be non-empty")
    result = 0
    remaining = theta_set
    while remaining:
        low = remaining & -remaining
        theta = low.bit_length() - 1
        if x_next in pts.succ[x][u][theta]:
            result |= low
        remaining ^= low
    if result == 0:
        raise InconsistentHistoryError(
            f"transition {pts.states[x]} --{pts.inputs[u]}--> {pts.states[x_next]} "
            f"is impossible under every candidate parameter "
            f"{{{', '.join(pts.param_names(theta_set))}}}")
    return result


def estimate_batch(pts: Pts, states: Sequence[int], inputs: Sequence[int]) -> int:
    """Parameters consistent with the whole history x_0 u_0 x_1 ... x_k.

    Computed as a direct comprehension over the parameter set, not by
    folding ``estimate_step``; the two are required to agree.
    """
    if len(states) != len(inputs) + 1:
        raise ValueError(f"need k+1 states for k inputs, got {len(states)} states "
                         f"and {len(inputs)} inputs")
    result = 0
    for theta in range(pts.n_params):
        if all(states[i + 1] in pts.succ[states[i]][u][theta]
               for i, u in enumerate(inputs)):
            result |= 1 << theta
    if result == 0:
        raise InconsistentHistoryError(
            "history is impossible under every parameter: "
            + " ".join(pts.states[x] for x in states))
    return result
