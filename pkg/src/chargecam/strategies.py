"""Misjudgment-correction strategies layered over the array search.

Shift-tolerant matching hides some substitutions (a neighbor can mask the
edited base) and misprices runs of indels (every base after the run shifts
by the net indel count).  Two corrections address these failure modes:

hdac: when the positionwise (HD) and shift-tolerant (ED*) decisions
disagree, prefer the HD decision with probability

    p = e_s / (e_s + e_id) * exp(-(alpha * e_id + beta * T)),

precomputable per error profile and threshold.  Substitution-dominated
error profiles push p toward 1; indel-dominated ones toward 0.  When p
falls below a floor the strategy is disabled outright and the extra HD
search cycle is not spent.

tasr: when the threshold is large enough that a surviving read can afford
a run of indels, also compare the read rotated by a few bases in each
direction and OR the decisions.  The gate is the lower bound

    T_l = ceil(gamma / e_id * m),

below which rotations never trigger and the search is bitwise identical
to the plain one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_model import (
    ArrayConfig,
    MatchMode,
    NoiseModel,
    matchline_voltage,
    row_mismatch_count,
    sense,
)
from .genome import ErrorProfile

STRATEGY_NONE = "none"
STRATEGY_HDAC = "hdac"
STRATEGY_TASR = "tasr"

DIRECTION_LEFT = "left"
DIRECTION_RIGHT = "right"
DIRECTION_BOTH = "both"


@dataclass(frozen=True)
class HdacParams:
    alpha: float = 200.0
    beta: float = 0.5
    disable_threshold: float = 0.01
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if not 0.0 <= self.disable_threshold <= 1.0:
            raise ValueError("disable_threshold must be in [0, 1]")


@dataclass(frozen=True)
class TasrParams:
    n_rotations: int = 2
    gamma: float = 2e-4
    direction: str = DIRECTION_BOTH

    def __post_init__(self) -> None:
        if self.n_rotations < 0:
            raise ValueError("n_rotations must be >= 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.direction not in (DIRECTION_LEFT, DIRECTION_RIGHT, DIRECTION_BOTH):
            raise ValueError(f"unknown rotation direction {self.direction!r}")


@dataclass
class MatchDecision:
    """Composite decision for one (segment, read) pair.

    strategy_fired records which correction changed the plain shift-tolerant
    outcome: 'hdac' when a disagreement draw selected the HD result, 'tasr'
    when only a rotated comparison matched, else 'none'.  o_hd is None for
    paths that never ran an HD comparison.
    """

    o_hd: bool | None
    o_ed_star: bool
    o_final: bool
    strategy_fired: str = STRATEGY_NONE


def hdac_probability(profile: ErrorProfile, threshold: int, params: HdacParams) -> float:
    """Probability of preferring the HD result on disagreement."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    denom = profile.e_s + profile.e_id
    if denom == 0:
        raise ValueError("hdac probability undefined when e_s = e_id = 0")
    return profile.e_s / denom * math.exp(-(params.alpha * profile.e_id + params.beta * threshold))


def hdac_active(profile: ErrorProfile, threshold: int, params: HdacParams) -> bool:
    """Whether the extra HD search is worth its cycle for this profile and T."""
    if not params.enabled:
        return False
    return hdac_probability(profile, threshold, params) >= params.disable_threshold


def hdac_decide(
    o_hd: bool,
    o_ed_star: bool,
    p: float,
    gen: np.random.Generator,
) -> MatchDecision:
    """Arbitrate between the HD and ED* decisions.

    Agreement passes through untouched and consumes no randomness; on
    disagreement a single uniform draw selects HD with probability p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if o_hd == o_ed_star:
        return MatchDecision(o_hd=o_hd, o_ed_star=o_ed_star, o_final=o_ed_star)
    take_hd = bool(gen.random() < p)
    return MatchDecision(
        o_hd=o_hd,
        o_ed_star=o_ed_star,
        o_final=o_hd if take_hd else o_ed_star,
        strategy_fired=STRATEGY_HDAC if take_hd else STRATEGY_NONE,
    )


def tasr_lower_bound(profile: ErrorProfile, read_length: int, params: TasrParams) -> int:
    """Smallest threshold at which rotations are worth triggering.

    With no indel error at all there is no shift to undo; the returned
    bound is then read_length + 1, which no feasible threshold reaches, so
    rotations stay permanently disabled.
    """
    if read_length < 1:
        raise ValueError("read_length must be >= 1")
    if profile.e_id == 0:
        return read_length + 1
    return math.ceil(params.gamma / profile.e_id * read_length)


def rotation_offsets(params: TasrParams) -> list[int]:
    """Rotation amounts to try beyond the original read, in draw order.

    Positive offsets rotate left, negative rotate right.  Direction 'both'
    splits the budget, covering deletion-induced shifts one way and
    insertion-induced shifts the other.
    """
    n = params.n_rotations
    if params.direction == DIRECTION_LEFT:
        return list(range(1, n + 1))
    if params.direction == DIRECTION_RIGHT:
        return [-k for k in range(1, n + 1)]
    lefts = list(range(1, math.ceil(n / 2) + 1))
    rights = [-k for k in range(1, n // 2 + 1)]
    return lefts + rights


def rotate(read: str, offset: int) -> str:
    """Circular rotation: positive rotates left, negative rotates right."""
    if not read:
        return read
    k = offset % len(read)
    return read[k:] + read[:k]


def tasr_search(
    segment: str,
    read: str,
    threshold: int,
    t_lower: int,
    params: TasrParams,
    config: ArrayConfig | None = None,
    noise: NoiseModel | None = None,
    gen: np.random.Generator | None = None,
) -> MatchDecision:
    """Shift-tolerant search with rotation recovery on one row.

    Below the gate (threshold < t_lower) this is exactly the plain search.
    At or above it, the read is also compared after each configured
    rotation and the decisions are OR-ed; strategy_fired is 'tasr' only
    when a rotation flipped a plain mismatch into a match.

    t_lower is passed in rather than recomputed because it is a pure
    function of (error profile, read length, gamma) and callers evaluate
    many pairs under one profile.
    """
    if len(segment) != len(read):
        raise ValueError("segment and read lengths differ")
    config = config or ArrayConfig(cells=len(read))
    noise = noise or NoiseModel.ideal()

    def one(query: str) -> bool:
        n_mis = row_mismatch_count(segment, query, MatchMode.ED_STAR)
        v = matchline_voltage(n_mis, config, noise, gen)
        return sense(v, threshold, config)

    o_plain = one(read)
    if threshold < t_lower or params.n_rotations == 0:
        return MatchDecision(o_hd=None, o_ed_star=o_plain, o_final=o_plain)
    o_final = o_plain
    for offset in rotation_offsets(params):
        if o_final:
            break
        o_final = one(rotate(read, offset))
    fired = STRATEGY_TASR if (o_final and not o_plain) else STRATEGY_NONE
    return MatchDecision(o_hd=None, o_ed_star=o_final, o_final=o_final, strategy_fired=fired)
