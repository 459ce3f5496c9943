"""The four miner decision procedures.

Each strategy maps a read-only view of the block tree and mempool to a
(parent block, fees to claim) decision. Profitability comparisons use the
full per-block reward (direct fee share plus the contract payout computed
from the chosen parent's own branch state), so enabling contracts changes
undercutting incentives without touching the strategies themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .chain_sim import Block, BlockTree, StrategyDecision, available_at, longest_tip
from .fee_model import FeeScenario, arrived_fees, claimable_fees
from .frsc_core import PPM, SplitParams, next_claim


@dataclass(frozen=True, slots=True)
class StrategySpec:
    """Strategy id plus parameters, as carried by a Miner."""

    name: str
    leave_ppm: int = 500_000  # share of available fees left behind by function_fork

    def __post_init__(self) -> None:
        if self.name not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {self.name!r}; options: {sorted(STRATEGY_NAMES)}")
        if not 0 <= self.leave_ppm <= PPM:
            raise ValueError(f"leave_ppm must be in [0, {PPM}], got {self.leave_ppm}")


@dataclass(frozen=True, slots=True)
class View:
    """Read-only snapshot handed to a strategy at block-found time.

    The tree is single-threaded and never mutates during a decision, so
    holding a reference is equivalent to a copy. ``arrived_now`` caches the
    total fee inflow at the decision time.
    """

    tree: BlockTree
    now: float
    scenario: FeeScenario
    split: Optional[SplitParams]
    arrived_now: int

    @classmethod
    def at_now(
        cls, tree: BlockTree, scenario: FeeScenario, split: Optional[SplitParams]
    ) -> "View":
        return cls(
            tree=tree,
            now=tree.now,
            scenario=scenario,
            split=split,
            arrived_now=tree.cached_arrived(scenario),
        )

    def available(self, block: Block) -> int:
        return available_at(self.tree, block, self.arrived_now)

    def claimable(self, block: Block) -> int:
        return claimable_fees(self.scenario, self.available(block))

    def reward_for(self, parent: Block, claim: int) -> int:
        """Total reward for mining on ``parent`` and claiming ``claim``."""
        if self.split is None:
            return claim
        assert parent.frsc_after is not None
        direct = claim - claim * self.split.contract_ppm // PPM
        return next_claim(parent.frsc_after) + direct


def default_compliant(view: View) -> StrategyDecision:
    """Longest chain, oldest tie-break, claim everything claimable."""
    tip = view.tree.blocks[longest_tip(view.tree)]
    return StrategyDecision(parent=tip.id, claim=view.claimable(tip))


def petty_compliant(view: View) -> StrategyDecision:
    """Like default_compliant, but among equal-height tips pick the richest branch.

    Never forks below maximal height; ties on available fees go to the oldest tip.
    """
    tree = view.tree
    candidates = [tree.blocks[i] for i in tree.best_tips]
    parent = min(candidates, key=lambda b: (-view.available(b), b.found_at, b.id))
    return StrategyDecision(parent=parent.id, claim=view.claimable(parent))


def lazy_fork(view: View) -> StrategyDecision:
    """Extend or undercut the longest tip, whichever pays more; leave half either way.

    Leaving half the branch's fees deters the next lazy forker from
    undercutting this block in turn. Ties prefer extending (non-attacking).
    """
    tree = view.tree
    tip = tree.blocks[longest_tip(tree)]
    extend_claim = claimable_fees(view.scenario, view.available(tip) // 2)
    extend_reward = view.reward_for(tip, extend_claim)
    if tip.parent is None:
        return StrategyDecision(parent=tip.id, claim=extend_claim)

    fork_parent = tree.blocks[tip.parent]
    fork_claim = claimable_fees(view.scenario, view.available(fork_parent) // 2)
    fork_reward = view.reward_for(fork_parent, fork_claim)
    if fork_reward > extend_reward:
        return StrategyDecision(parent=fork_parent.id, claim=fork_claim)
    return StrategyDecision(parent=tip.id, claim=extend_claim)


def function_fork(view: View, leave_ppm: int = 500_000) -> StrategyDecision:
    """Undercut whenever the tip claimed anything; always leave a fixed fee share.

    The leave fraction parameterizes how strongly other miners are lured onto
    the fork: the more left behind, the less this block earns directly.
    """
    if not 0 <= leave_ppm <= PPM:
        raise ValueError(f"leave_ppm must be in [0, {PPM}], got {leave_ppm}")
    tree = view.tree
    tip = tree.blocks[longest_tip(tree)]
    if tip.claimed_fees > 0 and tip.parent is not None:
        parent = tree.blocks[tip.parent]
    else:
        parent = tip
    claim = claimable_fees(view.scenario, view.available(parent) * (PPM - leave_ppm) // PPM)
    return StrategyDecision(parent=parent.id, claim=claim)


DEFAULT_COMPLIANT = "default_compliant"
PETTY_COMPLIANT = "petty_compliant"
LAZY_FORK = "lazy_fork"
FUNCTION_FORK = "function_fork"

STRATEGY_NAMES = (DEFAULT_COMPLIANT, PETTY_COMPLIANT, LAZY_FORK, FUNCTION_FORK)


def decide(spec: StrategySpec, view: View) -> StrategyDecision:
    """Dispatch a miner's strategy spec to its decision procedure."""
    if spec.name == DEFAULT_COMPLIANT:
        return default_compliant(view)
    if spec.name == PETTY_COMPLIANT:
        return petty_compliant(view)
    if spec.name == LAZY_FORK:
        return lazy_fork(view)
    return function_fork(view, spec.leave_ppm)
