"""Event-driven proof-of-work chain simulation.

One global exponential clock drives block discovery at a constant total rate
(no difficulty retargeting); each event's winner is drawn proportionally to
hash power, which is equivalent to independent per-miner clocks but keeps a
single deterministic RNG stream. All miners observe new blocks instantly.

The block tree records, per block, the fees claimed, the fees still sitting
in the mempool along that branch, and the post-block contract state, so forks
never share contract balances and undercutting a wealthy block genuinely
re-exposes its fees on the attacker's branch.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

from .fee_model import FeeScenario, arrived_fees, claimable_fees
from .frsc_core import PPM, BlockSettlement, FrscSet, SplitParams, apply_block

GENESIS_ID = 0


@dataclass(frozen=True, slots=True)
class Block:
    """An immutable node of the block tree.

    rem_balance is the satoshi left unclaimed in the mempool on this block's
    branch at the moment it was found; arrived_at_found caches the total fee
    inflow up to found_at so branch availability is O(1).
    """

    id: int
    parent: Optional[int]
    height: int
    miner: int
    found_at: float
    claimed_fees: int
    rem_balance: int
    arrived_at_found: int
    settlement: Optional[BlockSettlement]
    frsc_after: Optional[FrscSet]


@dataclass(frozen=True, slots=True)
class Miner:
    """A mining agent: hash power in ppm of the network plus its decision procedure."""

    id: int
    hash_ppm: int
    strategy: Any

    def __post_init__(self) -> None:
        if not 0 <= self.hash_ppm <= PPM:
            raise ValueError(f"hash_ppm must be in [0, {PPM}], got {self.hash_ppm}")


class BlockTree:
    """Mutable container for one game: blocks, tips, and the simulation clock.

    The only mutation paths are advancing ``now`` and appending blocks via
    ``extend``; everything stored is immutable, so reads never see partial
    state. A single game is strictly single-threaded.

    Insertion happens in time order, so the tips at the current best height
    need only ever be appended to (new best) or reset (height grew): a
    max-height tip can only stop being a tip when some block lands above it.
    """

    __slots__ = ("blocks", "now", "tips", "best_height", "best_tips", "_next_id", "_arrived_memo")

    def __init__(self, genesis_frsc: Optional[FrscSet]) -> None:
        genesis = Block(
            id=GENESIS_ID,
            parent=None,
            height=0,
            miner=-1,
            found_at=0.0,
            claimed_fees=0,
            rem_balance=0,
            arrived_at_found=0,
            settlement=None,
            frsc_after=genesis_frsc,
        )
        self.blocks: dict[int, Block] = {GENESIS_ID: genesis}
        self.now: float = 0.0
        self.tips: set[int] = {GENESIS_ID}
        self.best_height: int = 0
        self.best_tips: list[int] = [GENESIS_ID]  # insertion order = oldest first
        self._next_id: int = GENESIS_ID + 1
        self._arrived_memo: Optional[tuple[float, object, int]] = None

    @property
    def genesis(self) -> Block:
        return self.blocks[GENESIS_ID]

    def advance(self, interval: float) -> float:
        if interval < 0:
            raise ValueError(f"interval must be >= 0, got {interval}")
        self.now += interval
        return self.now

    def cached_arrived(self, scenario: FeeScenario) -> int:
        """Fee inflow up to ``now``, memoized for the current event time."""
        memo = self._arrived_memo
        if memo is not None and memo[0] == self.now and memo[1] is scenario:
            return memo[2]
        value = arrived_fees(scenario, self.now)
        self._arrived_memo = (self.now, scenario, value)
        return value

    def _insert(self, block: Block) -> None:
        self.blocks[block.id] = block
        self.tips.discard(block.parent)  # type: ignore[arg-type]
        self.tips.add(block.id)
        if block.height > self.best_height:
            self.best_height = block.height
            self.best_tips = [block.id]
        elif block.height == self.best_height:
            self.best_tips.append(block.id)

    def non_genesis_count(self) -> int:
        return len(self.blocks) - 1

    def path_to_genesis(self, block_id: int) -> list[Block]:
        """Blocks from ``block_id`` down to (and including) genesis."""
        out = []
        cursor: Optional[int] = block_id
        while cursor is not None:
            b = self.blocks[cursor]
            out.append(b)
            cursor = b.parent
        return out


@dataclass(frozen=True, slots=True)
class StrategyDecision:
    """What a winning miner does: which block to build on and how much to claim."""

    parent: int
    claim: int


def sample_interval(rng, total_rate: float) -> float:
    """Exponential inter-block time with mean 1/total_rate seconds."""
    if total_rate <= 0:
        raise ValueError(f"total_rate must be > 0, got {total_rate}")
    return rng.expovariate(total_rate)


def validate_hash_powers(miners: Sequence[Miner]) -> None:
    total = sum(m.hash_ppm for m in miners)
    if total != PPM:
        raise ValueError(f"miner hash powers must sum to {PPM} ppm, got {total}")


def pick_winner(rng, miners: Sequence[Miner]) -> int:
    """Draw the block finder proportionally to hash power. Deterministic per RNG state."""
    if not miners:
        raise ValueError("no miners")
    validate_hash_powers(miners)
    r = rng.randrange(PPM)
    acc = 0
    for m in miners:
        acc += m.hash_ppm
        if r < acc:
            return m.id
    raise AssertionError("unreachable: hash powers sum to PPM")


class WinnerPicker:
    """Prevalidated sampler drawing identically to pick_winner.

    Validates once and answers by bisection, for loops that pick millions of
    winners from a fixed miner set.
    """

    __slots__ = ("_ids", "_cum")

    def __init__(self, miners: Sequence[Miner]) -> None:
        if not miners:
            raise ValueError("no miners")
        validate_hash_powers(miners)
        self._ids = [m.id for m in miners]
        self._cum = []
        acc = 0
        for m in miners:
            acc += m.hash_ppm
            self._cum.append(acc)

    def pick(self, rng) -> int:
        return self._ids[bisect_right(self._cum, rng.randrange(PPM))]


def available_at(tree: BlockTree, block: Block, arrived_now: int) -> int:
    """Mempool fees available on ``block``'s branch, given inflow up to now."""
    return arrived_now - block.arrived_at_found + block.rem_balance


def extend(
    tree: BlockTree,
    winner: int,
    decision: StrategyDecision,
    scenario: FeeScenario,
    frsc_params: Optional[SplitParams],
) -> Block:
    """Append the winner's block at the current simulation time.

    With contracts enabled (``frsc_params`` set) the block settles against its
    parent's contract state; disabled, the miner keeps the whole claim.
    Claims beyond the branch's claimable fees signal a strategy bug and raise.
    """
    parent = tree.blocks.get(decision.parent)
    if parent is None:
        raise ValueError(f"parent block {decision.parent} not in tree")
    arrived_now = tree.cached_arrived(scenario)
    available = available_at(tree, parent, arrived_now)
    allowed = claimable_fees(scenario, available)
    if not 0 <= decision.claim <= allowed:
        raise ValueError(
            f"claim {decision.claim} outside [0, {allowed}] available on branch "
            f"of block {parent.id} at t={tree.now}"
        )

    if frsc_params is not None:
        if parent.frsc_after is None:
            raise ValueError("contract mode is on but the branch carries no contract state")
        settlement, frsc_after = apply_block(parent.frsc_after, decision.claim, frsc_params)
    else:
        settlement = BlockSettlement(
            reward_total=decision.claim,
            next_claim=0,
            miner_direct=decision.claim,
            deposit_total=0,
            per_contract_claims=(),
            per_contract_deposits=(),
        )
        frsc_after = None

    block = Block(
        id=tree._next_id,
        parent=parent.id,
        height=parent.height + 1,
        miner=winner,
        found_at=tree.now,
        claimed_fees=decision.claim,
        rem_balance=available - decision.claim,
        arrived_at_found=arrived_now,
        settlement=settlement,
        frsc_after=frsc_after,
    )
    tree._next_id += 1
    tree._insert(block)
    return block


def longest_tip(tree: BlockTree) -> int:
    """Tip of maximal height; ties go to the earliest found_at, then lowest id."""
    return tree.best_tips[0]


def scan_longest_tip(tree: BlockTree) -> int:
    """Reference implementation of the fork-choice rule by full scan."""
    best = min(
        tree.tips, key=lambda i: (-tree.blocks[i].height, tree.blocks[i].found_at, i)
    )
    return best


def main_chain(tree: BlockTree) -> list[Block]:
    """Genesis-to-tip path of the current longest chain."""
    path = tree.path_to_genesis(longest_tip(tree))
    path.reverse()
    return path


def orphan_rate(tree: BlockTree) -> float:
    """Fraction of mined blocks not on the longest chain."""
    total = tree.non_genesis_count()
    if total < 1:
        raise ValueError("orphan rate undefined on a genesis-only tree")
    return (total - tree.best_height) / total
