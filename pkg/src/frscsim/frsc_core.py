"""Fee-redistribution contract arithmetic, exact to the satoshi.

A fee-redistribution smart contract (FRSC) holds an accumulated balance and
pays the miner of every block ``balance // window``. In return, a fixed share
of each block's transaction fees is deposited back into the contract set, so
the per-block payout tracks a moving average of fee income over roughly
``window`` blocks.

All value arithmetic here is integer satoshi with floor division; rounding
remainders stay inside the contract balances, so every operation conserves
value exactly. Ratios (the contract/miner fee split and the per-contract
deposit shares) are parts-per-million integers, never floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

# 1 BTC = 100_000_000 satoshi; all ratios are parts per million.
SATOSHI_PER_BTC = 100_000_000
PPM = 1_000_000


def _check_amount(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"{name} must be an int (satoshi), got {type(value).__name__}")
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")


def _check_ppm(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"{name} must be an int (ppm), got {type(value).__name__}")
    if not 0 <= value <= PPM:
        raise ValueError(f"{name} must be in [0, {PPM}] ppm, got {value}")


@dataclass(frozen=True, slots=True)
class Frsc:
    """One fee-redistribution contract.

    balance   -- accumulated satoshi (the `nu` column in series output)
    window    -- averaging window in blocks; each block pays balance // window
    share_ppm -- this contract's share of every block deposit, in ppm
    """

    balance: int
    window: int
    share_ppm: int

    def __post_init__(self) -> None:
        # Single cheap guard on the hot path; detailed diagnosis only on failure.
        if (
            type(self.balance) is int
            and self.balance >= 0
            and type(self.window) is int
            and self.window >= 1
            and type(self.share_ppm) is int
            and 0 <= self.share_ppm <= PPM
        ):
            return
        _check_amount("balance", self.balance)
        if not isinstance(self.window, int) or isinstance(self.window, bool):
            raise TypeError(f"window must be an int, got {type(self.window).__name__}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        _check_ppm("share_ppm", self.share_ppm)


@dataclass(frozen=True, slots=True)
class FrscSet:
    """An ordered, share-normalized collection of contracts.

    Order is fixed at construction and significant: deposit rounding
    remainders always go to the last contract in the list.
    """

    contracts: tuple[Frsc, ...]

    def __init__(self, contracts: Iterable[Frsc]) -> None:
        items = tuple(contracts)
        if not items:
            raise ValueError("contract set must be non-empty")
        total = sum(c.share_ppm for c in items)
        if total != PPM:
            raise ValueError(f"contract shares must sum to exactly {PPM} ppm, got {total}")
        object.__setattr__(self, "contracts", items)

    def __len__(self) -> int:
        return len(self.contracts)

    def __iter__(self):
        return iter(self.contracts)

    def total_balance(self) -> int:
        return sum(c.balance for c in self.contracts)

    @classmethod
    def _with_same_shares(cls, contracts: tuple[Frsc, ...]) -> "FrscSet":
        # Internal: share values are copied verbatim from an already-valid
        # set, so the share-sum invariant holds by construction.
        out = cls.__new__(cls)
        object.__setattr__(out, "contracts", contracts)
        return out


@dataclass(frozen=True, slots=True)
class SplitParams:
    """Block-fee split between the contract set and the miner (ppm, exact complement)."""

    contract_ppm: int
    miner_ppm: int

    def __post_init__(self) -> None:
        _check_ppm("contract_ppm", self.contract_ppm)
        _check_ppm("miner_ppm", self.miner_ppm)
        if self.contract_ppm + self.miner_ppm != PPM:
            raise ValueError(
                f"contract_ppm + miner_ppm must equal {PPM}, "
                f"got {self.contract_ppm} + {self.miner_ppm}"
            )

    @classmethod
    def from_contract_ppm(cls, contract_ppm: int) -> "SplitParams":
        _check_ppm("contract_ppm", contract_ppm)
        return cls(contract_ppm=contract_ppm, miner_ppm=PPM - contract_ppm)


@dataclass(frozen=True, slots=True)
class BlockSettlement:
    """Exact accounting for one block: what the miner got, what the contracts got."""

    reward_total: int
    next_claim: int
    miner_direct: int
    deposit_total: int
    per_contract_claims: tuple[int, ...]
    per_contract_deposits: tuple[int, ...]


def partial_claim(frsc: Frsc) -> int:
    """Per-block payout of a single contract: floor(balance / window)."""
    return frsc.balance // frsc.window


def next_claim(contracts: FrscSet) -> int:
    """Total payout the next block's miner receives from the whole contract set."""
    return sum(c.balance // c.window for c in contracts.contracts)


def apply_block(
    contracts: FrscSet, block_fees: int, params: SplitParams
) -> tuple[BlockSettlement, FrscSet]:
    """Settle one block against the contract set.

    The miner is paid every contract's partial claim plus the miner share of
    ``block_fees``; the contract share is deposited across contracts by their
    share_ppm, with the division remainder assigned to the last contract.
    Returns the settlement and the post-block contract set.

    Conservation holds exactly: miner_direct + deposit_total == block_fees,
    and the new total balance differs from the old by deposit_total minus the
    claims paid out.
    """
    _check_amount("block_fees", block_fees)

    claims = tuple(c.balance // c.window for c in contracts.contracts)
    deposit_total = block_fees * params.contract_ppm // PPM
    miner_direct = block_fees - deposit_total

    deposits = []
    assigned = 0
    for c in contracts.contracts[:-1]:
        d = deposit_total * c.share_ppm // PPM
        deposits.append(d)
        assigned += d
    deposits.append(deposit_total - assigned)

    new_contracts = FrscSet._with_same_shares(
        tuple(
            Frsc(balance=c.balance - claim + dep, window=c.window, share_ppm=c.share_ppm)
            for c, claim, dep in zip(contracts.contracts, claims, deposits)
        )
    )
    claim_sum = sum(claims)
    settlement = BlockSettlement(
        reward_total=claim_sum + miner_direct,
        next_claim=claim_sum,
        miner_direct=miner_direct,
        deposit_total=deposit_total,
        per_contract_claims=claims,
        per_contract_deposits=tuple(deposits),
    )
    return settlement, new_contracts


def init_genesis(
    mean_fees: int, params: SplitParams, specs: Sequence[tuple[int, int]]
) -> FrscSet:
    """Build a saturated contract set from expected per-block fee income.

    ``specs`` is an ordered list of (window, share_ppm) pairs whose shares
    must sum to exactly one million ppm. Each contract starts at
    ``floor(floor(mean_fees * contract_ppm / PPM) * share_ppm / PPM) * window``,
    i.e. window blocks' worth of its expected per-block deposit, so the first
    claim already equals the steady-state payout.
    """
    _check_amount("mean_fees", mean_fees)
    share_sum = sum(share for _, share in specs)
    if share_sum != PPM:
        raise ValueError(f"spec shares must sum to exactly {PPM} ppm, got {share_sum}")

    contract_cut = mean_fees * params.contract_ppm // PPM
    return FrscSet(
        Frsc(
            balance=(contract_cut * share_ppm // PPM) * window,
            window=window,
            share_ppm=share_ppm,
        )
        for window, share_ppm in specs
    )


def effective_window(contracts: FrscSet) -> Fraction:
    """Share-weighted mean window length, as an exact rational number of blocks.

    Two contract sets with the same effective window average fee income over
    comparable horizons; the value need not be an integer.
    """
    weighted = sum(c.share_ppm * c.window for c in contracts.contracts)
    return Fraction(weighted, PPM)


def parity_fees(claim: int, params: SplitParams) -> int:
    """Block-fee level at which the miner's total reward equals the block's own fees.

    Below this level the contract set tops the miner up; above it the miner
    nets less than the raw fees. Undefined when the contract share is zero.
    """
    _check_amount("claim", claim)
    if params.contract_ppm == 0:
        raise ValueError("parity is undefined when contract_ppm is 0")
    return claim * PPM // params.contract_ppm
