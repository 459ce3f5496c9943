"""Experiment runners and CSV emission.

Four runners cover the simulator's standard studies:

* exp1 -- single contract, window sweep x fee-split sweep, honest chain.
* exp2 -- four contracts of doubling windows, split sweep plus three
  deposit-share distributions, per-contract payout series.
* exp3 -- one contract vs four contracts with the same effective window on a
  slow triangle fee wave, relative payout difference per block.
* exp4 -- strategy games: a grid of honest-miner fractions, the rest learning
  miners picking attack strategies per game, with and without contracts.

Every run is a pure function of (seed, config): CSV output is byte-identical
across repeats. All satoshi amounts are written as plain decimal integers;
ratios are written as fixed six-decimal strings computed in integer
arithmetic, never via float formatting.
"""

from __future__ import annotations

import hashlib
import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from multiprocessing import Pool, cpu_count
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .chain_sim import (
    BlockTree,
    Miner,
    StrategyDecision,
    WinnerPicker,
    available_at,
    extend,
    main_chain,
    sample_interval,
)
from .fee_model import (
    FeeScenario,
    arrived_fees,
    claimable_fees,
    constant_inflow,
    load_bundled,
    load_scenario,
)
from .frsc_core import (
    PPM,
    Frsc,
    FrscSet,
    SplitParams,
    effective_window,
    init_genesis,
)
from .learning import LearnerState, choose_arm, initial_state, update
from .strategies import (
    DEFAULT_COMPLIANT,
    FUNCTION_FORK,
    LAZY_FORK,
    PETTY_COMPLIANT,
    StrategySpec,
    View,
    decide,
)

BLOCK_RATE = 1 / 600  # blocks per second, no difficulty retargeting

MEAN_BLOCK_FEES = 5_000_000_000  # 50 BTC, the baseline fee level

# Cap used by the series experiments' full-mempool mode: above the fee
# scenarios' peak rate so it binds only on blocks that take unusually long.
SERIES_BLOCK_CAP = 20_000_000_000

STRATEGY_ORDER = (DEFAULT_COMPLIANT, PETTY_COMPLIANT, LAZY_FORK, FUNCTION_FORK)
UNDERCUTTING_STRATEGIES = (LAZY_FORK, FUNCTION_FORK)


def derive_seed(*parts) -> int:
    """Stable 64-bit sub-seed from a master seed and a label path."""
    data = ":".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big")


# --- exact decimal rendering (CSV must never show float artifacts) ---


def ppm_to_decimal(ppm: int) -> str:
    """Render a ppm ratio as a minimal decimal string (300000 -> '0.3')."""
    whole, frac = divmod(ppm, PPM)
    if frac == 0:
        return str(whole)
    return f"{whole}.{frac:06d}".rstrip("0")


def fraction_to_decimal(value: Fraction, places: int = 6) -> str:
    """Exact half-even rounding of a rational to a fixed-point decimal string."""
    scaled = round(value * 10**places)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10**places)
    return f"{sign}{whole}.{frac:0{places}d}"


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write one CSV file: header, deterministic row order, trailing newline.

    Integers render as exact decimals (never scientific notation); floats use
    shortest round-trip repr; everything else must already be a string.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


# --- per-block series (exp1-exp3) ---


@dataclass(frozen=True, slots=True)
class SeriesRecord:
    """One main-chain block's worth of output for the series experiments."""

    height: int
    found_at: float
    fees_in_mempool: int
    block_value: int
    next_claim: int
    claims: tuple[int, ...]
    balances: tuple[int, ...]


def series_header(n_contracts: int) -> list[str]:
    header = [
        "height",
        "found_at_s",
        "fees_in_mempool_sat",
        "block_value_sat",
        "next_claim_sat",
    ]
    header += [f"claim_c{i + 1}_sat" for i in range(n_contracts)]
    header += [f"nu_c{i + 1}_sat" for i in range(n_contracts)]
    return header


def write_series_csv(records: Sequence[SeriesRecord], n_contracts: int, path) -> None:
    rows = (
        (r.height, r.found_at, r.fees_in_mempool, r.block_value, r.next_claim)
        + r.claims
        + r.balances
        for r in records
    )
    emit_csv(path, series_header(n_contracts), rows)


def run_series(
    scenario: FeeScenario,
    contracts: Optional[FrscSet],
    split: Optional[SplitParams],
    blocks: int,
    seed: int,
) -> list[SeriesRecord]:
    """Honest single-miner chain: no forks, claim everything claimable."""
    if blocks < 1:
        raise ValueError(f"blocks must be >= 1, got {blocks}")
    rng = random.Random(seed)
    tree = BlockTree(genesis_frsc=contracts)
    tip = tree.genesis
    out = []
    for height in range(1, blocks + 1):
        tree.advance(sample_interval(rng, BLOCK_RATE))
        arrived_now = arrived_fees(scenario, tree.now)
        available = available_at(tree, tip, arrived_now)
        claim = claimable_fees(scenario, available)
        tip = extend(tree, 0, StrategyDecision(tip.id, claim), scenario, split)
        out.append(
            SeriesRecord(
                height=height,
                found_at=tip.found_at,
                fees_in_mempool=available,
                block_value=tip.settlement.reward_total,
                next_claim=tip.settlement.next_claim,
                claims=tip.settlement.per_contract_claims,
                balances=tuple(c.balance for c in tip.frsc_after)
                if tip.frsc_after is not None
                else (),
            )
        )
    return out


def _series_scenario(config, default_name: str) -> FeeScenario:
    cap = config.block_cap if config.block_cap is not None else SERIES_BLOCK_CAP
    if config.scenario_path is not None:
        return load_scenario(config.scenario_path, full_mempool=config.full_mempool, block_cap=cap)
    return load_bundled(default_name, full_mempool=config.full_mempool, block_cap=cap)


def _series_blocks(config, default: int) -> int:
    blocks = config.blocks_per_game if config.blocks_per_game is not None else default
    if blocks < 1:
        raise ValueError(f"blocks_per_game must be >= 1, got {blocks}")
    return blocks


EXP1_WINDOWS = (2016, 5600)
EXP1_SPLITS = (500_000, 700_000, 900_000)


def run_exp1(config) -> list[Path]:
    """Single-contract sweep over window length and fee split."""
    out_dir = Path(config.out_dir)
    scenario = _series_scenario(config, "long_term")
    blocks = _series_blocks(config, 30_000)
    paths = []
    for window in EXP1_WINDOWS:
        for c_ppm in EXP1_SPLITS:
            split = SplitParams.from_contract_ppm(c_ppm)
            contracts = init_genesis(MEAN_BLOCK_FEES, split, [(window, PPM)])
            records = run_series(
                scenario, contracts, split, blocks, derive_seed(config.seed, "exp1")
            )
            path = out_dir / f"exp1_window{window}_c{c_ppm}.csv"
            write_series_csv(records, 1, path)
            paths.append(path)
    return paths


EXP2_WINDOWS = (1008, 2016, 4032, 8064)
EXP2_SHARE_VARIANTS = {
    "correlated": (70_000, 140_000, 280_000, 510_000),
    "equal": (250_000, 250_000, 250_000, 250_000),
    "reversed": (510_000, 280_000, 140_000, 70_000),
}


def run_exp2(config) -> list[Path]:
    """Four-contract sweep: fee splits, plus deposit-share distribution variants."""
    out_dir = Path(config.out_dir)
    scenario = _series_scenario(config, "long_term")
    blocks = _series_blocks(config, 30_000)
    runs = [(c_ppm, "correlated") for c_ppm in EXP1_SPLITS]
    runs += [(700_000, "equal"), (700_000, "reversed")]
    paths = []
    for c_ppm, variant in runs:
        shares = EXP2_SHARE_VARIANTS[variant]
        split = SplitParams.from_contract_ppm(c_ppm)
        contracts = init_genesis(MEAN_BLOCK_FEES, split, list(zip(EXP2_WINDOWS, shares)))
        records = run_series(
            scenario, contracts, split, blocks, derive_seed(config.seed, "exp2")
        )
        path = out_dir / f"exp2_c{c_ppm}_rho_{variant}.csv"
        write_series_csv(records, len(EXP2_WINDOWS), path)
        paths.append(path)

        norm_path = out_dir / f"exp2_c{c_ppm}_rho_{variant}_norm.csv"
        header = ["height", "found_at_s"] + [
            f"claim_norm_c{i + 1}_sat" for i in range(len(shares))
        ]
        rows = (
            [r.height, r.found_at]
            + [claim * PPM // share for claim, share in zip(r.claims, shares)]
            for r in records
        )
        emit_csv(norm_path, header, rows)
        paths.append(norm_path)
    return paths


EXP3_SINGLE_SPEC = ((5292, PPM),)
EXP3_MULTI_SPEC = ((1008, 70_000), (2016, 190_000), (4032, 280_000), (8064, 460_000))


def run_exp3(config) -> list[Path]:
    """Equivalent-effective-window comparison: one contract vs four."""
    out_dir = Path(config.out_dir)
    scenario = _series_scenario(config, "triangle")
    blocks = _series_blocks(config, 36_000)
    split = SplitParams.from_contract_ppm(
        config.c_ppm if config.c_ppm is not None else 700_000
    )

    single = init_genesis(MEAN_BLOCK_FEES, split, EXP3_SINGLE_SPEC)
    multi = init_genesis(MEAN_BLOCK_FEES, split, EXP3_MULTI_SPEC)
    if effective_window(single) != effective_window(multi):
        raise ValueError(
            "effective window mismatch: "
            f"{effective_window(single)} vs {effective_window(multi)}"
        )

    seed = derive_seed(config.seed, "exp3")
    single_records = run_series(scenario, single, split, blocks, seed)
    multi_records = run_series(scenario, multi, split, blocks, seed)

    single_path = out_dir / "exp3_single.csv"
    multi_path = out_dir / "exp3_multi.csv"
    write_series_csv(single_records, len(EXP3_SINGLE_SPEC), single_path)
    write_series_csv(multi_records, len(EXP3_MULTI_SPEC), multi_path)

    diff_path = out_dir / "exp3_reldiff.csv"
    rows = []
    for s, m in zip(single_records, multi_records):
        if s.next_claim <= 0:
            raise RuntimeError(f"single-contract payout hit zero at height {s.height}")
        rel = Fraction(m.next_claim - s.next_claim, s.next_claim)
        rows.append(
            (s.height, s.found_at, s.next_claim, m.next_claim, fraction_to_decimal(rel))
        )
    emit_csv(
        diff_path,
        ["height", "found_at_s", "next_claim_single_sat", "next_claim_multi_sat", "rel_diff"],
        rows,
    )
    return [single_path, multi_path, diff_path]


# --- strategy games (exp4) ---


@dataclass(frozen=True, slots=True)
class GameResult:
    """Main-chain accounting for one game."""

    earnings: tuple[int, ...]
    strategy_by_miner: tuple[str, ...]
    orphan_rate: Fraction
    main_chain_length: int
    final_contracts: Optional[FrscSet]
    chain_value: int
    claimed_total: int
    genesis_balance: int


def equal_hash_powers(n: int) -> list[int]:
    """Split one million ppm as evenly as integers allow (remainder to the front)."""
    base, extra = divmod(PPM, n)
    return [base + (1 if i < extra else 0) for i in range(n)]


def play_game(
    rng: random.Random,
    miners: Sequence[Miner],
    scenario: FeeScenario,
    split: Optional[SplitParams],
    genesis_contracts: Optional[FrscSet],
    total_blocks: int,
) -> GameResult:
    """Run one game of ``total_blocks`` mined blocks (orphans included).

    Each block event advances the shared exponential clock, draws the winner
    by hash power, and lets the winner's strategy pick parent and claim.
    Profit is credited from the final longest chain only.
    """
    tree = BlockTree(genesis_frsc=genesis_contracts)
    picker = WinnerPicker(miners)
    for _ in range(total_blocks):
        tree.advance(sample_interval(rng, BLOCK_RATE))
        winner = picker.pick(rng)
        view = View.at_now(tree, scenario, split)
        decision = decide(miners[winner].strategy, view)
        extend(tree, winner, decision, scenario, split)

    earnings = [0] * len(miners)
    chain = main_chain(tree)
    chain_value = 0
    claimed_total = 0
    for block in chain[1:]:
        earnings[block.miner] += block.settlement.reward_total
        chain_value += block.settlement.reward_total
        claimed_total += block.claimed_fees
    tip = chain[-1]
    genesis_balance = genesis_contracts.total_balance() if genesis_contracts else 0
    return GameResult(
        earnings=tuple(earnings),
        strategy_by_miner=tuple(m.strategy.name for m in miners),
        orphan_rate=Fraction(total_blocks - tip.height, total_blocks),
        main_chain_length=tip.height,
        final_contracts=tip.frsc_after,
        chain_value=chain_value,
        claimed_total=claimed_total,
        genesis_balance=genesis_balance,
    )


def strategy_mean_earnings(result: GameResult) -> dict[str, Fraction]:
    """Mean earnings per miner for each strategy present in a game."""
    totals: dict[str, list[int]] = {}
    for miner_earnings, name in zip(result.earnings, result.strategy_by_miner):
        totals.setdefault(name, []).append(miner_earnings)
    return {name: Fraction(sum(v), len(v)) for name, v in totals.items()}


@dataclass(frozen=True, slots=True)
class Exp4Point:
    """Aggregates for one compliant-fraction grid point."""

    fraction_ppm: int
    frsc_enabled: bool
    # strategy -> mean profit in sat per block per unit hash power, over the
    # last fifth of games; strategies never played there are absent.
    mean_profit: dict[str, Fraction]
    mean_orphan_rate: Fraction


@dataclass(frozen=True, slots=True)
class Exp4Config:
    """Plain-data job description for one sweep point (picklable for workers)."""

    master_seed: int
    fraction_ppm: int
    frsc_enabled: bool
    miners: int
    blocks_per_game: int
    games: int
    c_ppm: int
    gamma_ppm: int
    kappa_ppm: int


def _learning_arms(kappa_ppm: int) -> tuple[StrategySpec, ...]:
    return (
        StrategySpec(PETTY_COMPLIANT),
        StrategySpec(LAZY_FORK),
        StrategySpec(FUNCTION_FORK, leave_ppm=kappa_ppm),
    )


def run_exp4_point(job: Exp4Config) -> Exp4Point:
    """Run every game of one (fraction, contracts on/off) sweep point."""
    n = job.miners
    n_compliant = round(n * job.fraction_ppm / PPM)
    powers = equal_hash_powers(n)
    compliant_spec = StrategySpec(DEFAULT_COMPLIANT)
    arms = _learning_arms(job.kappa_ppm)
    gamma = job.gamma_ppm / PPM

    scenario = constant_inflow(MEAN_BLOCK_FEES, 600, full_mempool=False)
    split = SplitParams.from_contract_ppm(job.c_ppm) if job.frsc_enabled else None
    base_contracts = (
        init_genesis(MEAN_BLOCK_FEES, split, [(2016, PPM)]) if job.frsc_enabled else None
    )

    rng = random.Random(derive_seed(job.master_seed, "exp4", job.frsc_enabled, job.fraction_ppm))
    learners: dict[int, LearnerState] = {
        i: initial_state(arms, gamma) for i in range(n_compliant, n)
    }

    window_games = max(1, job.games // 5)
    first_counted = job.games - window_games
    profit_sums: dict[str, Fraction] = {}
    profit_counts: dict[str, int] = {}
    orphan_sum = Fraction(0)
    prev_orphan = Fraction(0)

    for game_index in range(job.games):
        miners = []
        chosen_arms: dict[int, int] = {}
        for i in range(n):
            if i < n_compliant:
                spec = compliant_spec
            else:
                arm = choose_arm(rng, learners[i])
                chosen_arms[i] = arm
                spec = arms[arm]
            miners.append(Miner(id=i, hash_ppm=powers[i], strategy=spec))

        if job.frsc_enabled:
            scale = 1 + prev_orphan
            contracts = FrscSet(
                Frsc(round(c.balance * scale), c.window, c.share_ppm)
                for c in base_contracts
            )
        else:
            contracts = None

        result = play_game(rng, miners, scenario, split, contracts, job.blocks_per_game)
        prev_orphan = result.orphan_rate

        for i, arm in chosen_arms.items():
            learners[i] = update(learners[i], arm, result.earnings[i])

        if game_index >= first_counted:
            orphan_sum += result.orphan_rate
            groups: dict[str, tuple[int, int]] = {}
            for i in range(n):
                name = miners[i].strategy.name
                earned, power = groups.get(name, (0, 0))
                groups[name] = (earned + result.earnings[i], power + powers[i])
            for name, (earned, power) in groups.items():
                rate = Fraction(earned * PPM, power * job.blocks_per_game)
                profit_sums[name] = profit_sums.get(name, Fraction(0)) + rate
                profit_counts[name] = profit_counts.get(name, 0) + 1

    mean_profit = {
        name: profit_sums[name] / profit_counts[name] for name in profit_sums
    }
    return Exp4Point(
        fraction_ppm=job.fraction_ppm,
        frsc_enabled=job.frsc_enabled,
        mean_profit=mean_profit,
        mean_orphan_rate=orphan_sum / window_games,
    )


def crossing_fraction(points: Sequence[Exp4Point]) -> Optional[int]:
    """Smallest grid fraction from which undercutting never out-earns compliance.

    A point qualifies when compliant miners exist and no undercutting
    strategy's mean profit exceeds theirs; the crossing requires every point
    from there up the grid to qualify. The all-compliant point qualifies
    vacuously, so a crossing exists whenever fraction 1.0 is on the grid.
    """

    def qualifies(p: Exp4Point) -> bool:
        compliant = p.mean_profit.get(DEFAULT_COMPLIANT)
        if compliant is None:
            return False
        return not any(
            p.mean_profit.get(s, Fraction(0)) > compliant for s in UNDERCUTTING_STRATEGIES
        )

    ordered = sorted(points, key=lambda p: p.fraction_ppm)
    crossing = None
    for p in reversed(ordered):
        if qualifies(p):
            crossing = p.fraction_ppm
        else:
            break
    return crossing


def _default_jobs() -> int:
    env = os.environ.get("FRSCSIM_JOBS")
    if env:
        return max(1, int(env))
    return max(1, cpu_count() or 1)


def run_exp4_points(jobs: Sequence[Exp4Config], processes: Optional[int] = None) -> list[Exp4Point]:
    """Run sweep points, in parallel when possible; order of results is fixed."""
    if processes is None:
        processes = min(_default_jobs(), len(jobs))
    if processes <= 1 or len(jobs) <= 1:
        return [run_exp4_point(j) for j in jobs]
    with Pool(processes) as pool:
        return pool.map(run_exp4_point, jobs)


def exp4_grid(config) -> list[int]:
    start, stop, step = config.fraction_grid
    if step <= 0:
        raise ValueError(f"fraction_grid step must be > 0, got {ppm_to_decimal(step)}")
    grid = list(range(start, stop + 1, step))
    if not grid:
        raise ValueError("fraction_grid is empty")
    return grid


def run_exp4(config) -> tuple[list[Exp4Point], Optional[int], list[Path]]:
    """Full compliant-fraction sweep for one contracts-on/off mode."""
    out_dir = Path(config.out_dir)
    jobs = [
        Exp4Config(
            master_seed=config.seed,
            fraction_ppm=f,
            frsc_enabled=config.frsc_enabled,
            miners=config.miners,
            blocks_per_game=config.blocks_per_game if config.blocks_per_game is not None else 1000,
            games=config.games,
            c_ppm=config.c_ppm if config.c_ppm is not None else 700_000,
            gamma_ppm=config.gamma_ppm,
            kappa_ppm=config.kappa_ppm,
        )
        for f in exp4_grid(config)
    ]
    points = run_exp4_points(jobs)
    crossing = crossing_fraction(points)

    mode = "frsc" if config.frsc_enabled else "nofrsc"
    summary_path = out_dir / f"exp4_summary_{mode}.csv"
    rows = []
    for p in points:
        for name in STRATEGY_ORDER:
            if name not in p.mean_profit:
                continue
            rows.append(
                (
                    ppm_to_decimal(p.fraction_ppm),
                    p.frsc_enabled,
                    name,
                    round(p.mean_profit[name]),
                    fraction_to_decimal(p.mean_orphan_rate),
                )
            )
    emit_csv(
        summary_path,
        ["compliant_fraction", "frsc_enabled", "strategy", "mean_profit_sat_per_block", "orphan_rate"],
        rows,
    )

    crossing_path = out_dir / f"exp4_crossing_{mode}.csv"
    crossing_rows = [
        (config.frsc_enabled, ppm_to_decimal(crossing) if crossing is not None else "none")
    ]
    emit_csv(crossing_path, ["frsc_enabled", "crossing_fraction"], crossing_rows)
    return points, crossing, [summary_path, crossing_path]
