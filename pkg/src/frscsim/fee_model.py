"""Transaction-fee inflow into the mempool over simulated time.

Fee arrival is a piecewise-constant rate schedule: the total fees that have
ever entered the mempool by time ``t`` is the running integral of that
schedule, floor-rounded to whole satoshi per segment. Rates may be exact
rationals (e.g. 5_000_000_000 sat per 600 s), so the integral is computed in
exact integer arithmetic, never floating point.

Scenario files (one ``start_time,rate`` pair per line, see ``parse_scenario``)
carry integer rates only. The two bundled scenarios are reconstructions of
qualitative fee-evolution shapes (multi-phase rises and falls, and a slow
triangle wave); they are generated from the anchor tables in this module and
are not measured data.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence, Union

Rate = Union[int, Fraction]

SCENARIO_HEADER = "frsc-scenario v1"

# Default per-block fee cap in full-mempool mode: the expected inflow over
# one 600 s block interval at 50 BTC/block.
DEFAULT_BLOCK_CAP = 5_000_000_000

DEFAULT_STEP_S = 600


@dataclass(frozen=True)
class FeeScenario:
    """Immutable fee-arrival schedule plus full-mempool cap settings.

    ``segments`` is an ordered tuple of (start_time_s, rate_sat_per_s); each
    segment's rate applies from its start time until the next segment begins
    (the last one runs forever). When ``full_mempool`` is set, a block may
    claim at most ``block_cap`` satoshi regardless of what has accumulated.
    """

    segments: tuple[tuple[int, Fraction], ...]
    full_mempool: bool
    block_cap: int
    # Precomputed per-segment integral prefix (satoshi arrived at each start).
    _starts: tuple[int, ...]
    _rate_nums: tuple[int, ...]
    _rate_dens: tuple[int, ...]
    _arrived_at_start: tuple[int, ...]

    def __init__(
        self,
        segments: Iterable[tuple[int, Rate]],
        full_mempool: bool = False,
        block_cap: int = DEFAULT_BLOCK_CAP,
    ) -> None:
        normalized = tuple((int(start), Fraction(rate)) for start, rate in segments)
        if not normalized:
            raise ValueError("scenario must have at least one segment")
        if normalized[0][0] != 0:
            raise ValueError(f"first segment must start at 0 s, got {normalized[0][0]}")
        for (a, _), (b, _) in zip(normalized, normalized[1:]):
            if b <= a:
                raise ValueError(f"segment start times must be strictly increasing ({a} then {b})")
        for start, rate in normalized:
            if start < 0:
                raise ValueError(f"segment start time must be >= 0, got {start}")
            if rate < 0:
                raise ValueError(f"inflow rate must be >= 0, got {rate} at {start} s")
        if full_mempool and block_cap <= 0:
            raise ValueError(f"block_cap must be > 0 in full-mempool mode, got {block_cap}")

        starts = tuple(s for s, _ in normalized)
        nums = tuple(r.numerator for _, r in normalized)
        dens = tuple(r.denominator for _, r in normalized)
        prefix = [0]
        for i in range(len(normalized) - 1):
            width = starts[i + 1] - starts[i]
            prefix.append(prefix[i] + nums[i] * width // dens[i])
        object.__setattr__(self, "segments", normalized)
        object.__setattr__(self, "full_mempool", bool(full_mempool))
        object.__setattr__(self, "block_cap", int(block_cap))
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_rate_nums", nums)
        object.__setattr__(self, "_rate_dens", dens)
        object.__setattr__(self, "_arrived_at_start", tuple(prefix))


def arrived_fees(scenario: FeeScenario, t: float) -> int:
    """Total satoshi that have entered the mempool by time ``t``.

    Exact integral of the rate schedule from 0 to t, with each segment's
    contribution floor-rounded; monotone non-decreasing in t.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    k = bisect_right(scenario._starts, t) - 1
    # Exact rational arithmetic on the binary value of t.
    tn, td = t.as_integer_ratio()
    num = scenario._rate_nums[k] * (tn - scenario._starts[k] * td)
    return scenario._arrived_at_start[k] + num // (scenario._rate_dens[k] * td)


def claimable_fees(scenario: FeeScenario, available: int) -> int:
    """Fees a block may claim given what has accumulated on its branch."""
    if available < 0:
        raise ValueError(f"available must be >= 0, got {available}")
    if scenario.full_mempool:
        return min(available, scenario.block_cap)
    return available


def constant_inflow(
    per_block_sat: int,
    block_interval_s: int = 600,
    full_mempool: bool = False,
    block_cap: int = DEFAULT_BLOCK_CAP,
) -> FeeScenario:
    """Scenario with a constant inflow of ``per_block_sat`` every ``block_interval_s``."""
    rate = Fraction(per_block_sat, block_interval_s)
    return FeeScenario([(0, rate)], full_mempool=full_mempool, block_cap=block_cap)


def parse_scenario(
    text: str,
    full_mempool: bool = False,
    block_cap: int = DEFAULT_BLOCK_CAP,
) -> FeeScenario:
    """Parse the scenario file format.

    UTF-8 text; first non-comment line must be the header ``frsc-scenario v1``;
    then one ``start_time_seconds,inflow_satoshi_per_second`` record per line,
    integers only, sorted by time. ``#`` starts a comment line.
    """
    lines = text.splitlines()
    records: list[tuple[int, int]] = []
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != SCENARIO_HEADER:
                raise ValueError(
                    f"line {lineno}: expected header {SCENARIO_HEADER!r}, got {line!r}"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'start_time,rate', got {line!r}")
        try:
            start, rate = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: start time and rate must be integers, got {line!r}")
        records.append((start, rate))
    if not header_seen:
        raise ValueError(f"missing scenario header {SCENARIO_HEADER!r}")
    if not records:
        raise ValueError("scenario file has no rate records")
    return FeeScenario(records, full_mempool=full_mempool, block_cap=block_cap)


def format_scenario(segments: Sequence[tuple[int, int]]) -> str:
    """Render integer-rate segments in the scenario file format."""
    lines = [SCENARIO_HEADER]
    lines.extend(f"{start},{rate}" for start, rate in segments)
    return "\n".join(lines) + "\n"


def load_scenario(
    path, full_mempool: bool = False, block_cap: int = DEFAULT_BLOCK_CAP
) -> FeeScenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), full_mempool=full_mempool, block_cap=block_cap)


def ramp_segments(
    anchors: Sequence[tuple[int, int]], step_s: int = DEFAULT_STEP_S
) -> list[tuple[int, int]]:
    """Approximate a piecewise-linear rate profile by a staircase of constant segments.

    ``anchors`` are (time_s, rate_sat_per_s) points; between consecutive
    anchors the rate is linearly interpolated and sampled every ``step_s``
    seconds (rounded to integer satoshi per second). Consecutive equal rates
    collapse into a single segment, so plateaus stay one record.
    """
    if len(anchors) < 2:
        raise ValueError("need at least two anchors")
    if step_s <= 0:
        raise ValueError(f"step_s must be > 0, got {step_s}")
    out: list[tuple[int, int]] = []

    def emit(start: int, rate: int) -> None:
        if out and out[-1][1] == rate:
            return
        out.append((start, rate))

    for (t0, r0), (t1, r1) in zip(anchors, anchors[1:]):
        if t1 <= t0:
            raise ValueError(f"anchor times must be strictly increasing ({t0} then {t1})")
        t = t0
        while t < t1:
            rate = round(r0 + (r1 - r0) * (t - t0) / (t1 - t0))
            emit(t, rate)
            t += step_s
    emit(anchors[-1][0], anchors[-1][1])
    return out


def _btc_per_block_rate(btc: float, block_interval_s: int = 600) -> int:
    return round(btc * 100_000_000 / block_interval_s)


def _block_anchor(block: int, btc_per_block: float) -> tuple[int, int]:
    return block * 600, _btc_per_block_rate(btc_per_block)


# Multi-phase rises and falls around a 50 BTC/block baseline, ~30 000 blocks.
LONG_TERM_ANCHORS: tuple[tuple[int, int], ...] = tuple(
    _block_anchor(block, btc)
    for block, btc in [
        (0, 50),
        (3_000, 50),
        (6_000, 120),
        (8_000, 120),
        (10_000, 15),
        (12_000, 15),
        (15_000, 80),
        (17_000, 80),
        (20_000, 5),
        (22_000, 5),
        (24_000, 150),
        (26_000, 150),
        (30_000, 50),
    ]
)

# One slow wave with extreme changes, ~36 000 blocks. Each extreme sits at
# the END of a long era (a 1 BTC notch closing a 13 000-block low era; the
# peak of a slight upward drift closing a 16 000-block high era), so the
# scheduled extremes are reached only after the averaging windows have aged.
TRIANGLE_ANCHORS: tuple[tuple[int, int], ...] = tuple(
    _block_anchor(block, btc)
    for block, btc in [
        (0, 50),
        (2_000, 50),
        (3_000, 2),
        (16_000, 2),
        (16_050, 1),
        (16_650, 1),
        (16_700, 2),
        (16_750, 50),
        (17_700, 150),
        (33_700, 155),
        (34_700, 50),
        (36_000, 50),
    ]
)


def scheduled_extreme_times(anchors: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Times (s) at which an anchor profile hits its lowest and highest rate.

    Ties resolve to the latest anchor, i.e. the moment the extreme era ends.
    """
    min_t = max(t for t, r in anchors if r == min(r for _, r in anchors))
    max_t = max(t for t, r in anchors if r == max(r for _, r in anchors))
    return min_t, max_t

BUNDLED_ANCHORS = {
    "long_term": LONG_TERM_ANCHORS,
    "triangle": TRIANGLE_ANCHORS,
}


def load_bundled(
    name: str, full_mempool: bool = False, block_cap: int = DEFAULT_BLOCK_CAP
) -> FeeScenario:
    """Load one of the bundled scenario files by name (``long_term`` or ``triangle``)."""
    if name not in BUNDLED_ANCHORS:
        raise ValueError(f"unknown bundled scenario {name!r}; options: {sorted(BUNDLED_ANCHORS)}")
    text = resources.files("frscsim.scenarios").joinpath(f"{name}.scn").read_text("utf-8")
    return parse_scenario(text, full_mempool=full_mempool, block_cap=block_cap)
