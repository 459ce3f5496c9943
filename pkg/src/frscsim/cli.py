"""Command-line entry point.

Subcommands select an experiment (exp1..exp4) or a custom single-chain run.
Every knob can come from a ``key = value`` config file, with command-line
flags taking precedence over the file and the file over built-in defaults.
All ratios are parts-per-million integers on the wire, so configs parse
exactly; contract specs are repeated ``frsc = lambda,rho_ppm`` lines whose
order is significant (deposit rounding goes to the last one).

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .frsc_core import PPM, SplitParams, init_genesis
from . import experiments
from .experiments import (
    MEAN_BLOCK_FEES,
    run_exp1,
    run_exp2,
    run_exp3,
    run_exp4,
    run_series,
    write_series_csv,
)
from .fee_model import DEFAULT_BLOCK_CAP, load_bundled, load_scenario

SUBCOMMANDS = ("exp1", "exp2", "exp3", "exp4", "run")

DEFAULT_SEED = 42
DEFAULT_OUT_DIR = "./out"
DEFAULT_MINERS = 20
DEFAULT_GAMES = 2000
DEFAULT_C_PPM = 700_000
DEFAULT_GAMMA_PPM = 100_000
DEFAULT_KAPPA_PPM = 500_000
DEFAULT_FRACTION_GRID = (0, PPM, 50_000)  # 0 .. 1 in steps of 0.05


class ConfigError(ValueError):
    """Invalid configuration; message always names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description."""

    subcommand: str
    seed: int = DEFAULT_SEED
    out_dir: str = DEFAULT_OUT_DIR
    scenario_path: Optional[str] = None
    frsc_specs: tuple[tuple[int, int], ...] = ((2016, PPM),)
    c_ppm: int = DEFAULT_C_PPM
    miners: int = DEFAULT_MINERS
    blocks_per_game: Optional[int] = None
    games: int = DEFAULT_GAMES
    fraction_grid: tuple[int, int, int] = DEFAULT_FRACTION_GRID
    full_mempool: bool = True
    block_cap: Optional[int] = None
    gamma_ppm: int = DEFAULT_GAMMA_PPM
    kappa_ppm: int = DEFAULT_KAPPA_PPM
    frsc_enabled: bool = True

    def __post_init__(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"subcommand: must be one of {SUBCOMMANDS}, got {self.subcommand!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: must be a 64-bit unsigned integer, got {self.seed}")
        for key, value in (("c", self.c_ppm), ("gamma", self.gamma_ppm), ("kappa", self.kappa_ppm)):
            if not 0 <= value <= PPM:
                raise ConfigError(f"{key}: must be in [0, {PPM}] ppm, got {value}")
        if not self.frsc_specs:
            raise ConfigError("frsc: at least one contract spec is required")
        for window, share in self.frsc_specs:
            if window < 1:
                raise ConfigError(f"frsc: lambda must be >= 1, got {window}")
            if not 0 <= share <= PPM:
                raise ConfigError(f"frsc: rho_ppm must be in [0, {PPM}], got {share}")
        share_sum = sum(s for _, s in self.frsc_specs)
        if share_sum != PPM:
            raise ConfigError(f"frsc: rho values must sum to exactly {PPM} ppm, got {share_sum}")
        if self.miners < 1:
            raise ConfigError(f"miners: must be >= 1, got {self.miners}")
        if self.blocks_per_game is not None and self.blocks_per_game < 1:
            raise ConfigError(f"blocks: must be >= 1, got {self.blocks_per_game}")
        if self.games < 1:
            raise ConfigError(f"games: must be >= 1, got {self.games}")
        start, stop, step = self.fraction_grid
        if not (0 <= start <= stop <= PPM):
            raise ConfigError(
                f"fraction_grid: need 0 <= start <= stop <= 1, got start={start} stop={stop} (ppm)"
            )
        if step < 1:
            raise ConfigError(f"fraction_grid: step must be > 0, got {step} (ppm)")
        if self.block_cap is not None and self.block_cap <= 0:
            raise ConfigError(f"block_cap: must be > 0, got {self.block_cap}")
        if self.scenario_path is not None and not Path(self.scenario_path).is_file():
            raise ConfigError(f"scenario: file not found: {self.scenario_path}")


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {raw!r}")


def _parse_frsc_spec(raw: str) -> tuple[int, int]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise ConfigError(f"frsc: expected 'lambda,rho_ppm', got {raw!r}")
    return _parse_int("frsc", parts[0]), _parse_int("frsc", parts[1])


def _parse_fraction_grid(raw: str) -> tuple[int, int, int]:
    parts = raw.split(",")
    if len(parts) != 3:
        raise ConfigError(f"fraction_grid: expected 'start,stop,step', got {raw!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"fraction_grid: expected numbers, got {raw!r}")
    start, stop, step = (round(v * PPM) for v in values)
    return start, stop, step


_FILE_KEYS = {
    "seed",
    "out_dir",
    "scenario",
    "c",
    "frsc",
    "miners",
    "blocks",
    "games",
    "full_mempool",
    "block_cap",
    "gamma",
    "kappa",
    "fraction_grid",
    "frsc_enabled",
}


def parse_config_file(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment; frsc lines accumulate in order."""
    out: dict = {}
    frsc_specs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FILE_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key == "frsc":
            frsc_specs.append(_parse_frsc_spec(value))
        elif key in ("seed", "miners", "blocks", "games", "block_cap", "c", "gamma", "kappa"):
            out[key] = _parse_int(key, value)
        elif key in ("full_mempool", "frsc_enabled"):
            out[key] = _parse_bool(key, value)
        elif key == "fraction_grid":
            out[key] = _parse_fraction_grid(value)
        else:
            out[key] = value
    if frsc_specs:
        out["frsc"] = tuple(frsc_specs)
    return out


def build_argument_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frscsim",
        description="Proof-of-work mining simulator with fee-redistribution contracts",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir")
    parser.add_argument("--config")
    parser.add_argument("--scenario")
    parser.add_argument("--c", type=int, help="contract share of block fees, ppm")
    parser.add_argument(
        "--frsc", action="append", metavar="LAMBDA,RHO_PPM", help="contract spec (repeatable)"
    )
    parser.add_argument("--miners", type=int)
    parser.add_argument("--blocks", type=int)
    parser.add_argument("--games", type=int)
    parser.add_argument("--full-mempool", action="store_true", default=None)
    parser.add_argument("--block-cap", type=int)
    parser.add_argument("--gamma", type=int, help="bandit exploration rate, ppm")
    parser.add_argument("--kappa", type=int, help="function-fork leave fraction, ppm")
    parser.add_argument("--fraction-grid", metavar="START,STOP,STEP")
    parser.add_argument("--no-frsc", action="store_true", default=None)
    return parser


def parse_config(args: Sequence[str], config_text: Optional[str] = None) -> RunConfig:
    """Build a validated RunConfig: flags override file values override defaults."""
    namespace = build_argument_parser().parse_args(args)

    if config_text is None and namespace.config is not None:
        path = Path(namespace.config)
        if not path.is_file():
            raise ConfigError(f"config: file not found: {namespace.config}")
        config_text = path.read_text(encoding="utf-8")
    file_values = parse_config_file(config_text) if config_text is not None else {}

    def pick(flag_value, file_key: str, default):
        if flag_value is not None:
            return flag_value
        if file_key in file_values:
            return file_values[file_key]
        return default

    frsc_flag = tuple(_parse_frsc_spec(s) for s in namespace.frsc) if namespace.frsc else None
    grid_flag = _parse_fraction_grid(namespace.fraction_grid) if namespace.fraction_grid else None
    frsc_enabled_flag = False if namespace.no_frsc else None

    return RunConfig(
        subcommand=namespace.subcommand,
        seed=pick(namespace.seed, "seed", DEFAULT_SEED),
        out_dir=pick(namespace.out_dir, "out_dir", DEFAULT_OUT_DIR),
        scenario_path=pick(namespace.scenario, "scenario", None),
        frsc_specs=pick(frsc_flag, "frsc", ((2016, PPM),)),
        c_ppm=pick(namespace.c, "c", DEFAULT_C_PPM),
        miners=pick(namespace.miners, "miners", DEFAULT_MINERS),
        blocks_per_game=pick(namespace.blocks, "blocks", None),
        games=pick(namespace.games, "games", DEFAULT_GAMES),
        fraction_grid=pick(grid_flag, "fraction_grid", DEFAULT_FRACTION_GRID),
        full_mempool=pick(namespace.full_mempool, "full_mempool", True),
        block_cap=pick(namespace.block_cap, "block_cap", None),
        gamma_ppm=pick(namespace.gamma, "gamma", DEFAULT_GAMMA_PPM),
        kappa_ppm=pick(namespace.kappa, "kappa", DEFAULT_KAPPA_PPM),
        frsc_enabled=pick(frsc_enabled_flag, "frsc_enabled", True),
    )


def run_custom(config: RunConfig) -> list[Path]:
    """Single honest-chain run over an arbitrary scenario and contract set."""
    cap = config.block_cap if config.block_cap is not None else DEFAULT_BLOCK_CAP
    if config.scenario_path is not None:
        scenario = load_scenario(
            config.scenario_path, full_mempool=config.full_mempool, block_cap=cap
        )
    else:
        scenario = load_bundled("long_term", full_mempool=config.full_mempool, block_cap=cap)
    blocks = config.blocks_per_game if config.blocks_per_game is not None else 30_000

    if config.frsc_enabled:
        split = SplitParams.from_contract_ppm(config.c_ppm)
        contracts = init_genesis(MEAN_BLOCK_FEES, split, config.frsc_specs)
        n_contracts = len(config.frsc_specs)
    else:
        split = None
        contracts = None
        n_contracts = 0

    records = run_series(
        scenario, contracts, split, blocks, experiments.derive_seed(config.seed, "run")
    )
    path = Path(config.out_dir) / "run_series.csv"
    write_series_csv(records, n_contracts, path)
    return [path]


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_config(list(argv) if argv is not None else sys.argv[1:])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if config.subcommand == "exp1":
            paths = run_exp1(config)
        elif config.subcommand == "exp2":
            paths = run_exp2(config)
        elif config.subcommand == "exp3":
            paths = run_exp3(config)
        elif config.subcommand == "exp4":
            _, crossing, paths = run_exp4(config)
            label = experiments.ppm_to_decimal(crossing) if crossing is not None else "none"
            print(f"crossing fraction: {label}")
        else:
            paths = run_custom(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
