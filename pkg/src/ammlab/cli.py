"""Scenario-driven command line.

``ammlab run <scenario.json>`` reads a declarative scenario — pool
definitions plus an ordered action list — executes it, and writes CSV series
files and a plain-text transition-receipt log. ``ammlab validate`` reports
every scenario problem without executing anything. Output is deterministic:
identical scenarios produce byte-identical files, regardless of
``--parallel`` degree (grid points are pure functions evaluated in grid
order).

Exit codes: 0 success, 1 parse error, 2 validation error (or a domain error
hit while executing), 3 solver failure (partial outputs are kept and a
manifest of failed points is written).

Scenario schema (JSON object):

    {
      "output": {"stem": "demo", "directory": "out"},     # both optional
      "pools": [
        {"id": "uni", "protocol": "uniswap", "reserves": [100, 100]},
        {"id": "bal", "protocol": "balancer", "reserves": [100, 100],
         "weights": [0.8, 0.2]},
        {"id": "crv", "protocol": "curve", "reserves": [100, 100],
         "amplification": 10},
        {"id": "ddo", "protocol": "dodo", "reserves": [100, 100],
         "amplification": 0.5, "oracle_price": 1.0, "targets": [100, 100]}
      ],
      "actions": [
        {"action": "swap", "pool": "uni", "input_asset": 0,
         "output_asset": 1, "amount": 10},
        {"action": "add_liquidity", "pool": "uni", "fraction": 0.1},
        {"action": "slippage_curve", "pool": "uni"},
        {"action": "divergence_curve", "pool": "bal", "asset": 1},
        {"action": "cross_section", "pool": "crv"},
        {"action": "compare", "pools": ["uni", "bal", "crv", "ddo"],
         "kind": "slippage"}
      ]
    }

Grids are either explicit strictly increasing arrays or
``{"start": a, "stop": b, "points": n, "spacing": "log"|"linear"}``
(spacing defaults to "log"). ``sushiswap`` is mechanically ``uniswap``;
``bancor`` is mechanically ``balancer``. Relative ``output.directory``
resolves against the scenario file's directory; ``--out`` (which overrides
it) resolves against the working directory.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import (
    SeriesKind,
    conservation_cross_section,
    divergence_curve,
    linear_grid,
    log_grid,
    slippage_curve,
)
from .core import (
    PoolState,
    add_liquidity_proportional,
    apply_swap,
    bancor_pool,
    pmm_pool,
    stableswap_pool,
    sushiswap_pool,
    uniswap_pool,
    weighted_pool,
)
from .errors import AmmError, ConvergenceFailure, NoSolution

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

_ID_PATTERN = re.compile(r"^[A-Za-z0-9_-]+$")
_PROTOCOLS = ("uniswap", "sushiswap", "balancer", "bancor", "curve", "dodo")
_KINDS = {
    "slippage": SeriesKind.SLIPPAGE,
    "divergence_loss": SeriesKind.DIVERGENCE_LOSS,
    "cross_section": SeriesKind.CONSERVATION_CROSS_SECTION,
}
_POOL_KEYS = {
    "uniswap": {"id", "protocol", "reserves"},
    "sushiswap": {"id", "protocol", "reserves"},
    "balancer": {"id", "protocol", "reserves", "weights"},
    "bancor": {"id", "protocol", "reserves", "weights"},
    "curve": {"id", "protocol", "reserves", "amplification"},
    "dodo": {"id", "protocol", "reserves", "amplification", "oracle_price", "targets"},
}
_ACTION_KEYS = {
    "swap": {"action", "pool", "input_asset", "output_asset", "amount"},
    "add_liquidity": {"action", "pool", "fraction"},
    "slippage_curve": {"action", "pool", "input_asset", "output_asset", "grid"},
    "divergence_curve": {"action", "pool", "asset", "grid"},
    "cross_section": {"action", "pool", "input_asset", "output_asset", "grid"},
    "compare": {"action", "pools", "kind", "input_asset", "output_asset", "grid"},
}


def _fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double exactly."""
    return format(float(x), ".17g")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_index(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


# ---------------------------------------------------------------------------
# validation


def _resolve_grid(spec, where: str, problems: list[str]):
    """Turn a grid spec (array or start/stop/points object) into a tuple,
    collecting problems; returns None when the spec is absent or bad."""
    if spec is None:
        return None
    if isinstance(spec, list):
        if len(spec) == 0:
            problems.append(f"{where}: grid array is empty")
            return None
        if not all(_is_number(v) for v in spec):
            problems.append(f"{where}: grid values must be finite numbers")
            return None
        values = tuple(float(v) for v in spec)
        if any(b <= a for a, b in zip(values, values[1:])):
            problems.append(f"{where}: grid values must be strictly increasing")
            return None
        return values
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "points", "spacing"}
        if unknown:
            problems.append(f"{where}: unknown grid keys {sorted(unknown)}")
            return None
        if not (_is_number(spec.get("start")) and _is_number(spec.get("stop"))):
            problems.append(f"{where}: grid start/stop must be finite numbers")
            return None
        points = spec.get("points")
        if not (_is_index(points) and points >= 2):
            problems.append(f"{where}: grid points must be an integer >= 2")
            return None
        spacing = spec.get("spacing", "log")
        if spacing not in ("log", "linear"):
            problems.append(f"{where}: grid spacing must be 'log' or 'linear'")
            return None
        try:
            build = log_grid if spacing == "log" else linear_grid
            return build(float(spec["start"]), float(spec["stop"]), points)
        except ValueError as exc:
            problems.append(f"{where}: {exc}")
            return None
    problems.append(f"{where}: grid must be an array or a start/stop/points object")
    return None


def _validate_pool(defn, where: str, problems: list[str]):
    """Field checks for one pool definition; returns (id, protocol, n_assets)
    with None entries for whatever failed."""
    if not isinstance(defn, dict):
        problems.append(f"{where}: pool definition must be an object")
        return None, None, None
    pid = defn.get("id")
    if not (isinstance(pid, str) and _ID_PATTERN.match(pid)):
        problems.append(f"{where}: pool id must match [A-Za-z0-9_-]+, got {pid!r}")
        pid = None
    protocol = defn.get("protocol")
    if protocol not in _PROTOCOLS:
        problems.append(
            f"{where}: unknown protocol {protocol!r} (expected one of {', '.join(_PROTOCOLS)})"
        )
        return pid, None, None
    unknown = set(defn) - _POOL_KEYS[protocol]
    if unknown:
        problems.append(f"{where}: unknown keys for {protocol}: {sorted(unknown)}")
    n = None
    reserves = defn.get("reserves")
    if not (
        isinstance(reserves, list)
        and len(reserves) >= 2
        and all(_is_number(r) and r > 0 for r in reserves)
    ):
        problems.append(f"{where}: reserves must be a list of >= 2 positive numbers")
    else:
        n = len(reserves)
        if protocol in ("uniswap", "sushiswap", "dodo") and n != 2:
            problems.append(f"{where}: {protocol} pools hold exactly two assets")
    if protocol in ("balancer", "bancor"):
        weights = defn.get("weights")
        if not (
            isinstance(weights, list)
            and all(_is_number(w) and 0 < w < 1 for w in weights)
        ):
            problems.append(f"{where}: weights must be a list of numbers in (0, 1)")
        else:
            if n is not None and len(weights) != n:
                problems.append(f"{where}: one weight per asset required")
            if abs(math.fsum(float(w) for w in weights) - 1.0) > 1e-12:
                problems.append(f"{where}: weights must sum to 1")
    if protocol == "curve":
        a = defn.get("amplification")
        if not (_is_number(a) and a > 0):
            problems.append(f"{where}: amplification must be a positive number")
    if protocol == "dodo":
        a = defn.get("amplification")
        if not (_is_number(a) and 0 < a <= 1):
            problems.append(f"{where}: amplification must lie in (0, 1]")
        p = defn.get("oracle_price")
        if not (_is_number(p) and p > 0):
            problems.append(f"{where}: oracle_price must be a positive number")
        targets = defn.get("targets")
        if targets is not None and not (
            isinstance(targets, list)
            and len(targets) == 2
            and all(_is_number(t) and t > 0 for t in targets)
        ):
            problems.append(f"{where}: targets must be a list of two positive numbers")
    return pid, protocol, n


def _build_pool(defn) -> PoolState:
    """Construct the PoolState for a field-validated definition."""
    protocol = defn["protocol"]
    reserves = [float(r) for r in defn["reserves"]]
    if protocol == "uniswap":
        return uniswap_pool(reserves[0], reserves[1])
    if protocol == "sushiswap":
        return sushiswap_pool(reserves[0], reserves[1])
    if protocol == "balancer":
        return weighted_pool(reserves, [float(w) for w in defn["weights"]])
    if protocol == "bancor":
        return bancor_pool(reserves, [float(w) for w in defn["weights"]])
    if protocol == "curve":
        return stableswap_pool(reserves, float(defn["amplification"]))
    targets = defn.get("targets", reserves)
    return pmm_pool(
        float(targets[0]),
        float(targets[1]),
        float(defn["oracle_price"]),
        float(defn["amplification"]),
        reserves=reserves,
    )


def validate_scenario_data(data) -> list[str]:
    """Every problem in a parsed scenario document, without executing it."""
    problems: list[str] = []
    if not isinstance(data, dict):
        return ["scenario root must be a JSON object"]
    unknown = set(data) - {"output", "pools", "actions"}
    if unknown:
        problems.append(f"unknown top-level keys: {sorted(unknown)}")
    output = data.get("output", {})
    if not isinstance(output, dict):
        problems.append("output must be an object")
    else:
        bad = set(output) - {"stem", "directory"}
        if bad:
            problems.append(f"output: unknown keys {sorted(bad)}")
        stem = output.get("stem")
        if stem is not None and not (isinstance(stem, str) and _ID_PATTERN.match(stem)):
            problems.append(f"output: stem must match [A-Za-z0-9_-]+, got {stem!r}")
        directory = output.get("directory")
        if directory is not None and not isinstance(directory, str):
            problems.append("output: directory must be a string")

    pools = data.get("pools")
    info: dict[str, tuple[str, int | None]] = {}
    if not isinstance(pools, list):
        problems.append("pools must be an array")
        pools = []
    for k, defn in enumerate(pools):
        where = f"pools[{k}]"
        before = len(problems)
        pid, protocol, n = _validate_pool(defn, where, problems)
        if pid is not None:
            if pid in info:
                problems.append(f"{where}: duplicate pool id {pid!r}")
            elif protocol is not None:
                info[pid] = (protocol, n)
                if len(problems) == before:
                    try:
                        _build_pool(defn)
                    except Exception as exc:
                        problems.append(f"{where}: {exc}")

    def check_ref(pid, where) -> tuple[str, int | None] | None:
        if not isinstance(pid, str) or pid not in info:
            problems.append(f"{where}: references undefined pool {pid!r}")
            return None
        return info[pid]

    def check_pair(act, where, n) -> None:
        i, o = act.get("input_asset", 0), act.get("output_asset", 1)
        for name, v in (("input_asset", i), ("output_asset", o)):
            if not _is_index(v):
                problems.append(f"{where}: {name} must be an integer")
                return
        if i == o:
            problems.append(f"{where}: input and output asset must differ")
        if n is not None:
            for name, v in (("input_asset", i), ("output_asset", o)):
                if not 0 <= v < n:
                    problems.append(f"{where}: {name} {v} out of range for {n} assets")

    actions = data.get("actions")
    if not isinstance(actions, list):
        problems.append("actions must be an array")
        actions = []
    for k, act in enumerate(actions):
        where = f"actions[{k}]"
        if not isinstance(act, dict):
            problems.append(f"{where}: action must be an object")
            continue
        name = act.get("action")
        if name not in _ACTION_KEYS:
            problems.append(
                f"{where}: unknown action {name!r} (expected one of {', '.join(_ACTION_KEYS)})"
            )
            continue
        unknown = set(act) - _ACTION_KEYS[name]
        if unknown:
            problems.append(f"{where}: unknown keys for {name}: {sorted(unknown)}")
        if name == "compare":
            pids = act.get("pools")
            if not isinstance(pids, list):
                problems.append(f"{where}: pools must be an array of pool ids")
                pids = []
            refs = [check_ref(pid, where) for pid in pids]
            if len(set(map(str, pids))) != len(pids):
                problems.append(f"{where}: duplicate pool ids in compare")
            kind = act.get("kind", "slippage")
            if kind not in _KINDS:
                problems.append(
                    f"{where}: unknown kind {kind!r} (expected one of {', '.join(_KINDS)})"
                )
                continue
            ns = [ref[1] for ref in refs if ref is not None]
            check_pair(act, where, min(ns) if ns else None)
            if kind == "divergence_loss":
                if act.get("output_asset", 1) == 0:
                    problems.append(
                        f"{where}: asset 0 is the numeraire and cannot be the appreciating asset"
                    )
                for pid, ref in zip(pids, refs):
                    if ref is not None and ref[0] == "dodo":
                        problems.append(
                            f"{where}: divergence loss does not apply to dodo pool {pid!r}"
                        )
            grid = _resolve_grid(act.get("grid"), where, problems)
            _check_grid_domain(grid, _KINDS[kind], where, problems)
            continue
        ref = check_ref(act.get("pool"), where)
        n = ref[1] if ref is not None else None
        if name == "swap":
            check_pair(act, where, n)
            if not _is_number(act.get("amount")):
                problems.append(f"{where}: amount must be a finite number")
        elif name == "add_liquidity":
            fraction = act.get("fraction")
            if not _is_number(fraction) or fraction <= -1:
                problems.append(f"{where}: fraction must be a finite number > -1")
        elif name == "slippage_curve":
            check_pair(act, where, n)
            grid = _resolve_grid(act.get("grid"), where, problems)
            _check_grid_domain(grid, SeriesKind.SLIPPAGE, where, problems)
        elif name == "divergence_curve":
            asset = act.get("asset", 1)
            if not _is_index(asset):
                problems.append(f"{where}: asset must be an integer")
            elif asset == 0:
                problems.append(
                    f"{where}: asset 0 is the numeraire and cannot be the appreciating asset"
                )
            elif n is not None and not 0 <= asset < n:
                problems.append(f"{where}: asset {asset} out of range for {n} assets")
            if ref is not None and ref[0] == "dodo":
                problems.append(f"{where}: divergence loss does not apply to dodo pools")
            grid = _resolve_grid(act.get("grid"), where, problems)
            _check_grid_domain(grid, SeriesKind.DIVERGENCE_LOSS, where, problems)
        elif name == "cross_section":
            check_pair(act, where, n)
            grid = _resolve_grid(act.get("grid"), where, problems)
            _check_grid_domain(grid, SeriesKind.CONSERVATION_CROSS_SECTION, where, problems)
    return problems


def _check_grid_domain(grid, kind: SeriesKind, where: str, problems: list[str]) -> None:
    if grid is None:
        return
    if kind is SeriesKind.SLIPPAGE:
        if not all(0.0 < g <= 0.95 for g in grid):
            problems.append(f"{where}: slippage grid values must lie in (0, 0.95]")
    elif kind is SeriesKind.DIVERGENCE_LOSS:
        if not all(g > -1.0 for g in grid):
            problems.append(f"{where}: divergence grid values must exceed -1")
    else:
        if not all(g > 0.0 for g in grid):
            problems.append(f"{where}: cross-section grid values must be positive")


def validate_scenario(path) -> list[str]:
    """Parse the scenario file and return every validation problem."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return validate_scenario_data(data)


# ---------------------------------------------------------------------------
# execution


def _series_csv(series) -> str:
    lines = ["grid,value,pool,protocol,hyperparameters"]
    for x, y in zip(series.x_values, series.y_values):
        lines.append(
            f"{_fmt(x)},{_fmt(y)},{series.pool_id},{series.protocol},{series.hyperparameters}"
        )
    return "\n".join(lines) + "\n"


def _series_failures(series, idx: int) -> list[str]:
    return [
        f"action {idx:03d} {series.kind.value} pool={series.pool_id} "
        f"point={k} x={series.x_values[k]!r}: {msg}"
        for k, msg in series.failures
    ]


def _execute(data: dict, parallel: int):
    """Run a validated scenario; returns (receipt lines, [(csv name, csv
    content)], manifest lines, exit code, fatal message or None)."""
    states: dict[str, PoolState] = {}
    labels: dict[str, str] = {}
    for defn in data.get("pools", []):
        states[defn["id"]] = _build_pool(defn)
        labels[defn["id"]] = defn["protocol"]

    receipts: list[str] = []
    csvs: list[tuple[str, str]] = []
    manifest: list[str] = []
    exit_code = EXIT_OK
    fatal = None

    executor = ThreadPoolExecutor(max_workers=parallel) if parallel > 1 else None
    point_map = executor.map if executor is not None else map
    try:
        for idx, act in enumerate(data.get("actions", [])):
            name = act["action"]
            try:
                if name == "swap":
                    pid = act["pool"]
                    state, outcome, receipt = apply_swap(
                        states[pid],
                        act.get("input_asset", 0),
                        act.get("output_asset", 1),
                        float(act["amount"]),
                    )
                    states[pid] = state
                    check = receipt.checks[0]
                    receipts.append(
                        f"action {idx:03d} swap pool={pid}"
                        f" input_asset={outcome.input_asset} output_asset={outcome.output_asset}"
                        f" x_in={outcome.amount_in!r} x_out={outcome.amount_out!r}"
                        f" kind={receipt.kind.value} rule={check.rule}"
                        f" deviation={check.deviation!r} tolerance={check.tolerance!r}"
                        f" passed={'yes' if check.passed else 'no'}"
                    )
                elif name == "add_liquidity":
                    pid = act["pool"]
                    state, receipt = add_liquidity_proportional(
                        states[pid], float(act["fraction"])
                    )
                    states[pid] = state
                    check = receipt.checks[0]
                    receipts.append(
                        f"action {idx:03d} add_liquidity pool={pid}"
                        f" fraction={float(act['fraction'])!r}"
                        f" kind={receipt.kind.value} rule={check.rule}"
                        f" deviation={check.deviation!r} tolerance={check.tolerance!r}"
                        f" passed={'yes' if check.passed else 'no'}"
                    )
                elif name == "compare":
                    kind = _KINDS[act.get("kind", "slippage")]
                    grid = _resolve_grid(act.get("grid"), "", [])
                    for pid in act["pools"]:
                        series = _run_curve(
                            kind, states[pid], act, grid, pid, labels[pid], point_map
                        )
                        if series.failures:
                            manifest.extend(_series_failures(series, idx))
                            exit_code = EXIT_SOLVER
                        csvs.append(
                            (f"a{idx:03d}_{series.kind.value}_{pid}.csv", _series_csv(series))
                        )
                else:
                    kind = {
                        "slippage_curve": SeriesKind.SLIPPAGE,
                        "divergence_curve": SeriesKind.DIVERGENCE_LOSS,
                        "cross_section": SeriesKind.CONSERVATION_CROSS_SECTION,
                    }[name]
                    pid = act["pool"]
                    grid = _resolve_grid(act.get("grid"), "", [])
                    series = _run_curve(
                        kind, states[pid], act, grid, pid, labels[pid], point_map
                    )
                    if series.failures:
                        manifest.extend(_series_failures(series, idx))
                        exit_code = EXIT_SOLVER
                    csvs.append(
                        (f"a{idx:03d}_{series.kind.value}_{pid}.csv", _series_csv(series))
                    )
            except (NoSolution, ConvergenceFailure) as exc:
                manifest.append(f"action {idx:03d} {name}: {exc}")
                return receipts, csvs, manifest, EXIT_SOLVER, None
            except AmmError as exc:
                fatal = f"action {idx:03d} {name}: {exc}"
                return receipts, csvs, manifest, EXIT_VALIDATION, fatal
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    return receipts, csvs, manifest, exit_code, fatal


def _run_curve(kind, state, act, grid, pool_id, protocol, point_map):
    if kind is SeriesKind.SLIPPAGE:
        return slippage_curve(
            state,
            act.get("input_asset", 0),
            act.get("output_asset", 1),
            grid,
            pool_id=pool_id,
            protocol=protocol,
            point_map=point_map,
        )
    if kind is SeriesKind.DIVERGENCE_LOSS:
        asset = act.get("asset", act.get("output_asset", 1))
        return divergence_curve(
            state, asset, grid, pool_id=pool_id, protocol=protocol, point_map=point_map
        )
    return conservation_cross_section(
        state,
        act.get("input_asset", 0),
        act.get("output_asset", 1),
        grid,
        pool_id=pool_id,
        protocol=protocol,
        point_map=point_map,
    )


def run_scenario(path, out_dir=None, parallel: int = 1) -> int:
    """Execute a scenario file end to end; returns the process exit code."""
    scenario_path = Path(path)
    try:
        with open(scenario_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot parse scenario: {exc}", file=sys.stderr)
        return EXIT_PARSE
    problems = validate_scenario_data(data)
    if problems:
        for problem in problems:
            print(problem, file=sys.stderr)
        return EXIT_VALIDATION
    if parallel < 1:
        print("--parallel must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION

    output = data.get("output", {})
    stem = output.get("stem", scenario_path.stem)
    if out_dir is not None:
        directory = Path(out_dir)
    elif "directory" in output:
        directory = Path(output["directory"])
        if not directory.is_absolute():
            directory = scenario_path.parent / directory
    else:
        directory = Path.cwd()

    receipts, csvs, manifest, code, fatal = _execute(data, parallel)

    directory.mkdir(parents=True, exist_ok=True)
    content = "".join(line + "\n" for line in receipts)
    (directory / f"{stem}_receipts.log").write_text(content, encoding="utf-8", newline="\n")
    for name, text in csvs:
        (directory / f"{stem}_{name}").write_text(text, encoding="utf-8", newline="\n")
    if manifest:
        failures = "".join(line + "\n" for line in manifest)
        (directory / f"{stem}_failures.txt").write_text(
            failures, encoding="utf-8", newline="\n"
        )
    if fatal is not None:
        print(fatal, file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ammlab",
        description="Deterministic AMM scenario runner: swaps, liquidity "
        "changes, and comparison curves to CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario", help="path to the scenario JSON file")
    p_run.add_argument("--out", default=None, help="output directory (overrides the scenario)")
    p_run.add_argument(
        "--parallel", type=int, default=1, help="worker threads for grid evaluation"
    )
    p_validate = sub.add_parser("validate", help="report scenario problems without executing")
    p_validate.add_argument("scenario", help="path to the scenario JSON file")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(f"ammlab {__version__}")
        return EXIT_OK
    if args.command == "validate":
        try:
            problems = validate_scenario(args.scenario)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot parse scenario: {exc}", file=sys.stderr)
            return EXIT_PARSE
        for problem in problems:
            print(problem)
        return EXIT_VALIDATION if problems else EXIT_OK
    return run_scenario(args.scenario, out_dir=args.out, parallel=args.parallel)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
