#!/usr/bin/env python
# coding=utf-8
"""Command-line front end: closed-form metrics, Monte-Carlo estimates, optimizers and mode
selection for the integrated UAV-IRS relay, swept over a scenario grid and exported as tables."""

import argparse
import csv
import itertools
import json
import logging
import math
import sys
from dataclasses import replace
from enum import Enum
from multiprocessing import Pool
from pathlib import Path

import numpy as np
from tqdm.auto import tqdm

from models import __version__
from models.errors import AerisError, InfeasibleError, ScenarioError, ToleranceError
from models.mode_select import (
    select_mode_by_optimal_heights,
    select_mode_by_power,
    select_mode_by_probability,
    select_mode_by_snr,
    select_mode_by_threshold,
    selection_probability_irs,
)
from models.montecarlo import MIN_TRIALS, SimPlan, empirical_pdf_of_cascade_power, simulate
from models.optimizer import (
    min_power_elements,
    min_power_uplink,
    optimize_irs_elements,
    optimize_irs_height,
    optimize_uav_height,
)
from models.performance import mode_metrics, mode_outage_fn
from models.power import Mode, mode_power
from models.scenario import SweepAxis
from scenarios import load_scenario


logger = logging.getLogger(__name__)

COMMANDS = ("metrics", "simulate", "optimize", "select", "validate")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# Provenance of each selection rule's inputs.
SELECTION_PROVENANCE = {
    "probability": "closed_form",
    "threshold": "bound",
    "power": "closed_form",
    "snr": "closed_form",
    "optimal_heights": "bound",
}


def parse_args(input_args=None):
    parser = argparse.ArgumentParser(description="Performance analysis and energy-efficiency optimization of an integrated UAV-IRS relay.")
    parser.add_argument(
        "command",
        type=str,
        nargs="?",
        default=None,
        help=f"What to run, one of {', '.join(COMMANDS)}.",
    )
    parser.add_argument(
        "--scenario",
        type=str,
        default="default",
        help="Path to a scenario YAML file or the name of a shipped scenario in `scenarios/`.",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="Directory the result table and records are written to. Defaults to `output/<scenario name>`.",
    )
    parser.add_argument(
        "--trials",
        type=int,
        default=None,
        help="Monte-Carlo trials per grid point; overrides `sim.trials` of the scenario.",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Root seed of the Monte-Carlo streams; overrides `sim.seed` of the scenario.",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help=(
            "Number of worker processes. Monte-Carlo commands split trials across them, the other commands"
            " split grid points. Results do not depend on this value."
        ),
    )
    parser.add_argument(
        "--grid",
        type=str,
        action="append",
        default=None,
        help=(
            "Sweep axis `var=lo:hi:step`, repeatable; the grid is the cartesian product in the given order."
            " Replaces the scenario's own `sweep` section."
        ),
    )
    parser.add_argument(
        "--log_level",
        type=str,
        default="INFO",
        help=f"Logging level, one of {', '.join(LOG_LEVELS)}.",
    )
    parser.add_argument(
        "--no_progress", action="store_true", help="Whether or not to hide the progress bars."
    )

    if input_args is not None:
        args, _ = parser.parse_known_args(input_args)
    else:
        args, _ = parser.parse_known_args()

    return args


def check_args(args):
    if args.command is None:
        raise ValueError(f"Specify a command, one of {', '.join(COMMANDS)}")

    if args.command not in COMMANDS:
        raise ValueError(f"Unknown command `{args.command}`, expected one of {', '.join(COMMANDS)}")

    if args.trials is not None and args.trials < MIN_TRIALS:
        raise ValueError(f"`--trials` must be at least {MIN_TRIALS}")

    if args.workers is not None and args.workers < 1:
        raise ValueError("`--workers` must be at least 1")

    if args.log_level.upper() not in LOG_LEVELS:
        raise ValueError(f"`--log_level` must be one of {', '.join(LOG_LEVELS)}")

    if args.grid:
        variables = [SweepAxis.parse(g).variable for g in args.grid]
        if len(set(variables)) != len(variables):
            raise ValueError("`--grid` names the same variable twice")


def grid_points(axes):
    if not axes:
        return [{}]
    names = [axis.variable for axis in axes]
    return [dict(zip(names, values)) for values in itertools.product(*(axis.values() for axis in axes))]


def apply_point(scenario, point):
    for variable, value in point.items():
        scenario = scenario.with_variable(variable, value)
    return scenario


def run_metrics(scenario, progress=False):
    rows = []
    for provenance in ("exact", "approx"):
        for mode in Mode:
            row = mode_metrics(scenario, mode, provenance=provenance).as_row()
            rows.append((row, dict(row)))
    return rows


def run_simulate(scenario, progress=False):
    plan = SimPlan.from_scenario(scenario, progress=progress)
    result = simulate(scenario, plan)
    power = scenario.power_model
    rows = []
    for mode in plan.modes:
        estimate = result[mode]
        row = estimate.as_row()
        row["ee_bps_per_w"] = estimate.capacity / mode_power(mode, scenario.radio, power)
        row["selection_frequency"] = result.selection_frequency
        row["selection_se"] = result.selection_se
        rows.append((row, {**row, "seed": result.seed}))
    return rows


def _optimizer_row(report):
    return {
        "problem": report.problem,
        "feasible": True,
        "x": report.x,
        "objective": report.objective,
        "iterations": report.iterations,
        "converged": report.converged,
        "stop": report.extras.get("stop"),
        "qt_x": report.qt_x,
        "certified": report.certified,
        "exhaustive_x": report.exhaustive_x,
        "gap": report.gap,
        "approx_exhaustive_x": report.approx_exhaustive_x,
        "approx_gap": report.approx_gap,
        "init_sensitivity": report.init_sensitivity,
        "sign_premise_restored": report.sign_premise_restored,
        "provenance": "bound",
    }


def run_optimize(scenario, progress=False):
    rows = []
    for optimize in (optimize_irs_elements, optimize_irs_height, optimize_uav_height):
        report = optimize(scenario)
        rows.append((_optimizer_row(report), {**report.as_record(), "provenance": "bound"}))

    empty = dict.fromkeys(_optimizer_row(report))
    try:
        sizing = min_power_elements(scenario)
    except InfeasibleError as exc:
        logger.warning(str(exc))
        row = {**empty, "problem": "min_power_elements", "feasible": False, "provenance": "bound"}
        rows.append((row, {**row, "reason": str(exc)}))
    else:
        row = {**empty, "problem": "min_power_elements", "feasible": True, "x": sizing.elements, "qt_x": sizing.continuous, "provenance": "bound"}
        rows.append((row, {**row, "branch": sizing.branch, "sqrt_continuous": sizing.sqrt_continuous, "required_snr": sizing.required_snr}))
    p_u = min_power_uplink(scenario)
    row = {**empty, "problem": "min_power_uplink", "feasible": True, "x": p_u, "provenance": "bound"}
    rows.append((row, {**row, "elements": scenario.irs.elements, "rate_bps": scenario.radio.target_rate}))
    return rows


def run_select(scenario, progress=False):
    reports = (
        select_mode_by_probability(scenario),
        select_mode_by_threshold(scenario),
        select_mode_by_power(scenario),
        select_mode_by_snr(scenario),
        select_mode_by_optimal_heights(scenario),
    )
    rows = []
    for report in reports:
        row = {**report.as_row(), "provenance": SELECTION_PROVENANCE[report.rule]}
        rows.append((row, dict(row)))
    return rows


def _check(check, mode, height, elements, analytic, simulated, se, tolerance):
    deviation = abs(analytic - simulated)
    return {
        "check": check,
        "mode": None if mode is None else Mode(mode).value,
        "height_m": height,
        "elements": elements,
        "analytic": analytic,
        "simulated": simulated,
        "se": se,
        "tolerance": tolerance,
        "deviation": deviation,
        "passed": bool(deviation <= tolerance),
        "provenance": "simulated",
    }


def run_validate(scenario, progress=False):
    """Closed forms against the Monte-Carlo oracle on the scenario's validation grid."""
    settings = scenario.validate
    rows = []
    grid = list(itertools.product(settings.heights, settings.elements))
    for height, elements in tqdm(grid, desc="validation points", disable=not progress):
        at = scenario.with_height(height).with_elements(elements)
        plan = SimPlan.from_scenario(at)
        result = simulate(at, plan)
        gamma0 = at.radio.threshold
        for mode in Mode:
            analytic = float(mode_outage_fn(at, mode)(gamma0))
            estimate = result[mode]
            se = max(estimate.outage_se, math.sqrt(analytic * (1.0 - analytic) / plan.trials))
            allowance = 0.0 if mode is Mode.UAV else settings.clt_allowance
            rows.append(_check("outage", mode, height, elements, analytic, estimate.outage, se, settings.sigmas * se + allowance))

            # Jensen: the mean-SNR bound never undercuts the mean rate of the same samples.
            bound = at.radio.bandwidth * math.log2(1.0 + estimate.mean_snr)
            slack = 1e-9 * max(1.0, abs(bound))
            jensen = _check("jensen", mode, height, elements, bound, estimate.capacity, estimate.capacity_se, slack)
            rows.append({**jensen, "passed": bool(bound + slack >= estimate.capacity)})

        if elements == settings.elements[0]:
            exact = mode_metrics(at, Mode.UAV, provenance="exact").capacity
            simulated = result[Mode.UAV].capacity
            rows.append(_check("capacity", Mode.UAV, height, elements, exact, simulated, result[Mode.UAV].capacity_se, settings.capacity_rtol * abs(simulated)))

        if elements >= at.irs.clt_floor:
            analytic = selection_probability_irs(at)
            freq = result.selection_frequency
            se = max(result.selection_se, math.sqrt(analytic * (1.0 - analytic) / plan.trials))
            rows.append(_check("selection", Mode.IRS, height, elements, analytic, freq, se, settings.sigmas * se + settings.clt_allowance))

        if elements >= at.irs.clt_floor and height == settings.heights[0]:
            # the cascade law does not depend on the altitude
            hist = empirical_pdf_of_cascade_power(at, plan, elements)
            band = math.sqrt(math.log(40.0) / (2.0 * hist.samples))
            rows.append(_check("histogram", Mode.IRS, height, elements, 0.0, hist.sup_distance, band, settings.histogram))

        # Selection combining of independent branches.
        o_uav, o_irs = result[Mode.UAV].outage, result[Mode.IRS].outage
        pooled = math.sqrt(result[Mode.INT].outage_se**2 + (o_irs * result[Mode.UAV].outage_se) ** 2 + (o_uav * result[Mode.IRS].outage_se) ** 2)
        rows.append(_check("int_product", Mode.INT, height, elements, o_uav * o_irs, result[Mode.INT].outage, pooled, settings.sigmas * pooled))
    return [(row, dict(row)) for row in rows]


HANDLERS = {
    "metrics": run_metrics,
    "simulate": run_simulate,
    "optimize": run_optimize,
    "select": run_select,
    "validate": run_validate,
}


def _run_point(task):
    command, scenario = task
    return HANDLERS[command](scenario)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_results(out_dir, command, points, results):
    """One comma-separated table and one JSON-lines record file, rows in grid order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    point_columns = list(points[0]) if points else []
    columns = []
    for rows in results:
        for row, _ in rows:
            columns.extend(k for k in row if k not in columns and k != "provenance")
    header = point_columns + columns + ["provenance", "version"]

    table_path = out_dir / f"{command}.csv"
    records_path = out_dir / f"{command}.jsonl"
    with open(table_path, "w", newline="", encoding="utf-8") as table, open(records_path, "w", encoding="utf-8") as records:
        writer = csv.writer(table, lineterminator="\n")
        writer.writerow(header)
        for point, rows in zip(points, results):
            for row, record in rows:
                full = {**point, **row, "version": __version__}
                writer.writerow([_cell(full.get(column)) for column in header])
                entry = {"command": command, "version": __version__, "point": point, **record}
                records.write(json.dumps(_clean(entry), sort_keys=True) + "\n")
    logger.info(f"wrote {table_path} and {records_path}")
    return table_path, records_path


def run_sweep(scenario_path, command, out=None, trials=None, seed=None, workers=None, grid=None, progress=True):
    r"""
    Run one command over the scenario grid and write its table and record files.

    Parameters:
        scenario_path (`str`): scenario YAML path or shipped scenario name.
        command (`str`): one of `metrics`, `simulate`, `optimize`, `select`, `validate`.
        grid (`List[str]`, *optional*): `var=lo:hi:step` axes replacing the scenario sweep.

    Returns the exit status; infeasible and out-of-tolerance runs raise after writing their files.
    """
    scenario = load_scenario(scenario_path)
    overrides = {k: v for k, v in dict(trials=trials, seed=seed, workers=workers).items() if v is not None}
    if overrides:
        scenario = replace(scenario, sim=replace(scenario.sim, **overrides))
    if command in ("simulate", "validate") and scenario.sim.trials < MIN_TRIALS:
        raise ScenarioError(f"`sim.trials` must be at least {MIN_TRIALS}")

    axes = tuple(SweepAxis.parse(g) for g in grid) if grid else scenario.sweep
    if command == "validate":
        if axes:
            logger.info("validate runs on the scenario's `validate` grid; sweep axes are ignored")
        points = [{}]
    else:
        points = grid_points(axes)
    # Every grid point is built before any work so a bad coordinate fails without output.
    point_scenarios = [apply_point(scenario, point) for point in points]
    workers = scenario.sim.workers

    logger.info(f"***** Running {command} *****")
    logger.info(f"  Scenario = {scenario.name}")
    logger.info(f"  Num grid points = {len(points)}")
    logger.info(f"  Sweep = {', '.join(f'{a.variable}={a.lo:g}:{a.hi:g}:{a.step:g}' for a in axes) or 'none'}")
    logger.info(f"  Trials = {scenario.sim.trials}")
    logger.info(f"  Seed = {scenario.sim.seed}")
    logger.info(f"  Workers = {workers}")

    tasks = [(command, s) for s in point_scenarios]
    bar = dict(total=len(tasks), desc=f"{command} grid", disable=not progress)
    if command in ("simulate", "validate"):
        # Monte-Carlo commands parallelize inside the oracle.
        results = [HANDLERS[command](s, progress=progress and len(tasks) == 1) for _, s in tqdm(tasks, **bar)]
    elif workers > 1 and len(tasks) > 1:
        with Pool(processes=workers) as pool:
            results = list(tqdm(pool.imap(_run_point, tasks), **bar))
    else:
        results = [_run_point(task) for task in tqdm(tasks, **bar)]

    out_dir = Path(out) if out else Path("output", scenario.name)
    write_results(out_dir, command, points, results)

    if command == "optimize":
        infeasible = sum(1 for rows in results for row, _ in rows if row.get("feasible") is False)
        if infeasible:
            raise InfeasibleError(f"{infeasible} grid point(s) have no feasible element count for the rate target")
    if command == "validate":
        failed = [row for rows in results for row, _ in rows if not row["passed"]]
        for row in failed:
            logger.error(
                f"{row['check']} {row['mode']} at h={row['height_m']:g} m, N={row['elements']}: "
                f"|{row['analytic']:.6g} - {row['simulated']:.6g}| > {row['tolerance']:.3g}"
            )
        if failed:
            total = sum(len(rows) for rows in results)
            raise ToleranceError(f"{len(failed)} of {total} checks out of tolerance")
        logger.info("all validation checks passed")
    return 0


def main(args):
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
        datefmt="%m/%d/%Y %H:%M:%S",
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
    )
    try:
        check_args(args)
    except ValueError as exc:
        logger.error(str(exc))
        return ScenarioError.exit_code

    try:
        return run_sweep(
            args.scenario,
            args.command,
            out=args.out,
            trials=args.trials,
            seed=args.seed,
            workers=args.workers,
            grid=args.grid,
            progress=not args.no_progress,
        )
    except AerisError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    except ValueError as exc:
        # model parameter checks raise ValueError; they are configuration errors
        logger.error(f"invalid configuration: {exc}")
        return ScenarioError.exit_code


if __name__ == "__main__":
    args = parse_args()
    sys.exit(main(args))
