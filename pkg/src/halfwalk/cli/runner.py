"""Orchestration behind the ``run``, ``compare`` and ``sweep`` subcommands."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..channel import DecoherenceModel, evolve_channel
from ..chirality import GcdSeries, StationaryEstimate, stationary_estimate
from ..errors import InvalidArgument, InvariantViolation
from ..lattice import CoinOperator, InitialState
from ..observables import (
    PositionDistribution,
    PowerLawFit,
    SpreadSeries,
    bootstrap_sigma,
    fit_power_law,
    half_line_masses,
    half_line_shape,
    spread_from_moments,
)
from ..trajectories import EnsembleConfig, compare_unravelings, run_ensemble
from .config import SCHEMA_VERSION, RunConfig
from .svg import line_chart

log = logging.getLogger(__name__)

#: Serialized probabilities per step must still sum to one within this.
POSITION_SUM_TOLERANCE = 1e-9


def fmt(value: float) -> str:
    return format(float(value), ".17g")


@dataclass
class RunResult:
    config: RunConfig
    distributions: list[PositionDistribution]
    spread: SpreadSeries
    gcd: GcdSeries
    fit: PowerLawFit | None = None
    fit_note: str | None = None
    stationary: StationaryEstimate | None = None
    sigma_err: np.ndarray | None = None
    summary: dict = field(default_factory=dict)


def recorded_times(config: RunConfig) -> list[int]:
    if config.positions_every <= 0:
        return [config.steps]
    times = list(range(0, config.steps + 1, config.positions_every))
    if times[-1] != config.steps:
        times.append(config.steps)
    return times


def build_inputs(config: RunConfig):
    initial = InitialState(config.initial_position, (config.chirality_L, config.chirality_R))
    return initial, CoinOperator(config.gamma), DecoherenceModel(config.p)


def simulate(config: RunConfig, threads: int = 1) -> RunResult:
    initial, coin, model = build_inputs(config)
    times = recorded_times(config)
    steps = config.steps
    sigma_err = None

    if config.mode == "density":
        wanted = set(times)

        def moments(t, rho):
            x = rho.sites.astype(float)
            probs = rho.position_probabilities()
            return float(probs @ x), float(probs @ (x * x))

        def positions(t, rho):
            if t in wanted:
                return PositionDistribution(t, rho.sites.copy(), rho.position_probabilities())
            return None

        run = evolve_channel(
            initial, coin, model, steps,
            {"moments": moments, "coin": lambda t, rho: rho.coin_reduced(), "positions": positions},
            memory_budget=config.memory_budget,
            prune_threshold=config.prune_threshold,
            threads=threads,
        )
        first, second = (np.array(v) for v in zip(*run.records["moments"]))
        coin_rho = np.array(run.records["coin"])
        gcd = GcdSeries.from_arrays(coin_rho[:, 0, 0].real, coin_rho[:, 1, 1].real,
                                    (0.5 * (coin_rho[:, 0, 1] + coin_rho[:, 1, 0])).real, "exact-channel")
        distributions = [d for d in run.records["positions"] if d is not None]
    else:
        acc = run_ensemble(
            initial, coin, model,
            EnsembleConfig(config.trajectories, steps, config.seed, config.mode),
            threads=threads, record=times, keep_moments=config.bootstrap > 0,
        )
        first, second = acc.mean_moments()
        gcd = GcdSeries.from_arrays(*acc.mean_gcd(), provenance=f"{config.mode} N={config.trajectories}")
        distributions = [PositionDistribution(t, acc.sites, acc.mean_positions(t)) for t in times]
        if config.bootstrap > 0:
            sigma_err = bootstrap_sigma(acc.moments, config.bootstrap, config.seed)[1:]

    for d in distributions:
        if abs(d.total() - 1.0) > POSITION_SUM_TOLERANCE:
            raise InvariantViolation(f"position distribution at t={d.t} sums to {d.total()!r}")

    ts = np.arange(steps + 1)
    spread_all = spread_from_moments(ts, first, second)
    spread = SpreadSeries(ts[1:], spread_all.mean[1:], spread_all.sigma[1:])
    result = RunResult(config, distributions, spread, gcd, sigma_err=sigma_err)
    try:
        result.fit = fit_power_law(spread, config.fit_window)
    except InvalidArgument as exc:
        result.fit_note = str(exc)
    if len(gcd) >= 20:
        result.stationary = stationary_estimate(gcd, config.gamma, config.tail_fraction)

    final = distributions[-1]
    left, right = half_line_masses(final)
    result.summary = {
        "final_t": steps,
        "left_mass": left,
        "right_mass": right,
        "left_exceeds_right": left > right,
        "final_sigma": float(spread_all.sigma[-1]),
        "half_lines": half_line_shape(final) if steps > 0 else None,
    }
    if result.stationary is not None:
        st = result.stationary
        result.summary["stationary"] = {
            "pi_L_inf": st.pi_l_inf, "pi_R_inf": st.pi_r_inf, "Q_inf": st.q_inf,
            "window": list(st.window), "residual": st.residual, "residual_tan_form": st.residual_tan_form,
        }
    return result


# -- file output --------------------------------------------------------------


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_outputs(result: RunResult) -> dict[str, str]:
    """File name -> content for every deterministic artifact of a run."""
    cfg = result.config
    threshold = cfg.position_threshold
    position_rows = []
    for d in result.distributions:
        for x, prob in zip(d.sites.tolist(), d.probabilities.tolist()):
            if prob >= threshold:
                position_rows.append((d.t, x, fmt(prob)))
    files = {"positions.csv": _csv_text(("t", "x", "P"), position_rows)}

    sp = result.spread
    if result.sigma_err is not None:
        rows = [(int(t), fmt(s), fmt(e)) for t, s, e in zip(sp.t, sp.sigma, result.sigma_err)]
        files["sigma.csv"] = _csv_text(("t", "sigma", "sigma_err"), rows)
    else:
        files["sigma.csv"] = _csv_text(("t", "sigma"), [(int(t), fmt(s)) for t, s in zip(sp.t, sp.sigma)])

    files["gcd.csv"] = _csv_text(("t", "pi_L", "pi_R", "Q"),
                                 [(pt.t, fmt(pt.pi_l), fmt(pt.pi_r), fmt(pt.q)) for pt in result.gcd.points])
    if result.fit is not None:
        fit = result.fit.as_dict()
    else:
        fit = {"exponent": None, "prefactor": None, "fit_window": None, "rms_residual": None,
               "note": result.fit_note}
    files["fit.json"] = json.dumps(fit, indent=2) + "\n"
    return files


def render_svgs(result: RunResult) -> dict[str, str]:
    sp = result.spread
    pi_l, pi_r, q = result.gcd.arrays()
    t = np.arange(len(pi_l))
    return {
        "sigma.svg": line_chart([(f"p={result.config.p}", sp.t, sp.sigma)], title="spread sigma(t)",
                                xlabel="t", ylabel="sigma", loglog=True),
        "gcd.svg": line_chart([("Pi_L", t, pi_l), ("Q", t, q)], title="global chirality distribution",
                              xlabel="t", ylabel="value"),
    }


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_files(out_dir: Path, files: dict[str, str]) -> dict[str, str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, text in files.items():
        (out_dir / name).write_text(text)
        digests[name] = _digest(text)
    return digests


def cmd_run(config: RunConfig, out_dir: str | Path, *, threads: int = 1, svg: bool = False) -> dict:
    """Run one configuration and write its artifacts; returns the manifest."""
    out_dir = Path(out_dir)
    started = time.perf_counter()
    result = simulate(config, threads)
    files = render_outputs(result)
    if svg:
        files.update(render_svgs(result))
    digests = write_files(out_dir, files)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "halfwalk",
        "tool_version": __version__,
        "config": config.to_mapping(),
        "wall_clock_seconds": time.perf_counter() - started,
        "outputs": digests,
        "summary": result.summary,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    log.info("wrote %d files to %s", len(files) + 1, out_dir)
    return manifest


def cmd_compare(config: RunConfig, out_dir: str | Path | None = None, *, threads: int = 1) -> dict:
    initial, coin, model = build_inputs(config)
    report = compare_unravelings(
        initial, coin, model, config.steps, config.trajectories,
        modes=config.compare_modes, master_seed=config.seed, threads=threads,
        memory_budget=config.memory_budget,
    )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": config.to_mapping(),
        "modes": [r.as_dict() for r in report],
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "compare.json").write_text(json.dumps(doc, indent=2) + "\n")
    return doc


SWEEP_HEADER = ("p", "exponent", "rms_residual", "left_mass", "right_mass",
                "pi_L_inf", "pi_R_inf", "Q_inf", "stationary_residual")


def sweep_row(result: RunResult) -> tuple:
    st = result.stationary
    fit = result.fit
    nan = float("nan")
    return (
        result.config.p,
        fit.exponent if fit else nan,
        fit.rms_residual if fit else nan,
        result.summary["left_mass"],
        result.summary["right_mass"],
        st.pi_l_inf if st else nan,
        st.pi_r_inf if st else nan,
        st.q_inf if st else nan,
        st.residual if st else nan,
    )


def cmd_sweep(config: RunConfig, out_dir: str | Path, *, threads: int = 1) -> list[tuple]:
    """One run per entry of ``p_list``; writes sweep.csv only if every run succeeds."""
    if not config.p_list:
        raise InvalidArgument("sweep needs a non-empty p_list")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / "sweep.csv"
    fd, tmp_name = tempfile.mkstemp(prefix=".sweep-", suffix=".csv", dir=out_dir)
    rows = []
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            for p in config.p_list:
                log.info("sweep: p=%s", p)
                row = sweep_row(simulate(config.replace(p=p), threads))
                rows.append(row)
                writer.writerow([fmt(v) if isinstance(v, float) and not math.isnan(v) else v for v in row])
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return rows
