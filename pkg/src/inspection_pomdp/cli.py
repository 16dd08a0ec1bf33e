"""Command-line front end: ``inspection-pomdp <command> --config run.yaml``.

Each command writes CSV reports, the effective configuration and a
``manifest.txt`` into the output directory. Files are staged and renamed into
place only after the whole command succeeded, so a failed run leaves no
partial reports behind.
"""
from __future__ import annotations

import csv
import io
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .config import RunConfig, example_config_text, load_config
from .errors import (
    CapError,
    ConfigError,
    DegenerateUpdateError,
    DivergenceError,
    InspectionModelError,
    PenaltyError,
    SimulationCapError,
)
from .markov_core import hitting_times, validate_model
from .planner import optimal_inspection_time
from .presets import START_BELIEF
from .sensitivity import d_grid, d_range_sweep, target_time_region
from .simulator import VALUE_ACCOUNTING, InspectionRule, SimConfig, run_experiment

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 3
EXIT_INVALID_MODEL = 4
EXIT_PENALTY = 5
EXIT_NUMERIC = 6
EXIT_SIM_CAP = 7
EXIT_MODEL = 8
EXIT_IO = 9

_EXIT_BY_ERROR = (
    (ConfigError, EXIT_CONFIG),
    (PenaltyError, EXIT_PENALTY),
    (SimulationCapError, EXIT_SIM_CAP),
    ((DivergenceError, DegenerateUpdateError, CapError), EXIT_NUMERIC),
    (InspectionModelError, EXIT_MODEL),
    (OSError, EXIT_IO),
)


def exit_code_for(exc: BaseException) -> int:
    for kind, code in _EXIT_BY_ERROR:
        if isinstance(exc, kind):
            return code
    return EXIT_INTERNAL


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


class ReportSet:
    """Report files staged in memory and committed together."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.files = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def commit(self):
        self.directory.mkdir(parents=True, exist_ok=True)
        staged = []
        try:
            for name, text in self.files.items():
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.directory)
                staged.append((tmp, self.directory / name))
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, final in staged:
            os.replace(tmp, final)


def _require_variant_penalty(cfg: RunConfig, what: str):
    if cfg.penalties.c_tilde == 0:
        raise PenaltyError(
            f"{what} uses the inspection-outcome variant, which needs c_tilde > 0; "
            "set penalties.c_tilde in the config"
        )


def _manifest(command: str, cfg: RunConfig, files) -> str:
    lines = [
        f"command={command}",
        f"version={__version__}",
        f"seed={cfg.simulation.seed}",
        f"config_sha256={cfg.digest()}",
        f"value_accounting={VALUE_ACCOUNTING}",
        f"files={','.join(sorted(files))}",
    ]
    return "\n".join(lines) + "\n"


def run_plan(cfg: RunConfig, out: ReportSet):
    model = cfg.transition_model()
    variants = cfg.planner.variants
    if "inspection-outcome" in variants:
        _require_variant_penalty(cfg, "plan")
    d_values = cfg.planner.d_values or (cfg.penalties.d,)
    summary, scores, checks = [], [], []
    for d in d_values:
        pen = type(cfg.penalties)(d, cfg.penalties.c, cfg.penalties.c_tilde)
        for variant in variants:
            dec = optimal_inspection_time(
                model, pen, START_BELIEF, variant, cfg.planner.horizon, cfg.planner.window
            )
            summary.append((d, variant, dec.t_star if not dec.never else "never",
                            int(dec.forced_at_T), int(dec.assumptions_ok)))
            scores += [(d, variant, t, s) for t, s in enumerate(dec.score_trace, start=1)]
            if dec.assumption_report is not None:
                for chk in dec.assumption_report.checks:
                    checks.append((d, variant, chk.name, int(chk.passed), chk.first_violation))
            click.echo(f"d={d:g} {variant}: t_star={summary[-1][2]}"
                       + (" (forced at T)" if dec.forced_at_T else "")
                       + ("" if dec.assumptions_ok else " [assumptions violated]"))
    out.add("plan.csv", _csv(("d", "variant", "t_star", "forced_at_T", "assumptions_ok"), summary))
    out.add("plan_scores.csv", _csv(("d", "variant", "t", "score"), scores))
    out.add("plan_assumptions.csv", _csv(("d", "variant", "check", "passed", "first_violation"), checks))


def run_hitting_time(cfg: RunConfig, out: ReportSet):
    ht = hitting_times(cfg.transition_model())
    click.echo(f"mu_N={ht.mu_n:.6f} mu_V={ht.mu_v:.6f} mu_O={ht.mu_o:.6f} t_E={ht.t_e}")
    out.add("hitting_time.csv", _csv(("mu_N", "mu_V", "mu_O", "t_E"), [(ht.mu_n, ht.mu_v, ht.mu_o, ht.t_e)]))


def resolve_rules(cfg: RunConfig, model) -> list:
    rules = []
    for spec in cfg.simulation.rules:
        t = spec.time
        if t == "never":
            t = None
        elif t == "etd":
            t = hitting_times(model).t_e
        elif t in ("optimal", "optimal-variant"):
            variant = "base" if t == "optimal" else "inspection-outcome"
            if variant != "base":
                _require_variant_penalty(cfg, f"rule {spec.name!r}")
            t = optimal_inspection_time(
                model, cfg.penalties, START_BELIEF, variant, cfg.planner.horizon, cfg.planner.window
            ).t_star
        rules.append(InspectionRule(spec.name, t))
    return rules


def run_simulate(cfg: RunConfig, out: ReportSet):
    model = cfg.transition_model()
    sim = cfg.simulation
    if not sim.rules:
        raise ConfigError("simulation.rules: at least one rule is required for simulate")
    rules = resolve_rules(cfg, model)
    sc = SimConfig(
        penalties=cfg.penalties, rules=rules, n_runs=sim.n_runs, seed=sim.seed,
        perturbation_sd=sim.perturbation_sd, perturb_per_run=sim.perturb_per_run,
        max_steps=sim.max_steps, raw_records=sim.raw_records, workers=sim.workers,
    )
    rep = run_experiment(sc, model)
    rows = [(r.name, r.caught_fraction, r.mean_value_no_ic, r.mean_value_ic, r.n_excluded)
            for r in rep.rules]
    for r, rule in zip(rows, rules):
        click.echo(f"{r[0]} (t={rule.time}): caught={r[1]} no_ic={r[2]:.4f} ic={r[3]:.4f}")
    out.add("simulation.csv", _csv(
        ("rule", "caught_fraction", "mean_value_no_ic", "mean_value_ic", "n_excluded"), rows))
    out.add("simulation_rules.csv", _csv(("rule", "time"), [(r.name, r.time) for r in rules]))
    et = rep.end_times
    out.add("simulation_end_times.csv", _csv(("statistic", "value"), [
        ("mean", et.mean), ("std", et.std), ("median", et.median), ("min", et.min), ("max", et.max),
        ("n_included", rep.n_included), ("n_excluded", len(rep.excluded_runs)),
    ]))
    if rep.records is not None and (sim.raw_records or sim.perturbation_sd > 0):
        keys = list(rep.records)
        cols = [rep.records[k] for k in keys]
        out.add("simulation_runs.csv", _csv(keys, (tuple(c[i].item() for c in cols) for i in range(sc.n_runs))))


def run_sensitivity(cfg: RunConfig, out: ReportSet):
    s = cfg.sensitivity
    missing = [k for k in ("c", "d_min", "d_max") if getattr(s, k) is None]
    if missing or not s.t_values:
        raise ConfigError("sensitivity: c, d_min, d_max and t_values are required")
    if s.variant != "base":
        _require_variant_penalty(cfg, "sensitivity")
    model = cfg.transition_model()
    grid = d_grid(s.d_min, s.d_max, s.d_step)
    ranges = d_range_sweep(model, s.c, s.t_values, grid, START_BELIEF, s.variant,
                           cfg.penalties.c_tilde if s.variant != "base" else 0.0,
                           cfg.planner.horizon, cfg.planner.window, s.workers)
    rows = [(r.t, None if r.empty else r.d_lo, None if r.empty else r.d_hi) for r in ranges]
    regions = []
    for t in s.t_values:
        lo, hi = target_time_region(model, START_BELIEF, t).d_interval(s.c)
        regions.append((t, lo, hi))
    for (t, lo, hi), (_, a, b) in zip(rows, regions):
        click.echo(f"t={t}: grid d in [{lo}, {hi}], region d in ({a:.4f}, {b:.4f}]")
    out.add("sensitivity.csv", _csv(("t", "d_L", "d_U"), rows))
    out.add("sensitivity_regions.csv", _csv(("t", "d_L", "d_U"), regions))


def run_validate(cfg: RunConfig, out: ReportSet):
    report = validate_model(cfg.transition_model())
    rows = [(v.check, v.location, v.message) for v in report.violations]
    out.add("validation.csv", _csv(("check", "location", "message"), rows))
    if report.ok:
        click.echo("model ok")
        return EXIT_OK
    for v in report.violations:
        click.echo(str(v), err=True)
    return EXIT_INVALID_MODEL


COMMANDS = {
    "plan": run_plan,
    "simulate": run_simulate,
    "sensitivity": run_sensitivity,
    "hitting-time": run_hitting_time,
    "validate": run_validate,
}


def dispatch(command: str, cfg: RunConfig, out_dir=None) -> int:
    """Run ``command`` and commit its reports; returns the exit status."""
    out = ReportSet(out_dir or cfg.output.directory)
    status = COMMANDS[command](cfg, out) or EXIT_OK
    out.add("effective_config.yaml", cfg.dump())
    out.add("manifest.txt", _manifest(command, cfg, [*out.files, "manifest.txt"]))
    out.commit()
    return status


def _apply_overrides(cfg: RunConfig, seed, runs) -> RunConfig:
    sim = cfg.simulation
    if seed is not None:
        sim = replace(sim, seed=seed)
    if runs is not None:
        sim = replace(sim, n_runs=runs)
    return replace(cfg, simulation=sim)


def _common(f):
    f = click.option("--runs", type=click.IntRange(min=1), help="Override simulation.n_runs.")(f)
    f = click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Override simulation.seed.")(f)
    f = click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory.")(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="YAML run configuration (default: bundled reference facility).")(f)
    return f


def _run(command, config_path, out_dir, seed, runs):
    try:
        text = Path(config_path).read_text(encoding="utf-8") if config_path else example_config_text()
        cfg = load_config(text, check_model=(command != "validate"))
        cfg = _apply_overrides(cfg, seed, runs)
        status = dispatch(command, cfg, out_dir)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit status
        code = exit_code_for(exc)
        if code == EXIT_INTERNAL:
            log.exception("unexpected failure")
        click.echo(f"error: {exc}", err=True)
        sys.exit(code)
    sys.exit(status)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Inspection timing for a facility with partially observed quality."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


def _make(name, doc):
    @main.command(name=name, help=doc)
    @_common
    def cmd(config_path, out_dir, seed, runs):
        _run(name, config_path, out_dir, seed, runs)

    return cmd


plan = _make("plan", "Optimal inspection period, score trace and assumption checks.")
simulate = _make("simulate", "Monte-Carlo comparison of inspection rules.")
sensitivity = _make("sensitivity", "Range of d over which each target period is optimal.")
hitting_time = _make("hitting-time", "Expected periods until failure or closure.")
validate = _make("validate", "Check the transition model and list every violation.")


if __name__ == "__main__":
    main()
