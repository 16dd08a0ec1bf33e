"""Run configuration: a YAML document split into validated dataclass blocks.

Layout::

    model:
      no_inspect:
        N: [p_NN, p_NV, p_NO, p_ND, p_NC]
        V: [p_VV, p_VO, p_VD, p_VC]
        O: [p_OO, p_OD, p_OC]
      inspection_closure: [p_NIC, p_VIC, p_OIC]
    penalties: {d: 14, c: 5, c_tilde: 1}
    planner: {horizon: 500, window: 50, variants: [base], d_values: [...]}
    simulation: {n_runs: 100000, seed: 0, rules: [{name: ETD, time: etd}], ...}
    sensitivity: {c: 5, t_values: [8, 12], d_min: 5, d_max: 40, d_step: 0.01}
    output: {directory: out, formats: [csv]}

Rule times in the simulation block are a positive integer, ``never``,
``etd`` (the expected-time-to-disruption period) or ``optimal`` /
``optimal-variant`` (the planner's decision at the configured penalties).
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from importlib import resources

import yaml

from .errors import ConfigError
from .markov_core import PenaltyParams, TransitionModel, validate_model
from .planner import DEFAULT_HORIZON, DEFAULT_WINDOW
from .sensitivity import DEFAULT_D_STEP
from .simulator import DEFAULT_MAX_STEPS
from .value_engine import VARIANTS

ROW_LENGTHS = {"N": 5, "V": 4, "O": 3}
SYMBOLIC_TIMES = ("never", "etd", "optimal", "optimal-variant")
FORMATS = ("csv",)


@dataclass(frozen=True)
class ModelBlock:
    no_inspect: tuple
    inspection_closure: tuple

    def to_model(self) -> TransitionModel:
        return TransitionModel.from_rows(self.no_inspect, self.inspection_closure)

    def to_doc(self) -> dict:
        rows, k = {}, 0
        for s, n in ROW_LENGTHS.items():
            rows[s] = list(self.no_inspect[k:k + n])
            k += n
        return {"no_inspect": rows, "inspection_closure": list(self.inspection_closure)}


@dataclass(frozen=True)
class PlannerBlock:
    horizon: int = DEFAULT_HORIZON
    window: int = DEFAULT_WINDOW
    variants: tuple = ("base",)
    d_values: tuple = ()


@dataclass(frozen=True)
class RuleSpec:
    name: str
    time: object  # int or one of SYMBOLIC_TIMES


@dataclass(frozen=True)
class SimulationBlock:
    n_runs: int = 100_000
    seed: int = 0
    rules: tuple = ()
    perturbation_sd: float = 0.0
    perturb_per_run: bool = True
    max_steps: int = DEFAULT_MAX_STEPS
    raw_records: bool = False
    workers: int = 1


@dataclass(frozen=True)
class SensitivityBlock:
    c: float | None = None
    t_values: tuple = ()
    d_min: float | None = None
    d_max: float | None = None
    d_step: float = DEFAULT_D_STEP
    variant: str = "base"
    workers: int = 1


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class RunConfig:
    model: ModelBlock
    penalties: PenaltyParams
    planner: PlannerBlock = field(default_factory=PlannerBlock)
    simulation: SimulationBlock = field(default_factory=SimulationBlock)
    sensitivity: SensitivityBlock = field(default_factory=SensitivityBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def transition_model(self) -> TransitionModel:
        return self.model.to_model()

    def to_doc(self) -> dict:
        sim = asdict(self.simulation)
        sim["rules"] = [{"name": r.name, "time": r.time} for r in self.simulation.rules]
        plan = asdict(self.planner)
        plan["variants"] = list(self.planner.variants)
        plan["d_values"] = list(self.planner.d_values)
        sens = asdict(self.sensitivity)
        sens["t_values"] = list(self.sensitivity.t_values)
        return {
            "model": self.model.to_doc(),
            "penalties": {"d": self.penalties.d, "c": self.penalties.c, "c_tilde": self.penalties.c_tilde},
            "planner": plan,
            "simulation": sim,
            "sensitivity": sens,
            "output": {"directory": self.output.directory, "formats": list(self.output.formats)},
        }

    def dump(self) -> str:
        """Effective configuration; ``load_config(cfg.dump())`` reproduces ``cfg``."""
        return yaml.safe_dump(self.to_doc(), sort_keys=False)

    def digest(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()


class _Reader:
    """Pulls typed fields out of a nested mapping, collecting every problem."""

    def __init__(self):
        self.errors = []

    def fail(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def section(self, doc, key, required=False):
        if key not in doc or doc[key] is None:
            if required:
                self.fail(key, "missing required section")
            return {}
        val = doc[key]
        if not isinstance(val, dict):
            self.fail(key, "expected a mapping")
            return {}
        return val

    def unknown(self, mapping, allowed, path):
        for k in mapping:
            if k not in allowed:
                self.fail(f"{path}.{k}" if path else str(k), "unknown field")

    def number(self, mapping, key, path, default=None, required=False, lo=None, integer=False):
        full = f"{path}.{key}"
        if key not in mapping:
            if required:
                self.fail(full, "missing required field")
            return default
        val = mapping[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(full, f"expected a number, got {val!r}")
            return default
        if integer:
            if isinstance(val, float) and not val.is_integer():
                self.fail(full, f"expected an integer, got {val!r}")
                return default
            val = int(val)
        else:
            val = float(val)
        if lo is not None and val < lo:
            self.fail(full, f"must be >= {lo}, got {val}")
            return default
        return val

    def flag(self, mapping, key, path, default):
        if key not in mapping:
            return default
        if not isinstance(mapping[key], bool):
            self.fail(f"{path}.{key}", "expected true or false")
            return default
        return mapping[key]

    def seq(self, mapping, key, path):
        if key not in mapping or mapping[key] is None:
            return None
        if not isinstance(mapping[key], list):
            self.fail(f"{path}.{key}", "expected a list")
            return None
        return mapping[key]

    def probs(self, values, path, length):
        if not isinstance(values, list) or len(values) != length:
            self.fail(path, f"expected a list of {length} probabilities")
            return [0.0] * length
        out = []
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                self.fail(f"{path}[{i}]", f"expected a number, got {v!r}")
                v = 0.0
            out.append(float(v))
        return out


def _read_model(r: _Reader, doc) -> ModelBlock:
    m = r.section(doc, "model", required=True)
    r.unknown(m, ("no_inspect", "inspection_closure"), "model")
    rows = m.get("no_inspect")
    values = []
    if not isinstance(rows, dict):
        r.fail("model.no_inspect", "expected a mapping with rows N, V, O")
        rows = {}
    r.unknown(rows, ROW_LENGTHS, "model.no_inspect")
    for s, n in ROW_LENGTHS.items():
        if s not in rows:
            r.fail(f"model.no_inspect.{s}", "missing row")
            values += [0.0] * n
        else:
            values += r.probs(rows[s], f"model.no_inspect.{s}", n)
    p_ic = r.probs(m.get("inspection_closure", [0.0, 0.0, 0.0]), "model.inspection_closure", 3)
    return ModelBlock(tuple(values), tuple(p_ic))


def _read_penalties(r: _Reader, doc):
    p = r.section(doc, "penalties", required=True)
    r.unknown(p, ("d", "c", "c_tilde"), "penalties")
    d = r.number(p, "d", "penalties", required=True, lo=0.0)
    c = r.number(p, "c", "penalties", required=True, lo=0.0)
    ct = r.number(p, "c_tilde", "penalties", default=0.0, lo=0.0)
    if None in (d, c, ct):
        return None
    try:
        return PenaltyParams(d, c, ct)
    except ValueError as exc:
        r.fail("penalties", str(exc))
        return None


def _read_planner(r: _Reader, doc) -> PlannerBlock:
    p = r.section(doc, "planner")
    r.unknown(p, ("horizon", "window", "variants", "d_values"), "planner")
    variants = r.seq(p, "variants", "planner") or ["base"]
    for i, v in enumerate(variants):
        if v not in VARIANTS:
            r.fail(f"planner.variants[{i}]", f"unknown variant {v!r}; expected one of {VARIANTS}")
    d_values = []
    for i, v in enumerate(r.seq(p, "d_values", "planner") or []):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            r.fail(f"planner.d_values[{i}]", f"expected a nonnegative number, got {v!r}")
        else:
            d_values.append(float(v))
    return PlannerBlock(
        horizon=r.number(p, "horizon", "planner", DEFAULT_HORIZON, lo=1, integer=True),
        window=r.number(p, "window", "planner", DEFAULT_WINDOW, lo=1, integer=True),
        variants=tuple(variants),
        d_values=tuple(d_values),
    )


def _read_rule(r: _Reader, item, path):
    if not isinstance(item, dict) or "name" not in item or "time" not in item:
        r.fail(path, "expected a mapping with 'name' and 'time'")
        return None
    r.unknown(item, ("name", "time"), path)
    t = item["time"]
    if isinstance(t, str):
        if t not in SYMBOLIC_TIMES:
            r.fail(f"{path}.time", f"expected a positive integer or one of {SYMBOLIC_TIMES}")
            return None
    elif isinstance(t, bool) or not isinstance(t, int) or t < 1:
        r.fail(f"{path}.time", f"expected a positive integer or one of {SYMBOLIC_TIMES}")
        return None
    return RuleSpec(str(item["name"]), t)


def _read_simulation(r: _Reader, doc) -> SimulationBlock:
    s = r.section(doc, "simulation")
    fields = ("n_runs", "seed", "rules", "perturbation_sd", "perturb_per_run",
              "max_steps", "raw_records", "workers")
    r.unknown(s, fields, "simulation")
    rules = []
    for i, item in enumerate(r.seq(s, "rules", "simulation") or []):
        rule = _read_rule(r, item, f"simulation.rules[{i}]")
        if rule is not None:
            rules.append(rule)
    names = [x.name for x in rules]
    if len(set(names)) != len(names):
        r.fail("simulation.rules", "rule names must be unique")
    seed = r.number(s, "seed", "simulation", 0, lo=0, integer=True)
    if seed is not None and seed >= 2**64:
        r.fail("simulation.seed", "must fit in 64 bits")
    return SimulationBlock(
        n_runs=r.number(s, "n_runs", "simulation", 100_000, lo=1, integer=True),
        seed=seed,
        rules=tuple(rules),
        perturbation_sd=r.number(s, "perturbation_sd", "simulation", 0.0, lo=0.0),
        perturb_per_run=r.flag(s, "perturb_per_run", "simulation", True),
        max_steps=r.number(s, "max_steps", "simulation", DEFAULT_MAX_STEPS, lo=1, integer=True),
        raw_records=r.flag(s, "raw_records", "simulation", False),
        workers=r.number(s, "workers", "simulation", 1, lo=1, integer=True),
    )


def _read_sensitivity(r: _Reader, doc) -> SensitivityBlock:
    s = r.section(doc, "sensitivity")
    r.unknown(s, ("c", "t_values", "d_min", "d_max", "d_step", "variant", "workers"), "sensitivity")
    t_values = []
    for i, t in enumerate(r.seq(s, "t_values", "sensitivity") or []):
        if isinstance(t, bool) or not isinstance(t, int) or t < 2:
            r.fail(f"sensitivity.t_values[{i}]", "expected an integer >= 2")
        else:
            t_values.append(t)
    blk = SensitivityBlock(
        c=r.number(s, "c", "sensitivity", lo=0.0),
        t_values=tuple(t_values),
        d_min=r.number(s, "d_min", "sensitivity", lo=0.0),
        d_max=r.number(s, "d_max", "sensitivity", lo=0.0),
        d_step=r.number(s, "d_step", "sensitivity", DEFAULT_D_STEP, lo=0.0),
        variant=s.get("variant", "base"),
        workers=r.number(s, "workers", "sensitivity", 1, lo=1, integer=True),
    )
    if blk.variant not in VARIANTS:
        r.fail("sensitivity.variant", f"unknown variant {blk.variant!r}")
    if blk.d_step is not None and blk.d_step <= 0:
        r.fail("sensitivity.d_step", "must be positive")
    if blk.d_min is not None and blk.d_max is not None and blk.d_min > blk.d_max:
        r.fail("sensitivity", "d_min must not exceed d_max")
    return blk


def _read_output(r: _Reader, doc) -> OutputBlock:
    o = r.section(doc, "output")
    r.unknown(o, ("directory", "formats"), "output")
    formats = r.seq(o, "formats", "output") or ["csv"]
    for i, f in enumerate(formats):
        if f not in FORMATS:
            r.fail(f"output.formats[{i}]", f"unsupported format {f!r}; expected one of {FORMATS}")
    directory = o.get("directory", "out")
    if not isinstance(directory, str):
        r.fail("output.directory", "expected a string")
        directory = "out"
    return OutputBlock(directory, tuple(formats))


def load_config(text: str, check_model: bool = True) -> RunConfig:
    """Parse and validate a configuration document.

    Every invalid field is reported in one ``ConfigError`` with its dotted
    path. Syntax errors carry the line and column. With ``check_model`` the
    transition matrix must also pass ``validate_model``.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"parse error at {where}{getattr(exc, 'problem', exc)}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("parse error: top level must be a mapping")

    r = _Reader()
    r.unknown(doc, ("model", "penalties", "planner", "simulation", "sensitivity", "output"), "")
    model = _read_model(r, doc)
    penalties = _read_penalties(r, doc)
    planner = _read_planner(r, doc)
    simulation = _read_simulation(r, doc)
    sensitivity = _read_sensitivity(r, doc)
    output = _read_output(r, doc)

    if penalties is not None:
        for i, d in enumerate(planner.d_values):
            if not penalties.c <= d:
                r.fail(f"planner.d_values[{i}]", f"d={d} is below c={penalties.c}")
    if check_model and not any(e.startswith("model") for e in r.errors):
        report = validate_model(model.to_model())
        for v in report.violations:
            r.fail(f"model.{v.check}", str(v))
    if r.errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(r.errors))
    return RunConfig(model, penalties, planner, simulation, sensitivity, output)


def load_config_file(path, check_model: bool = True) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read(), check_model)


def example_config_text() -> str:
    """The bundled configuration for the reference facility."""
    return resources.files("inspection_pomdp").joinpath("data/baseline.yaml").read_text(encoding="utf-8")
