"""Command-line front end.

Every command writes tables as CSV (default) or JSON.  A CSV file holds one
block per parameter set::

    # params: family=family1 xi=0.577...
    tau,epsilon,X,Y,Z,p_up,p_plus
    0,-1.7320508075688772,...

Options resolve in the order command-line flag, ``key=value`` config file
(``--config``), built-in default; ``--dump-config`` prints the result.  A
relative ``--out`` path is placed under ``$QUBIT_PULSES_OUTDIR`` when that
variable is set.

Exit status: 0 success, 2 usage error, 3 invalid parameters, 4 numerical
failure (including a failed ``verify``).
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic, figures
from .averaging import analytic_source, numeric_source, time_average
from .dynamics import DissipationRates, evolve_bloch, evolve_schrodinger
from .errors import InvalidParams, NumericalError, Unsupported
from .figures import FIGURES, OBSERVABLES, Block, trajectory_block
from .pulse import Family, PulseParams, eval_bias, make_pulse, pulse_range

OUTDIR_ENV = "QUBIT_PULSES_OUTDIR"
COMMANDS = ("bias", "evolve", "analytic", "average", "sweep", "figure", "verify")
EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    family: str = "family1"
    xi: float = 1.0
    omega: float = 0.0
    phi: float = 0.0
    gamma_phi: float = 0.0
    gamma_relax: float = 0.0
    tau_end: float = 20.0
    tol: float = 1e-9
    grid: int = 1001
    format: str = "csv"
    out: str | None = None
    model: str = "auto"
    source: str = "analytic"
    window: float | None = None
    param: str = "xi"
    lo: float = 0.1
    hi: float = 2.0
    steps: int = 64
    observable: str = "p_avg_analytic"
    jobs: int = 1
    name: str | None = None
    n_xi: int = 20
    seed: int = 0

    def validate(self):
        """Cross-field checks that argparse cannot express."""
        for key in ("xi", "omega", "phi", "gamma_phi", "gamma_relax", "tau_end", "tol", "lo", "hi"):
            if not math.isfinite(getattr(self, key)):
                raise InvalidParams(f"{key} must be finite")
        if self.family not in [f.value for f in Family]:
            raise InvalidParams(f"unknown family {self.family!r}")
        if self.tau_end <= 0:
            raise InvalidParams("tau-end must be positive")
        if self.grid < 2:
            raise InvalidParams("grid needs at least 2 points")
        if self.jobs < 1:
            raise InvalidParams("jobs must be >= 1")
        if self.command == "sweep" and not self.lo < self.hi:
            raise InvalidParams(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.model == "schrodinger" and (self.gamma_phi or self.gamma_relax):
            raise InvalidParams("the schrodinger model has no dissipation; use --model bloch")
        return self

    @property
    def pulse_params(self) -> PulseParams:
        return PulseParams(Family(self.family), self.xi, self.omega, self.phi)

    @property
    def rates(self) -> DissipationRates:
        return DissipationRates(self.gamma_phi, self.gamma_relax)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key, text):
    kind = _FIELD_TYPES[key]
    if text in ("", "none", "None") and "None" in kind:
        return None
    if kind.startswith("float"):
        return float(text)
    if kind.startswith("int"):
        return int(text)
    return text


def read_config(path) -> dict:
    """Parse a ``key=value`` file; ``#`` starts a comment, dashes in keys are allowed."""
    values = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams(f"{path}:{n}: expected key=value, got {raw!r}")
        key, text = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES or key == "command":
            raise InvalidParams(f"{path}:{n}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, text)
        except ValueError as exc:
            raise InvalidParams(f"{path}:{n}: bad value for {key}: {exc}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("pulse and run options")
    # defaults stay None so that unset flags fall through to the config file
    g.add_argument("--family", choices=[f.value for f in Family])
    g.add_argument("--xi", type=float, help="bias scale eps0/Delta")
    g.add_argument("--omega", type=float, help="family3 frequency")
    g.add_argument("--phi", type=float, help="family3 phase (rad)")
    g.add_argument("--gamma-phi", type=float, help="dephasing rate")
    g.add_argument("--gamma-relax", type=float, help="relaxation rate")
    g.add_argument("--tau-end", type=float, help="final dimensionless time")
    g.add_argument("--tol", type=float, help="integrator tolerance in [1e-12, 1e-4]")
    g.add_argument("--grid", type=int, help="number of output samples")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--out", help=f"output file (relative paths go under ${OUTDIR_ENV})")
    g.add_argument("--jobs", type=int, help="worker processes for sweeps")
    g.add_argument("--config", help="key=value file with option defaults")
    g.add_argument("--dump-config", action="store_true", help="print the resolved options and exit")

    parser = argparse.ArgumentParser(prog="qubit-pulses", description="Driven qubit under exactly solvable bias pulses.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bias", parents=[common], help="tabulate eps(tau)")
    p = sub.add_parser("evolve", parents=[common], help="integrate the dynamics")
    p.add_argument("--model", choices=("auto", "schrodinger", "bloch"), help="auto: bloch when any rate is nonzero")
    sub.add_parser("analytic", parents=[common], help="closed-form P_up(tau) for family1/family2")
    p = sub.add_parser("average", parents=[common], help="long-time average of P_up")
    p.add_argument("--source", choices=("analytic", "numeric"))
    p.add_argument("--window", type=float, help="averaging window T")
    p = sub.add_parser("sweep", parents=[common], help="observable versus xi")
    p.add_argument("--param", choices=("xi",))
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--observable", choices=OBSERVABLES)
    p.add_argument("--window", type=float, help="averaging window for p_avg_numeric")
    p = sub.add_parser("figure", parents=[common], help="data series behind a reference figure")
    p.add_argument("name", choices=FIGURES)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--steps", type=int)
    p = sub.add_parser("verify", parents=[common], help="oracle and invariant checks")
    p.add_argument("--n-xi", type=int, help="random xi samples per family")
    p.add_argument("--seed", type=int)
    return parser


def resolve(args: argparse.Namespace) -> tuple[RunConfig, set]:
    """Merge flags over the config file over the defaults.

    Also returns the names of the options that were set explicitly.
    """
    values = read_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in _FIELD_TYPES and value is not None:
            values[key] = value
    explicit = set(values)
    values["command"] = args.command
    if args.command == "figure":
        values.setdefault("tol", 1e-10)
    return RunConfig(**values).validate(), explicit


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k}={'' if v is None else v}\n" for k, v in dataclasses.asdict(cfg).items())


# ---------------------------------------------------------------- serialization


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def write_csv(blocks, stream):
    for block in blocks:
        stream.write("# params: " + " ".join(f"{k}={_fmt(v)}" for k, v in block.params.items()) + "\n")
        stream.write(",".join(block.columns) + "\n")
        for row in np.atleast_2d(block.data):
            stream.write(",".join(format(float(x), ".17g") for x in row) + "\n")


def read_csv(text: str) -> list[Block]:
    """Inverse of :func:`write_csv`; parameter values come back as strings."""
    blocks, params, columns, rows = [], None, None, []

    def flush():
        if columns is not None:
            blocks.append(Block(params, columns, np.array(rows, dtype=float).reshape(-1, len(columns))))

    for line in text.splitlines():
        if line.startswith("# params:"):
            flush()
            params = dict(item.split("=", 1) for item in line[len("# params:") :].split())
            columns, rows = None, []
        elif columns is None:
            columns = tuple(line.split(","))
        elif line:
            rows.append([float(x) for x in line.split(",")])
    flush()
    return blocks


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_json(blocks, stream):
    doc = {
        "blocks": [
            {"params": _jsonable(b.params), "columns": list(b.columns), "data": np.atleast_2d(b.data).tolist()}
            for b in blocks
        ]
    }
    json.dump(doc, stream, indent=1)
    stream.write("\n")


def output_path(out: str | None) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get(OUTDIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def emit(text: str, cfg: RunConfig):
    path = output_path(cfg.out)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def render(blocks, fmt: str) -> str:
    buf = io.StringIO()
    (write_json if fmt == "json" else write_csv)(blocks, buf)
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def _pulse_meta(cfg: RunConfig) -> dict:
    meta = dict(family=cfg.family, xi=cfg.xi)
    if cfg.family == Family.FAMILY3.value:
        meta.update(omega=cfg.omega, phi=cfg.phi)
    return meta


def cmd_bias(cfg: RunConfig) -> list[Block]:
    pulse = make_pulse(cfg.pulse_params)
    tau = np.linspace(0.0, cfg.tau_end, cfg.grid)
    eps = np.broadcast_to(eval_bias(pulse, tau), tau.shape)
    lo, hi = pulse_range(pulse)
    meta = dict(command="bias", **_pulse_meta(cfg), theta=pulse.theta, range_min=lo, range_max=hi)
    return [Block(meta, ("tau", "epsilon"), np.column_stack([tau, eps]))]


def cmd_evolve(cfg: RunConfig) -> list[Block]:
    pulse = make_pulse(cfg.pulse_params)
    grid = np.linspace(0.0, cfg.tau_end, cfg.grid)
    bloch = cfg.model == "bloch" or (cfg.model == "auto" and (cfg.gamma_phi or cfg.gamma_relax))
    if bloch:
        traj = evolve_bloch(pulse, cfg.rates, cfg.tau_end, cfg.tol, grid)
    else:
        traj = evolve_schrodinger(pulse, cfg.tau_end, cfg.tol, grid)
    meta = dict(
        command="evolve",
        model="bloch" if bloch else "schrodinger",
        **_pulse_meta(cfg),
        gamma_phi=cfg.gamma_phi,
        gamma_relax=cfg.gamma_relax,
        tol=cfg.tol,
        n_steps=traj.stats.n_steps,
        n_rejected=traj.stats.n_rejected,
        max_consecutive_rejections=traj.stats.max_consecutive_rejections,
    )
    return [trajectory_block(traj, **meta)]


def _closed_forms(family: str):
    forms = {Family.FAMILY1.value: (analytic.p1_up, analytic.p1_avg), Family.FAMILY2.value: (analytic.p2_up, analytic.p2_avg)}
    if family not in forms:
        raise Unsupported(f"no closed form for {family}")
    return forms[family]


def cmd_analytic(cfg: RunConfig) -> list[Block]:
    up, avg = _closed_forms(cfg.family)
    tau = np.linspace(0.0, cfg.tau_end, cfg.grid)
    meta = dict(command="analytic", family=cfg.family, xi=cfg.xi, p_avg=float(avg(cfg.xi)))
    return [Block(meta, ("tau", "p_up"), np.column_stack([tau, up(tau, cfg.xi)]))]


def cmd_average(cfg: RunConfig) -> list[Block]:
    params = cfg.pulse_params
    pulse = make_pulse(params)
    if cfg.source == "analytic":
        if cfg.gamma_phi or cfg.gamma_relax:
            raise Unsupported("closed forms exist only without dissipation; use --source numeric")
        source = analytic_source(params.family, cfg.xi)
        rates = None
    else:
        rates = cfg.rates if (cfg.gamma_phi or cfg.gamma_relax) else None
        source = numeric_source(params, rates, cfg.tol)
    window = cfg.window if cfg.window is not None else figures.default_window(rates)
    res = time_average(source, window, theta=pulse.theta)
    meta = dict(command="average", source=cfg.source, **_pulse_meta(cfg), gamma_phi=cfg.gamma_phi, gamma_relax=cfg.gamma_relax)
    return [Block(meta, ("xi", "value", "window", "error_estimate"), np.array([[cfg.xi, res.value, res.window, res.error_estimate]]))]


def cmd_sweep(cfg: RunConfig) -> list[Block]:
    kwargs = dict(gamma_phi=cfg.gamma_phi, gamma_relax=cfg.gamma_relax)
    if cfg.observable != "p_avg_analytic":
        kwargs["tol"] = cfg.tol
    if cfg.observable in ("p_plus_max", "super_half_duration"):
        kwargs["tau_end"] = cfg.tau_end
    if cfg.observable == "p_avg_numeric" and cfg.window is not None:
        kwargs["window"] = cfg.window
    return [figures.xi_sweep(cfg.observable, cfg.pulse_params, cfg.lo, cfg.hi, cfg.steps, cfg.jobs, **kwargs)]


def cmd_figure(cfg: RunConfig, explicit: set) -> list[Block]:
    # only explicitly given options override the reference parameter sets
    pick = {k: getattr(cfg, k) for k in ("tau_end", "grid", "lo", "hi", "steps") if k in explicit}
    return figures.figure(cfg.name, tol=cfg.tol, jobs=cfg.jobs, **pick)


def cmd_verify(cfg: RunConfig) -> dict:
    report = figures.verify(tol=cfg.tol, n_xi=cfg.n_xi, seed=cfg.seed)
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        err = "" if c["max_error"] is None else f"  max_error={c['max_error']:.3g} threshold={c['threshold']:.3g}"
        print(f"{status}  {c['name']}{err}", file=sys.stderr)
    return report


def run(cfg: RunConfig, explicit: set = frozenset()) -> int:
    if cfg.command == "verify":
        report = cmd_verify(cfg)
        emit(json.dumps(_jsonable(report), indent=1) + "\n", cfg)
        return EXIT_OK if report["passed"] else EXIT_NUMERICAL
    handler = {
        "bias": cmd_bias,
        "evolve": cmd_evolve,
        "analytic": cmd_analytic,
        "average": cmd_average,
        "sweep": cmd_sweep,
    }.get(cfg.command)
    blocks = cmd_figure(cfg, explicit) if cfg.command == "figure" else handler(cfg)
    emit(render(blocks, cfg.format), cfg)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "steps", None) is not None and args.steps < 2:
        parser.error(f"--steps must be >= 2, got {args.steps}")
    try:
        cfg, explicit = resolve(args)
        if cfg.command == "sweep" and cfg.steps < 2:
            parser.error(f"steps must be >= 2, got {cfg.steps}")
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        return run(cfg, explicit)
    except (InvalidParams, Unsupported) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
