"""Command-line entry point.

Exit codes are a stable contract: 0 = sat, 1 = unsat, 2 = unknown, and
everything above 2 is a tool error (64 usage, 65 unparsable model, 66
missing input file, 69 no usable solver, 70 internal error or solver
disagreement).
"""

from __future__ import annotations

import concurrent.futures
import sys
import tempfile
from pathlib import Path

import click

from . import corpus
from .dsl import ModelSyntaxError, parse_expr_text, parse_model
from .encoder import EncodingConfig, PfsMode, Property, SmtScript, encode
from .errors import (LaunchFailureError, ModelGateError,
                     SolverDisagreementError)
from .expr import App, Lit, Ref
from .model import Model, state_is_final, state_is_valid
from .oracle import Plan, bfs_reachability, enumerate_vfs, replay_plan
from .report import RunReport, render_table
from .solver import (Outcome, SolverConfig, Verdict, cross_check,
                     discover_solver, parse_witness, probe_solver, run_solver,
                     witness_instance, witness_plan, witness_state)

EXIT_SAT = 0
EXIT_UNSAT = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NOINPUT = 66
EXIT_UNAVAILABLE = 69
EXIT_SOFTWARE = 70

_OUTCOME_EXIT = {Outcome.SAT: EXIT_SAT, Outcome.UNSAT: EXIT_UNSAT,
                 Outcome.UNKNOWN: EXIT_UNKNOWN}


class _ToolError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_model(path: str) -> Model:
    file = Path(path)
    try:
        source = file.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise _ToolError(EXIT_NOINPUT, f"model file not found: {path}") from None
    except IsADirectoryError:
        raise _ToolError(EXIT_NOINPUT, f"not a model file: {path}") from None
    try:
        return parse_model(source)
    except ModelSyntaxError as err:
        details = "\n".join(f"  {path}:{e}" for e in err.errors)
        raise _ToolError(EXIT_DATA, f"cannot parse {path}:\n{details}") from None


def _split_pins(model: Model, pins: dict[str, int]) -> tuple[dict[str, int], dict[str, int]]:
    fixing: dict[str, int] = {}
    state_pins: dict[str, int] = {}
    for name, value in pins.items():
        if name in model.instance_symbols:
            fixing[name] = value
        elif name in model.state_fields:
            state_pins[name] = value
        else:
            raise _ToolError(EXIT_USAGE,
                             f"'{name}' is neither an instance symbol nor a "
                             f"state field of {model.name}")
    return fixing, state_pins


def _gather_pins(model: Model, nm, nc, bcap, fix: tuple[str, ...]) -> dict[str, int]:
    pins: dict[str, int] = {}
    for name, value in (("nm", nm), ("nc", nc), ("bcap", bcap)):
        if value is not None:
            pins[name] = value
    for item in fix:
        name, sep, raw = item.partition("=")
        if not sep or not name:
            raise _ToolError(EXIT_USAGE, f"--fix expects NAME=VALUE, got '{item}'")
        try:
            pins[name.strip()] = int(raw)
        except ValueError:
            raise _ToolError(EXIT_USAGE, f"--fix value must be an integer: '{item}'") from None
    return pins


def _parse_constraints(model: Model, texts: tuple[str, ...]):
    scope = set(model.instance_symbols) | set(model.state_fields)
    out = []
    for text in texts:
        try:
            out.append(parse_expr_text(text, scope))
        except ModelSyntaxError as err:
            raise _ToolError(EXIT_USAGE, f"bad --constrain '{text}': {err}") from None
    return tuple(out)


def _pin_constraints(model: Model, state_pins: dict[str, int]):
    return tuple(App("=", (Ref(name), Lit(state_pins[name])))
                 for name in model.state_fields if name in state_pins)


def _solver_stack(solver: tuple[str, ...], timeout: float) -> list[SolverConfig]:
    if solver:
        return [SolverConfig(executable=path, timeout=timeout) for path in solver]
    # editable installs live at <repo>/src/modelgate; wheels have no repo shim
    repo_shim = Path(__file__).resolve().parents[2] / "tools" / "z3wasm"
    found = discover_solver(extra_candidates=[str(repo_shim)])
    if found is None:
        raise _ToolError(EXIT_UNAVAILABLE,
                         "no SMT solver found; install one on PATH, set "
                         "MODELGATE_SOLVER, or pass --solver")
    return [SolverConfig(executable=found.executable, timeout=timeout)]


def _run_stack(script: SmtScript, configs: list[SolverConfig],
               script_dir: Path | None, tag: str) -> Verdict:
    verdicts = []
    for i, cfg in enumerate(configs):
        path = None
        if script_dir is not None:
            suffix = f".{i}" if len(configs) > 1 else ""
            path = script_dir / f"{tag}{suffix}.smt2"
        verdicts.append(run_solver(script, cfg, script_path=path))
    return cross_check(verdicts)


def _emit_report(report: RunReport, fmt: str) -> None:
    if fmt == "records":
        click.echo(report.to_json_line())
    else:
        click.echo(report.render_text())


_shared_options = [
    click.option("--nm", type=int, default=None, help="Pin the 'nm' symbol."),
    click.option("--nc", type=int, default=None, help="Pin the 'nc' symbol."),
    click.option("--bcap", type=int, default=None, help="Pin the 'bcap' field."),
    click.option("--fix", multiple=True, metavar="NAME=VALUE",
                 help="Pin any instance symbol or state field."),
    click.option("--constrain", multiple=True, metavar="EXPR",
                 help="Extra boolean constraint over instance symbols and "
                      "initial-state fields (s-expression syntax)."),
]


def _with(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


_solver_options = [
    click.option("--solver", multiple=True, metavar="PATH",
                 help="Solver executable (repeat to cross-check two solvers)."),
    click.option("--timeout", type=float, default=300.0, show_default=True,
                 help="Per-query wall timeout in seconds."),
    click.option("--keep-scripts", is_flag=True,
                 help="Keep generated SMT-LIB files and print their location."),
    click.option("--format", "fmt", type=click.Choice(["text", "records"]),
                 default="text", show_default=True),
]


@click.group()
def cli():
    """Validate transition-system models with an SMT solver and a brute-force oracle."""


def _script_dir(keep_scripts: bool) -> Path | None:
    if not keep_scripts:
        return None
    path = Path(tempfile.mkdtemp(prefix="modelgate-scripts-"))
    click.echo(f"scripts retained in {path}", err=True)
    return path


def _build_config(model: Model, prop: Property, mode: str | None, depth: int | None,
                  pins: dict[str, int], constrain: tuple[str, ...]) -> EncodingConfig:
    fixing, state_pins = _split_pins(model, pins)
    extras = _pin_constraints(model, state_pins) + _parse_constraints(model, constrain)
    if prop is Property.VFS:
        return EncodingConfig(property=Property.VFS, instance_fixing=fixing,
                              extra_constraints=extras)
    return EncodingConfig(property=Property.PFS,
                          pfs_mode=PfsMode(mode or "unrolled"),
                          depth_bound=depth if depth is not None else 100,
                          instance_fixing=fixing, extra_constraints=extras)


def _decode_witness(model: Model, script: SmtScript, verdict: Verdict,
                    report: RunReport) -> None:
    witness = parse_witness(verdict, script)
    instance = witness_instance(witness, model.instance_symbols)
    state = witness_state(witness, model.state_fields, step=0)
    if script.config.property is Property.VFS:
        ok = state_is_valid(model, state, instance) and state_is_final(model, state, instance)
        report.witness_state = state
        report.cross_check = "witness state checks valid and final" if ok else \
            "WITNESS UNSOUND: decoded state fails valid/final"
        if not ok:
            raise _ToolError(EXIT_SOFTWARE, "solver witness failed concrete validation")
        return
    steps = witness_plan(witness, model.param_fields)
    report.plan = steps
    end = replay_plan(model, instance, state, steps)
    if isinstance(end, dict) and state_is_final(model, end, instance):
        report.cross_check = f"plan of length {len(steps)} replays to a final state"
    else:
        report.cross_check = "WITNESS UNSOUND: plan replay failed"
        raise _ToolError(EXIT_SOFTWARE, "solver plan failed concrete replay")


@cli.command()
@click.argument("model_file")
@click.option("--property", "prop", type=click.Choice(["vfs", "pfs"]), required=True)
@click.option("--mode", type=click.Choice(["recursive", "unrolled"]), default=None,
              help="PFS back-end (default unrolled).")
@click.option("--depth", type=int, default=None,
              help="PFS depth bound (default 100).")
@_with(_shared_options)
@_with(_solver_options)
def check(model_file, prop, mode, depth, nm, nc, bcap, fix, constrain,
          solver, timeout, keep_scripts, fmt):
    """Check one property of a model and report the verdict."""
    model = _load_model(model_file)
    pins = _gather_pins(model, nm, nc, bcap, fix)
    config = _build_config(model, Property(prop), mode, depth, pins, constrain)
    script = encode(model, config)
    configs = _solver_stack(solver, timeout)
    verdict = _run_stack(script, configs, _script_dir(keep_scripts), f"{model.name}_{prop}")
    report = RunReport(model_name=model.name, property=prop,
                       mode=config.pfs_mode.value if config.pfs_mode else None,
                       depth=config.depth_bound, instance=pins,
                       outcome=verdict.outcome.value, wall_time=verdict.wall_time,
                       solver_identity=verdict.solver_identity)
    if verdict.outcome is Outcome.SAT:
        _decode_witness(model, script, verdict, report)
    _emit_report(report, fmt)
    return _OUTCOME_EXIT[verdict.outcome]


@cli.command()
@click.argument("model_file")
@click.option("--max-depth", type=int, default=100, show_default=True,
              help="Largest plan length to try.")
@_with(_shared_options)
@_with(_solver_options)
def plan(model_file, max_depth, nm, nc, bcap, fix, constrain,
         solver, timeout, keep_scripts, fmt):
    """Find a minimal plan by iterating the unrolled depth upward."""
    model = _load_model(model_file)
    pins = _gather_pins(model, nm, nc, bcap, fix)
    fixing, _ = _split_pins(model, pins)
    unfixed = [s for s in model.instance_symbols if s not in fixing]
    if unfixed:
        raise _ToolError(EXIT_USAGE, "plan needs a fully fixed instance; missing: "
                         + ", ".join(unfixed))
    configs = _solver_stack(solver, timeout)
    script_dir = _script_dir(keep_scripts)
    notes: list[str] = []
    for d in range(0, max_depth + 1):
        config = _build_config(model, Property.PFS, "unrolled", d, pins, constrain)
        script = encode(model, config)
        verdict = _run_stack(script, configs, script_dir, f"{model.name}_plan_d{d}")
        if verdict.outcome is Outcome.UNKNOWN:
            notes.append(f"depth {d}: solver returned unknown; continuing")
            continue
        if verdict.outcome is Outcome.SAT:
            report = RunReport(model_name=model.name, property="pfs",
                               mode="unrolled", depth=d, instance=pins,
                               outcome="sat", wall_time=verdict.wall_time,
                               solver_identity=verdict.solver_identity,
                               notes=tuple(notes))
            _decode_witness(model, script, verdict, report)
            _emit_report(report, fmt)
            return EXIT_SAT
    report = RunReport(model_name=model.name, property="pfs", mode="unrolled",
                       depth=max_depth, instance=pins, outcome="unsat",
                       notes=tuple(notes) + (f"no plan of length <= {max_depth}",))
    _emit_report(report, fmt)
    return EXIT_UNSAT


@cli.command()
@click.argument("model_file")
@click.option("--depth", type=int, default=30, show_default=True,
              help="BFS depth bound.")
@click.option("--domain-max", type=int, default=None,
              help="Upper bound for per-field enumeration domains "
                   "(default: largest pinned value).")
@click.option("--expect", multiple=True, metavar="PROP=VERDICT",
              help="Flag disagreement with a prior solver verdict, "
                   "e.g. --expect vfs=sat --expect pfs=unsat.")
@_with(_shared_options)
@click.option("--format", "fmt", type=click.Choice(["text", "records"]),
              default="text", show_default=True)
def oracle(model_file, depth, domain_max, expect, nm, nc, bcap, fix, constrain, fmt):
    """Ground truth by brute force: enumerate VFS, search PFS with BFS."""
    if constrain:
        raise _ToolError(EXIT_USAGE, "the oracle works on fully pinned instances; "
                         "use --fix instead of --constrain")
    model = _load_model(model_file)
    pins = _gather_pins(model, nm, nc, bcap, fix)
    fixing, _ = _split_pins(model, pins)
    unfixed = [s for s in model.instance_symbols if s not in fixing]
    if unfixed:
        raise _ToolError(EXIT_USAGE, "oracle needs a fully fixed instance; missing: "
                         + ", ".join(unfixed))
    bound = domain_max if domain_max is not None else max(list(pins.values()) + [2])
    domain = {f: range(0, bound + 1) for f in model.state_fields}

    found = enumerate_vfs(model, pins, domain)
    vfs_report = RunReport(model_name=model.name, property="oracle-vfs",
                           outcome="found" if found is not None else "none",
                           instance=pins, witness_state=found,
                           notes=(f"enumeration domain 0..{bound} per field",))

    result = bfs_reachability(model, pins, max_depth=depth)
    if isinstance(result, Plan):
        pfs_report = RunReport(model_name=model.name, property="oracle-pfs",
                               outcome="found", depth=depth, instance=pins,
                               plan=result.steps)
    else:
        tail = "search space exhausted" if result.frontier_emptied else \
            "depth bound reached with frontier remaining"
        pfs_report = RunReport(model_name=model.name, property="oracle-pfs",
                               outcome="exhausted", depth=depth, instance=pins,
                               notes=(f"{tail}; {result.states_explored} states",))
    _emit_report(vfs_report, fmt)
    _emit_report(pfs_report, fmt)

    disagreements = []
    for item in expect:
        prop, sep, verdict = item.partition("=")
        if not sep or prop not in ("vfs", "pfs") or verdict not in ("sat", "unsat"):
            raise _ToolError(EXIT_USAGE, f"--expect expects vfs|pfs=sat|unsat, got '{item}'")
        oracle_sat = (found is not None) if prop == "vfs" else isinstance(result, Plan)
        if oracle_sat != (verdict == "sat"):
            disagreements.append(
                f"oracle says {prop} is {'sat' if oracle_sat else 'unsat'}, "
                f"solver reportedly said {verdict}")
    for d in disagreements:
        click.echo(f"DISAGREEMENT: {d}", err=True)
    return EXIT_SOFTWARE if disagreements else EXIT_SAT


@cli.command()
@click.argument("corpus_dir", required=False)
@click.option("--depth", type=int, default=100, show_default=True)
@click.option("--mode", type=click.Choice(["recursive", "unrolled"]),
              default="unrolled", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Concurrent solver queries.")
@click.option("--pin", multiple=True, metavar="MODEL:PROP:NAME=V[,NAME=V...]",
              help="Pin an instance for one model/property row.")
@click.option("--no-default-pins", is_flag=True,
              help="Drop the built-in mc_model3 PFS pin.")
@click.option("--constrain", multiple=True, metavar="EXPR")
@_with(_solver_options)
def bench(corpus_dir, depth, mode, jobs, pin, no_default_pins, constrain,
          solver, timeout, keep_scripts, fmt):
    """Run the whole verdict matrix (every corpus model, both properties).

    By default each model gets the guardrail constraints nm > 2, nc > 2 and
    bcap > 2 (where those symbols exist), and mc_model3's PFS row is pinned
    to nm = nc = 3, bcap = 3 so its unsat verdict stays desk-scale.
    """
    directory = Path(corpus_dir) if corpus_dir else corpus.corpus_dir()
    if not directory.is_dir():
        raise _ToolError(EXIT_NOINPUT, f"not a directory: {directory}")
    files = sorted(directory.glob("*.tsm"))
    configs = _solver_stack(solver, timeout)
    script_dir = _script_dir(keep_scripts)

    pin_map: dict[tuple[str, str], dict[str, int]] = {}
    if not no_default_pins:
        pin_map[("mc_model3", "pfs")] = {"nm": 3, "nc": 3, "bcap": 3}
    for item in pin:
        try:
            model_name, prop, assigns = item.split(":", 2)
            values = {}
            for pair in assigns.split(","):
                name, raw = pair.split("=")
                values[name.strip()] = int(raw)
        except ValueError:
            raise _ToolError(EXIT_USAGE, f"bad --pin '{item}'") from None
        pin_map[(model_name, prop)] = values

    def run_row(path: Path, prop: str) -> RunReport:
        try:
            model = _load_model(str(path))
            pins = dict(pin_map.get((model.name, prop), {}))
            guardrails = [text for name, text in
                          (("nm", "(> nm 2)"), ("nc", "(> nc 2)"), ("bcap", "(> bcap 2)"))
                          if name in model.instance_symbols or name in model.state_fields]
            config = _build_config(model, Property(prop),
                                   mode if prop == "pfs" else None,
                                   depth if prop == "pfs" else None,
                                   pins, tuple(guardrails) + constrain)
            script = encode(model, config)
            verdict = _run_stack(script, configs, script_dir,
                                 f"{model.name}_{prop}")
            return RunReport(model_name=model.name, property=prop,
                             mode=config.pfs_mode.value if config.pfs_mode else None,
                             depth=config.depth_bound, instance=pins,
                             outcome=verdict.outcome.value,
                             wall_time=verdict.wall_time,
                             solver_identity=verdict.solver_identity)
        except _ToolError as err:
            return RunReport(model_name=path.stem, property=prop,
                             outcome="error", error=str(err))
        except ModelGateError as err:
            return RunReport(model_name=path.stem, property=prop,
                             outcome="error", error=str(err))

    rows = [(path, prop) for path in files for prop in ("vfs", "pfs")]
    if jobs > 1 and rows:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(lambda rp: run_row(*rp), rows))
    else:
        reports = [run_row(*rp) for rp in rows]

    if fmt == "records":
        for report in reports:
            click.echo(report.to_json_line())
    else:
        click.echo(render_table(reports))
    return EXIT_SOFTWARE if any(r.outcome == "error" for r in reports) else 0


@cli.command()
@click.argument("model_file")
@click.option("--property", "prop", type=click.Choice(["vfs", "pfs"]), required=True)
@click.option("--mode", type=click.Choice(["recursive", "unrolled"]), default=None)
@click.option("--depth", type=int, default=None)
@_with(_shared_options)
def emit(model_file, prop, mode, depth, nm, nc, bcap, fix, constrain):
    """Print the generated SMT-LIB script without running a solver."""
    model = _load_model(model_file)
    pins = _gather_pins(model, nm, nc, bcap, fix)
    config = _build_config(model, Property(prop), mode, depth, pins, constrain)
    script = encode(model, config)
    click.echo(script.text, nl=False)
    return 0


@cli.command()
@click.option("--solver", multiple=True, metavar="PATH")
def doctor(solver):
    """Probe the configured solver(s) and print their identities."""
    try:
        configs = _solver_stack(solver, timeout=60.0)
    except _ToolError as err:
        click.echo(f"no solver: {err}", err=True)
        return EXIT_UNAVAILABLE
    for config in configs:
        try:
            identity = probe_solver(config)
        except ModelGateError as err:
            click.echo(f"{config.executable}: FAILED ({err})", err=True)
            return EXIT_UNAVAILABLE
        click.echo(f"{config.executable}: {identity}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Run the CLI, mapping every failure mode to the exit-code contract."""
    try:
        result = cli.main(args=argv, standalone_mode=False)
        return int(result) if isinstance(result, int) else 0
    except _ToolError as err:
        click.echo(f"error: {err}", err=True)
        return err.code
    except click.UsageError as err:
        err.show()
        return EXIT_USAGE
    except click.ClickException as err:
        err.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_SOFTWARE
    except SolverDisagreementError as err:
        click.echo(f"error: {err}", err=True)
        return EXIT_SOFTWARE
    except LaunchFailureError as err:
        click.echo(f"error: {err}", err=True)
        return EXIT_UNAVAILABLE
    except ModelGateError as err:
        click.echo(f"error: {err}", err=True)
        return EXIT_SOFTWARE


def entrypoint() -> None:
    sys.exit(main())
