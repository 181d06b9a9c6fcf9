"""Run an external SMT solver on a script and decode what it says.

Process-per-query with file-based input: the script is written to a temp
directory, the solver is invoked as ``<executable> <args...> <script>``,
and stdout is parsed for the verdict, the model dump, and (best-effort)
statistics.  Script files are cleaned up on success and retained when
something goes wrong so the failing query can be replayed by hand.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
import time
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import (LaunchFailureError, MissingSymbolError, ProtocolError,
                     SolverDisagreementError, SolverExitError,
                     WitnessParseError, WitnessRangeError)
from .encoder import (InstanceSymbol, ParamArray, ParamAt, SmtScript,
                      StateFieldAt, StateVector, StepCount, SymbolDescriptor)
from .sexpr import SAtom, SList, SNode, SexprError, read_all

SOLVER_ENV_VAR = "MODELGATE_SOLVER"
INT64_MAX = 2**63 - 1


class Outcome(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverConfig:
    executable: str
    extra_args: tuple[str, ...] = ()
    timeout: float = 300.0
    memory_note_mb: int | None = None  # advisory only; not enforced

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    raw_model: str | None
    stats: dict[str, float]
    wall_time: float
    solver_identity: str


@dataclass(frozen=True)
class Witness:
    assignments: dict[SymbolDescriptor, int]
    step_count: int | None = None


_identity_cache: dict[str, str] = {}


def probe_solver(config: SolverConfig) -> str:
    """Return the solver's version banner, or raise a launch/protocol error."""
    if not config.executable:
        raise LaunchFailureError("no solver executable configured")
    last_error: Exception | None = None
    for flag in ("--version", "-version"):
        try:
            proc = subprocess.run([config.executable, flag],
                                  capture_output=True, text=True, timeout=60)
        except FileNotFoundError as err:
            raise LaunchFailureError(
                f"solver executable not found: {config.executable}") from err
        except PermissionError as err:
            raise LaunchFailureError(
                f"solver executable not runnable: {config.executable}") from err
        except subprocess.TimeoutExpired as err:
            last_error = ProtocolError("version probe timed out")
            continue
        banner = proc.stdout.strip() or proc.stderr.strip()
        if proc.returncode == 0 and banner:
            return banner.splitlines()[0]
        last_error = (SolverExitError(f"version probe exited {proc.returncode}")
                      if proc.returncode != 0
                      else ProtocolError("version probe printed nothing"))
    assert last_error is not None
    raise last_error


def solver_identity(config: SolverConfig) -> str:
    """Cached best-effort identity; never fails a run over a version flag."""
    key = config.executable
    if key not in _identity_cache:
        try:
            _identity_cache[key] = probe_solver(config)
        except LaunchFailureError:
            raise
        except Exception:
            _identity_cache[key] = "unknown solver"
    return _identity_cache[key]


_STATUS_TOKENS = {"sat": Outcome.SAT, "unsat": Outcome.UNSAT,
                  "unknown": Outcome.UNKNOWN}
_STAT_RE = re.compile(r":([A-Za-z][\w.-]*)\s+([0-9]+(?:\.[0-9]+)?)\b")


def _parse_stats(text: str) -> dict[str, float]:
    return {key: float(val) for key, val in _STAT_RE.findall(text)}


def run_solver(script: SmtScript, config: SolverConfig, *,
               script_path: str | os.PathLike | None = None) -> Verdict:
    """Execute one query; timeouts come back as unknown, never as crashes."""
    identity = solver_identity(config)
    own_dir: str | None = None
    if script_path is None:
        own_dir = tempfile.mkdtemp(prefix="modelgate-")
        path = Path(own_dir) / "query.smt2"
    else:
        path = Path(script_path)
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(script.text, encoding="utf-8")

    argv = [config.executable, *config.extra_args, str(path)]
    started = time.monotonic()
    try:
        proc = subprocess.run(argv, capture_output=True, text=True,
                              timeout=config.timeout)
    except subprocess.TimeoutExpired:
        wall = time.monotonic() - started
        if own_dir:
            shutil.rmtree(own_dir, ignore_errors=True)
        return Verdict(Outcome.UNKNOWN, None,
                       {"timeout": 1.0, "timeout-seconds": float(config.timeout)},
                       wall, identity)
    except FileNotFoundError as err:
        raise LaunchFailureError(
            f"solver executable not found: {config.executable} "
            f"(script retained at {path})") from err
    except PermissionError as err:
        raise LaunchFailureError(
            f"solver executable not runnable: {config.executable} "
            f"(script retained at {path})") from err
    wall = time.monotonic() - started

    if proc.returncode != 0:
        excerpt = (proc.stderr or proc.stdout).strip()[:500]
        raise SolverExitError(
            f"solver exited with code {proc.returncode}: {excerpt} "
            f"(script retained at {path})")

    lines = proc.stdout.splitlines()
    status_idx = next((i for i, line in enumerate(lines)
                       if line.strip() in _STATUS_TOKENS), None)
    if status_idx is None:
        excerpt = proc.stdout.strip()[:300] or proc.stderr.strip()[:300]
        raise ProtocolError(
            f"no sat/unsat/unknown token in solver output: {excerpt!r} "
            f"(script retained at {path})")
    outcome = _STATUS_TOKENS[lines[status_idx].strip()]
    remainder = "\n".join(lines[status_idx + 1:])

    raw_model = None
    if outcome is Outcome.SAT and script.config.produce_model:
        raw_model = remainder

    if own_dir:
        shutil.rmtree(own_dir, ignore_errors=True)
    return Verdict(outcome, raw_model, _parse_stats(proc.stdout), wall, identity)


def cross_check(verdicts: Sequence[Verdict]) -> Verdict:
    """Merge verdicts from several solvers; sat/unsat conflicts are fatal.

    Sound solvers cannot disagree, so a conflict means a broken setup (or a
    broken script) and is raised rather than reported.  Unknowns defer to
    whichever solver decided.
    """
    outcomes = {v.outcome for v in verdicts}
    if Outcome.SAT in outcomes and Outcome.UNSAT in outcomes:
        detail = ", ".join(f"{v.solver_identity}: {v.outcome.value}" for v in verdicts)
        raise SolverDisagreementError(f"solver verdicts contradict: {detail}")
    for v in verdicts:
        if v.outcome is not Outcome.UNKNOWN:
            return v
    return verdicts[0]


def discover_solver(extra_candidates: Sequence[str] = ()) -> SolverConfig | None:
    """Locate a usable solver: env override, PATH, then provided fallbacks."""
    candidates: list[str] = []
    env = os.environ.get(SOLVER_ENV_VAR)
    if env:
        candidates.append(env)
    for name in ("z3", "cvc5", "z3wasm"):
        found = shutil.which(name)
        if found:
            candidates.append(found)
    candidates.extend(str(c) for c in extra_candidates)
    for cand in candidates:
        if Path(cand).is_file() and os.access(cand, os.X_OK):
            return SolverConfig(executable=cand)
    return None


# -- witness decoding --------------------------------------------------------


class _ArrayValue:
    """Finite view of an SMT array model value."""

    def __init__(self, lookup):
        self._lookup = lookup

    def __getitem__(self, index: int) -> int:
        return self._lookup(index)


def _atom_int(text: str) -> int | None:
    if re.fullmatch(r"-?[0-9]+", text):
        return int(text)
    return None


class _TermEvaluator:
    """Evaluate the ground terms Z3-style model dumps are made of."""

    def __init__(self, defs: dict[str, tuple[tuple[str, ...], SNode]]):
        self.defs = defs
        self._cache: dict[str, object] = {}

    def const(self, name: str):
        if name not in self.defs:
            raise MissingSymbolError([name])
        if name not in self._cache:
            params, body = self.defs[name]
            if params:
                raise WitnessParseError(
                    f"'{name}' is a function in the model output, expected a constant")
            self._cache[name] = self.term(body, {})
        return self._cache[name]

    def term(self, node: SNode, env: dict[str, object]):
        if isinstance(node, SAtom):
            text = node.text
            value = _atom_int(text)
            if value is not None:
                return value
            if text == "true":
                return True
            if text == "false":
                return False
            if text in env:
                return env[text]
            if text in self.defs:
                return self.const(text)
            raise WitnessParseError(f"cannot evaluate model symbol '{text}'")
        items = node.items
        if not items:
            raise WitnessParseError("empty term in model output")
        head = items[0]
        if isinstance(head, SList):
            # ((as const (Array Int Int)) v)  and  ((_ as-array f))-style heads
            inner = [i.text for i in head.items if isinstance(i, SAtom)]
            if inner[:2] == ["as", "const"]:
                default = self.term(items[1], env)
                return _ArrayValue(lambda _i, d=default: d)
            raise WitnessParseError(f"unsupported model term head: {inner}")
        op = head.text
        if op == "let":
            bindings = items[1]
            new_env = dict(env)
            assert isinstance(bindings, SList)
            for b in bindings.items:
                assert isinstance(b, SList) and len(b.items) == 2
                bname = b.items[0]
                assert isinstance(bname, SAtom)
                new_env[bname.text] = self.term(b.items[1], env)
            return self.term(items[2], new_env)
        if op == "store":
            base = self.term(items[1], env)
            index = self.term(items[2], env)
            value = self.term(items[3], env)
            return _ArrayValue(lambda i, b=base, idx=index, v=value:
                               v if i == idx else b[i])
        if op == "_" and len(items) == 3 and isinstance(items[1], SAtom) \
                and items[1].text == "as-array":
            fname = items[2]
            assert isinstance(fname, SAtom)
            return self._as_function(fname.text)
        if op == "lambda":
            params = [p.items[0].text for p in items[1].items  # type: ignore[union-attr]
                      if isinstance(p, SList) and p.items and isinstance(p.items[0], SAtom)]
            body = items[2]
            return _ArrayValue(lambda i, ps=tuple(params), b=body:
                               self._expect_int(self.term(b, {ps[0]: i})))
        if op == "ite":
            cond = self.term(items[1], env)
            return self.term(items[2] if cond else items[3], env)
        if op in ("=", "distinct", "<", "<=", ">", ">="):
            a = self._expect_int(self.term(items[1], env))
            b = self._expect_int(self.term(items[2], env))
            return {"=": a == b, "distinct": a != b, "<": a < b,
                    "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        if op == "-":
            vals = [self._expect_int(self.term(t, env)) for t in items[1:]]
            return -vals[0] if len(vals) == 1 else vals[0] - vals[1]
        if op == "+":
            return sum(self._expect_int(self.term(t, env)) for t in items[1:])
        if op == "*":
            out = 1
            for t in items[1:]:
                out *= self._expect_int(self.term(t, env))
            return out
        if op in ("and", "or", "not"):
            vals = [self.term(t, env) for t in items[1:]]
            if op == "not":
                return not vals[0]
            return all(vals) if op == "and" else any(vals)
        raise WitnessParseError(f"unsupported model term operator '{op}'")

    def _as_function(self, fname: str) -> _ArrayValue:
        if fname not in self.defs:
            raise MissingSymbolError([fname])
        params, body = self.defs[fname]
        if len(params) != 1:
            raise WitnessParseError(
                f"as-array function '{fname}' must take one argument")
        return _ArrayValue(lambda i: self._expect_int(
            self.term(body, {params[0]: i})))

    @staticmethod
    def _expect_int(value) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise WitnessParseError("expected an integer model value")
        return value


def _collect_defs(raw_model: str) -> dict[str, tuple[tuple[str, ...], SNode]]:
    try:
        nodes = read_all(raw_model)
    except SexprError as err:
        raise WitnessParseError(f"malformed model output: {err}") from None
    defs: dict[str, tuple[tuple[str, ...], SNode]] = {}

    def scan(items):
        for node in items:
            if not isinstance(node, SList) or not node.items:
                continue
            head = node.items[0]
            if isinstance(head, SAtom) and head.text == "model":
                scan(node.items[1:])
                continue
            if isinstance(head, SAtom) and head.text == "define-fun" \
                    and len(node.items) >= 5:
                name_node, args_node, _sort, body = node.items[1:5]
                if not isinstance(name_node, SAtom) or not isinstance(args_node, SList):
                    continue
                params = tuple(a.items[0].text for a in args_node.items
                               if isinstance(a, SList) and a.items
                               and isinstance(a.items[0], SAtom))
                defs[name_node.text] = (params, body)
            else:
                scan(node.items)

    scan(nodes)
    return defs


def _check_range(name: str, value: int) -> int:
    if abs(value) > INT64_MAX:
        raise WitnessRangeError(
            f"witness value for '{name}' is outside the signed 64-bit range: {value}")
    return value


def parse_witness(verdict: Verdict, script: SmtScript) -> Witness:
    """Decode a sat verdict's model dump through the script's symbol map."""
    if verdict.outcome is not Outcome.SAT:
        raise WitnessParseError("witness decoding requires a sat verdict")
    if verdict.raw_model is None:
        raise WitnessParseError("verdict carries no model output "
                                "(was produce_model set?)")
    defs = _collect_defs(verdict.raw_model)
    ev = _TermEvaluator(defs)

    step_count: int | None = None
    for name, desc in script.symbol_map.items():
        if isinstance(desc, StepCount):
            value = ev.const(name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise WitnessParseError(f"step count '{name}' is not an integer")
            step_count = _check_range(name, value)

    assignments: dict[SymbolDescriptor, int] = {}
    missing: list[str] = []
    for name, desc in script.symbol_map.items():
        if isinstance(desc, (InstanceSymbol,)):
            needed = True
        elif isinstance(desc, StateFieldAt):
            needed = desc.step == 0 or (step_count is not None and desc.step <= step_count)
        elif isinstance(desc, ParamAt):
            needed = step_count is not None and desc.step < step_count
        elif isinstance(desc, (StateVector, ParamArray, StepCount)):
            needed = True
        else:  # pragma: no cover - closed descriptor union
            needed = False
        if not needed:
            continue
        if isinstance(desc, StepCount):
            assert step_count is not None
            assignments[desc] = step_count
            continue
        if name not in defs and isinstance(desc, (InstanceSymbol, StateFieldAt, ParamAt)):
            missing.append(name)
            continue
        if isinstance(desc, (InstanceSymbol, StateFieldAt, ParamAt)):
            value = ev.const(name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise WitnessParseError(f"'{name}' is not an integer in the model")
            assignments[desc] = _check_range(name, value)
        elif isinstance(desc, StateVector):
            if name not in defs:
                missing.append(name)
                continue
            array = ev.const(name)
            if not isinstance(array, _ArrayValue):
                raise WitnessParseError(f"'{name}' is not an array in the model")
            for i, fname in enumerate(desc.fields):
                assignments[StateFieldAt(0, fname)] = _check_range(
                    f"{name}[{i}]", array[i])
        elif isinstance(desc, ParamArray):
            if step_count is None:
                raise WitnessParseError(
                    "parameter array requires a step count in the symbol map")
            if name not in defs:
                if step_count > 0 and desc.params:
                    missing.append(name)
                continue
            array = ev.const(name)
            if not isinstance(array, _ArrayValue):
                raise WitnessParseError(f"'{name}' is not an array in the model")
            stride = len(desc.params)
            for k in range(step_count):
                for j, pname in enumerate(desc.params):
                    assignments[ParamAt(k, pname)] = _check_range(
                        f"{name}[{stride * k + j}]", array[stride * k + j])
    if missing:
        raise MissingSymbolError(sorted(missing))
    return Witness(assignments, step_count)


def witness_state(witness: Witness, fields: Sequence[str], step: int = 0) -> dict[str, int]:
    """Project a concrete state out of a witness."""
    out = {}
    for f in fields:
        key = StateFieldAt(step, f)
        if key not in witness.assignments:
            raise MissingSymbolError([f"s{step}_{f}"])
        out[f] = witness.assignments[key]
    return out


def witness_instance(witness: Witness, symbols: Sequence[str]) -> dict[str, int]:
    out = {}
    for s in symbols:
        key = InstanceSymbol(s)
        if key not in witness.assignments:
            raise MissingSymbolError([s])
        out[s] = witness.assignments[key]
    return out


def witness_plan(witness: Witness, params: Sequence[str]) -> tuple[dict[str, int], ...]:
    """Extract the per-step parameter assignments for steps below step_count."""
    if witness.step_count is None:
        return ()
    steps = []
    for k in range(witness.step_count):
        step = {}
        for p in params:
            key = ParamAt(k, p)
            if key not in witness.assignments:
                raise MissingSymbolError([f"p{k}_{p}"])
            step[p] = witness.assignments[key]
        steps.append(step)
    return tuple(steps)
