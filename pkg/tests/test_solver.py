from __future__ import annotations

import re
import stat
from pathlib import Path

import pytest

from conftest import requires_solver
from modelgate import (EncodingConfig, PfsMode, Property, SolverConfig,
                       cross_check, discover_solver, encode_pfs_recursive,
                       encode_pfs_unrolled, encode_vfs, parse_witness,
                       probe_solver, run_solver, witness_instance,
                       witness_plan, witness_state)
from modelgate.dsl import parse_expr_text
from modelgate.encoder import ParamAt, StateFieldAt
from modelgate.errors import (LaunchFailureError, MissingSymbolError,
                              ProtocolError, SolverDisagreementError,
                              SolverExitError, WitnessParseError,
                              WitnessRangeError)
from modelgate.model import state_is_final, state_is_valid
from modelgate.solver import Outcome, Verdict

VFS = EncodingConfig(property=Property.VFS)


def guardrails(model):
    scope = set(model.instance_symbols) | set(model.state_fields)
    return tuple(parse_expr_text(t, scope)
                 for t in ("(> nm 2)", "(> nc 2)", "(> bcap 2)"))


def fixed_332(model):
    scope = set(model.instance_symbols) | set(model.state_fields)
    return dict(instance_fixing={"nm": 3, "nc": 3},
                extra_constraints=(parse_expr_text("(= bcap 2)", scope),))


def fixed_333(model):
    scope = set(model.instance_symbols) | set(model.state_fields)
    return dict(instance_fixing={"nm": 3, "nc": 3},
                extra_constraints=(parse_expr_text("(= bcap 3)", scope),))


def fake_solver(tmp_path: Path, name: str, body: str) -> str:
    path = tmp_path / name
    path.write_text(f"#!/bin/sh\n{body}\n")
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


# -- live solver runs ---------------------------------------------------------

@requires_solver
def test_vfs_verdicts_match_expectations(m1, m2, solver_config):
    sat_script = encode_vfs(m1, EncodingConfig(property=Property.VFS,
                                               extra_constraints=guardrails(m1)))
    verdict = run_solver(sat_script, solver_config)
    assert verdict.outcome is Outcome.SAT
    assert verdict.raw_model
    assert verdict.solver_identity

    unsat_script = encode_vfs(m2, EncodingConfig(property=Property.VFS,
                                                 extra_constraints=guardrails(m2)))
    verdict = run_solver(unsat_script, solver_config)
    assert verdict.outcome is Outcome.UNSAT
    assert verdict.raw_model is None


@requires_solver
def test_wall_timeout_yields_unknown_with_marker(m1, solver_exe):
    script = encode_pfs_unrolled(m1, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.UNROLLED, depth_bound=40,
        extra_constraints=guardrails(m1)))
    config = SolverConfig(executable=solver_exe, timeout=0.001)
    verdict = run_solver(script, config)
    assert verdict.outcome is Outcome.UNKNOWN
    assert verdict.stats.get("timeout") == 1.0
    assert verdict.wall_time <= config.timeout + 1.0


@requires_solver
def test_sat_vfs_witness_decodes_to_a_valid_final_state(m1, solver_config):
    script = encode_vfs(m1, EncodingConfig(property=Property.VFS,
                                           extra_constraints=guardrails(m1)))
    verdict = run_solver(script, solver_config)
    witness = parse_witness(verdict, script)
    state = witness_state(witness, m1.state_fields)
    instance = witness_instance(witness, m1.instance_symbols)
    assert state_is_valid(m1, state, instance)
    assert state_is_final(m1, state, instance)
    assert instance["nm"] > 2 and instance["nc"] > 2 and state["bcap"] > 2


@requires_solver
def test_pfs_witness_at_depth_eleven_has_eleven_steps(m1, solver_config):
    script = encode_pfs_unrolled(m1, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.UNROLLED, depth_bound=11,
        **fixed_332(m1)))
    verdict = run_solver(script, solver_config)
    assert verdict.outcome is Outcome.SAT
    witness = parse_witness(verdict, script)
    assert witness.step_count == 11
    plan = witness_plan(witness, m1.param_fields)
    assert len(plan) == 11 and all(len(step) == 2 for step in plan)


@requires_solver
def test_recursive_witness_arrays_decode(m1, solver_config):
    script = encode_pfs_recursive(m1, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.RECURSIVE, depth_bound=12,
        **fixed_332(m1)))
    verdict = run_solver(script, solver_config)
    assert verdict.outcome is Outcome.SAT
    witness = parse_witness(verdict, script)
    assert witness.step_count == 11
    plan = witness_plan(witness, m1.param_fields)
    start = witness_state(witness, m1.state_fields)
    assert start == {"bcap": 2, "nm1": 3, "nc1": 3, "bp": 1, "nm2": 0, "nc2": 0}
    assert len(plan) == 11


@requires_solver
def test_statistics_harvested_when_solver_reports_them(m1, solver_exe):
    if "z3" not in Path(solver_exe).name:
        pytest.skip("statistics flag is z3-specific")
    script = encode_vfs(m1, VFS)
    config = SolverConfig(executable=solver_exe, extra_args=("-st",), timeout=120)
    verdict = run_solver(script, config)
    assert verdict.outcome is Outcome.SAT
    assert any(key in verdict.stats for key in ("rlimit-count", "memory", "time"))


@requires_solver
def test_probe_reports_a_version(solver_config):
    banner = probe_solver(solver_config)
    assert banner and re.search(r"\d", banner)


# -- failure modes (no real solver needed) ------------------------------------

def test_probe_empty_path_is_a_launch_failure():
    with pytest.raises(LaunchFailureError):
        probe_solver(SolverConfig(executable=""))


def test_probe_missing_file_is_a_launch_failure():
    with pytest.raises(LaunchFailureError):
        probe_solver(SolverConfig(executable="/no/such/solver"))


def test_probe_non_solver_executable_fails(tmp_path):
    quiet = fake_solver(tmp_path, "quiet", "exit 0")
    with pytest.raises((ProtocolError, SolverExitError)):
        probe_solver(SolverConfig(executable=quiet))


def test_run_solver_missing_executable(m1):
    script = encode_vfs(m1, VFS)
    with pytest.raises(LaunchFailureError):
        run_solver(script, SolverConfig(executable="/no/such/solver"))


def test_run_solver_without_status_token_is_a_protocol_error(m1, tmp_path):
    chatty = fake_solver(tmp_path, "chatty", 'echo "hello"; echo "world"')
    script = encode_vfs(m1, VFS)
    with pytest.raises(ProtocolError):
        run_solver(script, SolverConfig(executable=chatty))


def test_run_solver_nonzero_exit_retains_script(m1, tmp_path):
    angry = fake_solver(tmp_path, "angry", 'echo "boom" >&2; exit 3')
    script = encode_vfs(m1, VFS)
    with pytest.raises(SolverExitError) as err:
        run_solver(script, SolverConfig(executable=angry))
    match = re.search(r"script retained at ([^)\s]+)", str(err.value))
    assert match and Path(match.group(1)).is_file()


def test_verdict_requires_printed_token_not_inference(m1, tmp_path):
    # a solver that prints nothing but exits 0 must not be read as unsat
    silent = fake_solver(tmp_path, "silent", "true")
    script = encode_vfs(m1, VFS)
    with pytest.raises(ProtocolError):
        run_solver(script, SolverConfig(executable=silent))


def test_cross_check_flags_disagreement(m1, tmp_path):
    yes = fake_solver(tmp_path, "yes", "echo sat")
    no = fake_solver(tmp_path, "no", "echo unsat")
    script = encode_vfs(m1, EncodingConfig(property=Property.VFS,
                                           produce_model=False))
    verdicts = [run_solver(script, SolverConfig(executable=yes)),
                run_solver(script, SolverConfig(executable=no))]
    with pytest.raises(SolverDisagreementError):
        cross_check(verdicts)


def test_cross_check_prefers_decided_outcomes(m1, tmp_path):
    shrug = fake_solver(tmp_path, "shrug", "echo unknown")
    no = fake_solver(tmp_path, "no", "echo unsat")
    script = encode_vfs(m1, EncodingConfig(property=Property.VFS,
                                           produce_model=False))
    merged = cross_check([run_solver(script, SolverConfig(executable=shrug)),
                          run_solver(script, SolverConfig(executable=no))])
    assert merged.outcome is Outcome.UNSAT


def test_discover_solver_env_override(tmp_path, monkeypatch):
    fake = fake_solver(tmp_path, "mysolver", "echo sat")
    monkeypatch.setenv("MODELGATE_SOLVER", fake)
    found = discover_solver()
    assert found is not None and found.executable == fake
    monkeypatch.setenv("MODELGATE_SOLVER", str(tmp_path / "nope"))
    monkeypatch.setattr("shutil.which", lambda *_: None)
    assert discover_solver() is None


def test_timeout_must_be_positive():
    with pytest.raises(ValueError):
        SolverConfig(executable="z3", timeout=0)


# -- witness decoding (crafted model dumps) ------------------------------------

def sat_verdict(raw: str) -> Verdict:
    return Verdict(Outcome.SAT, raw, {}, 0.0, "crafted")


def test_empty_model_with_nonempty_symbol_map_is_missing_symbols(m1):
    script = encode_vfs(m1, VFS)
    with pytest.raises(MissingSymbolError) as err:
        parse_witness(sat_verdict("(model )"), script)
    assert "nm" in err.value.names


def test_plain_constants_and_negatives_decode(m1):
    script = encode_vfs(m1, VFS)
    raw = """
    (
      (define-fun nm () Int 3)
      (define-fun nc () Int 3)
      (define-fun s0_bcap () Int 2)
      (define-fun s0_nm1 () Int (- 5))
      (define-fun s0_nc1 () Int 0)
      (define-fun s0_bp () Int 2)
      (define-fun s0_nm2 () Int 8)
      (define-fun s0_nc2 () Int 3)
    )
    """
    witness = parse_witness(sat_verdict(raw), script)
    state = witness_state(witness, m1.state_fields)
    assert state["nm1"] == -5 and state["nm2"] == 8


def test_old_style_model_keyword_accepted(m1):
    script = encode_vfs(m1, VFS)
    defs = "\n".join(f"(define-fun {name} () Int 1)" for name in script.symbol_map)
    witness = parse_witness(sat_verdict(f"(model {defs})"), script)
    assert witness_state(witness, m1.state_fields)["bcap"] == 1


def test_out_of_range_value_raises_range_error(m1):
    script = encode_vfs(m1, VFS)
    raw = "(" + "\n".join(
        f"(define-fun {name} () Int {2**63 if name == 'nm' else 1})"
        for name in script.symbol_map) + ")"
    with pytest.raises(WitnessRangeError):
        parse_witness(sat_verdict(raw), script)


def recursive_script(m1, depth=3):
    return encode_pfs_recursive(m1, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.RECURSIVE, depth_bound=depth))


def test_store_chain_arrays_with_lets_decode(m1):
    script = recursive_script(m1)
    raw = """
    (
      (define-fun n () Int 2)
      (define-fun nm () Int 3)
      (define-fun nc () Int 3)
      (define-fun state () (Array Int Int)
        (let ((a!1 (store (store ((as const (Array Int Int)) 9) 0 2) 1 3)))
          (store (store (store (store a!1 2 3) 3 1) 4 0) 5 0)))
      (define-fun p () (Array Int Int)
        (let ((a!1 (store ((as const (Array Int Int)) 7) 0 1)))
          (store a!1 1 1)))
    )
    """
    witness = parse_witness(sat_verdict(raw), script)
    assert witness.step_count == 2
    assert witness_state(witness, m1.state_fields) == \
        {"bcap": 2, "nm1": 3, "nc1": 3, "bp": 1, "nm2": 0, "nc2": 0}
    plan = witness_plan(witness, m1.param_fields)
    # indexes 2 and 3 fall back to the const default
    assert plan == ({"mm": 1, "mc": 1}, {"mm": 7, "mc": 7})


def test_as_array_function_values_decode(m1):
    script = recursive_script(m1)
    raw = """
    (
      (define-fun n () Int 1)
      (define-fun nm () Int 3)
      (define-fun nc () Int 3)
      (define-fun state () (Array Int Int) (_ as-array k!1))
      (define-fun p () (Array Int Int) (_ as-array k!0))
      (define-fun k!0 ((x!0 Int)) Int (ite (= x!0 0) 2 (ite (= x!0 1) 1 0)))
      (define-fun k!1 ((x!0 Int)) Int
        (ite (= x!0 0) 4 (ite (= x!0 1) 3 (ite (= x!0 2) 3 (ite (= x!0 3) 1 0)))))
    )
    """
    witness = parse_witness(sat_verdict(raw), script)
    assert witness_plan(witness, m1.param_fields) == ({"mm": 2, "mc": 1},)
    assert witness_state(witness, m1.state_fields)["bcap"] == 4


def test_lambda_array_values_decode(m1):
    script = recursive_script(m1)
    raw = """
    (
      (define-fun n () Int 1)
      (define-fun nm () Int 3)
      (define-fun nc () Int 3)
      (define-fun state () (Array Int Int)
        (lambda ((x!0 Int)) (ite (<= x!0 0) 2 3)))
      (define-fun p () (Array Int Int) (lambda ((x!0 Int)) (+ x!0 1)))
    )
    """
    witness = parse_witness(sat_verdict(raw), script)
    assert witness_plan(witness, m1.param_fields) == ({"mm": 1, "mc": 2},)


def test_unparseable_model_output_is_a_witness_error(m1):
    script = encode_vfs(m1, VFS)
    with pytest.raises(WitnessParseError):
        parse_witness(sat_verdict("((((("), script)


def test_witness_requires_sat_and_model(m1, solver_config=None):
    script = encode_vfs(m1, VFS)
    with pytest.raises(WitnessParseError):
        parse_witness(Verdict(Outcome.UNSAT, None, {}, 0.0, "x"), script)
    with pytest.raises(WitnessParseError):
        parse_witness(Verdict(Outcome.SAT, None, {}, 0.0, "x"), script)


def test_unrolled_witness_ignores_steps_beyond_n(m1):
    script = encode_pfs_unrolled(m1, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.UNROLLED, depth_bound=2))
    names = {}
    for name, desc in script.symbol_map.items():
        if isinstance(desc, StateFieldAt) and desc.step <= 1:
            names[name] = 1
        elif isinstance(desc, ParamAt) and desc.step == 0:
            names[name] = 2
        elif not isinstance(desc, (StateFieldAt, ParamAt)):
            names[name] = 1 if name != "n" else 1
    raw = "(" + "\n".join(f"(define-fun {k} () Int {v})"
                          for k, v in {**names, "n": 1}.items()) + ")"
    witness = parse_witness(sat_verdict(raw), script)
    assert witness.step_count == 1
    # step-1 params and step-2 state were never mentioned and never needed
    plan = witness_plan(witness, m1.param_fields)
    assert plan == ({"mm": 2, "mc": 2},)


def test_missing_needed_step_param_is_reported(m1):
    script = encode_pfs_unrolled(m1, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.UNROLLED, depth_bound=1))
    payload = {name: 1 for name, desc in script.symbol_map.items()
               if not isinstance(desc, ParamAt)}
    payload["n"] = 1  # one step taken, but p0_* values absent
    raw = "(" + "\n".join(f"(define-fun {k} () Int {v})"
                          for k, v in payload.items()) + ")"
    with pytest.raises(MissingSymbolError) as err:
        parse_witness(sat_verdict(raw), script)
    assert any(name.startswith("p0_") for name in err.value.names)


# -- further end-to-end checks --------------------------------------------------

@requires_solver
def test_contradictory_final_predicate_is_unsat(m1, solver_config):
    from dataclasses import replace
    from modelgate.expr import BoolLit
    hopeless = replace(m1, final_pred=BoolLit(False))
    verdict = run_solver(encode_vfs(hopeless, VFS), solver_config)
    assert verdict.outcome is Outcome.UNSAT


@requires_solver
def test_recursive_pfs_at_full_generality_is_sat(m1, solver_config):
    script = encode_pfs_recursive(m1, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.RECURSIVE, depth_bound=100,
        extra_constraints=guardrails(m1)))
    verdict = run_solver(script, solver_config)
    assert verdict.outcome is Outcome.SAT
    witness = parse_witness(verdict, script)
    assert witness.step_count is not None and witness.step_count >= 1
    plan = witness_plan(witness, m1.param_fields)
    assert len(plan) == witness.step_count


@requires_solver
def test_restricted_transition_unrolled_is_unsat_at_depth_sixteen(m3, solver_config):
    script = encode_pfs_unrolled(m3, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.UNROLLED, depth_bound=16,
        **fixed_333(m3)))
    assert run_solver(script, solver_config).outcome is Outcome.UNSAT


@requires_solver
def test_zero_step_plan_witness(solver_config):
    from helpers import zero_step_model
    model = zero_step_model()
    script = encode_pfs_unrolled(model, EncodingConfig(
        property=Property.PFS, pfs_mode=PfsMode.UNROLLED, depth_bound=1))
    verdict = run_solver(script, solver_config)
    assert verdict.outcome is Outcome.SAT
    witness = parse_witness(verdict, script)
    assert witness.step_count == 0
    assert witness_plan(witness, model.param_fields) == ()


@requires_solver
@pytest.mark.parametrize("depth", [1, 4, 8, 12])
def test_both_encodings_agree_on_the_broken_models(m2, m3, solver_config, depth):
    for model, fixing in ((m2, fixed_332(m2)), (m3, fixed_333(m3))):
        unrolled = encode_pfs_unrolled(model, EncodingConfig(
            property=Property.PFS, pfs_mode=PfsMode.UNROLLED,
            depth_bound=depth, **fixing))
        recursive = encode_pfs_recursive(model, EncodingConfig(
            property=Property.PFS, pfs_mode=PfsMode.RECURSIVE,
            depth_bound=depth, **fixing))
        a = run_solver(unrolled, solver_config).outcome
        b = run_solver(recursive, solver_config).outcome
        if Outcome.UNKNOWN in (a, b):
            continue
        assert a is b is Outcome.UNSAT, (model.name, depth, a, b)
