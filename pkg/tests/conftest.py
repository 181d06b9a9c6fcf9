from __future__ import annotations

import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from modelgate import SolverConfig, load_corpus_model

REPO = Path(__file__).resolve().parents[1]
SHIM = REPO / "tools" / "z3wasm"


def find_solver() -> str | None:
    env = os.environ.get("MODELGATE_SOLVER")
    if env and Path(env).is_file() and os.access(env, os.X_OK):
        return env
    for name in ("z3", "cvc5"):
        found = shutil.which(name)
        if found:
            return found
    if SHIM.is_file() and (REPO / "tools" / "z3wasm-home" / "node_modules").is_dir():
        return str(SHIM)
    return None


SOLVER = find_solver()

requires_solver = pytest.mark.skipif(
    SOLVER is None,
    reason="no SMT solver available; install z3 or run tools/install-z3-wasm.sh")


@pytest.fixture(scope="session")
def solver_exe() -> str:
    if SOLVER is None:
        pytest.skip("no SMT solver available")
    return SOLVER


@pytest.fixture(scope="session")
def solver_config(solver_exe) -> SolverConfig:
    return SolverConfig(executable=solver_exe, timeout=120.0)


@pytest.fixture(scope="session")
def m1():
    return load_corpus_model("mc_model1")


@pytest.fixture(scope="session")
def m2():
    return load_corpus_model("mc_model2")


@pytest.fixture(scope="session")
def m3():
    return load_corpus_model("mc_model3")


def run_cli(*args: str, timeout: float = 600.0,
            solver: str | None = None) -> subprocess.CompletedProcess:
    """Invoke the CLI in a real subprocess so exit codes are the genuine article."""
    env = dict(os.environ)
    env["MODELGATE_SOLVER"] = solver if solver is not None else (SOLVER or "")
    return subprocess.run([sys.executable, "-m", "modelgate", *args],
                          capture_output=True, text=True, timeout=timeout, env=env)


@pytest.fixture()
def cli():
    return run_cli
