"""Shared test utilities: synthetic models and the parser fuzz corpus."""

from __future__ import annotations

import random

from modelgate import parse_model

# Single counter that must climb from 0 to lim in steps of 1 or 2.
COUNTER_SRC = """
(model step_counter)
(instance (lim Int))
(state (x Int))
(params (d Int))
(valid (and (>= x 0) (<= x lim)))
(initial (= x 0))
(final (= x lim))
(guard (and (>= d 1) (<= d 2)))
(update (x (+ x d)))
"""

# Initial state already satisfies the final predicate: zero-step plans.
ZERO_STEP_SRC = """
(model already_done)
(state (x Int))
(params (d Int))
(valid (>= x 0))
(initial (= x 0))
(final (<= x 0))
(guard (= d 1))
(update (x (+ x d)))
"""

# Updates that swap two fields; distinguishes simultaneous assignment
# from sequential assignment.
SWAP_SRC = """
(model swapper)
(state (a Int) (b Int))
(params (t Int))
(valid true)
(initial (and (= a 1) (= b 2)))
(final (= a 2))
(guard (= t 0))
(update (a b) (b a))
"""


def counter_model():
    return parse_model(COUNTER_SRC)


def zero_step_model():
    return parse_model(ZERO_STEP_SRC)


def swap_model():
    return parse_model(SWAP_SRC)


_FUZZ_PIECES = ["(", ")", " ", "\n", ";", "model", "state", "valid", "update",
                "Int", "x", "-", "9", "12345678901234567890123", "=>", "ite",
                "\t", '"', "αβ", "\x00", "+", "(((", ")))", "(model m)"]


def fuzz_inputs(count: int, seed: int = 0):
    """Deterministic byte soups for parser-termination checks.

    Mostly small nasty strings, plus a few megabyte-scale pathological
    inputs (deep nesting, one huge atom, many tiny forms).
    """
    rng = random.Random(seed)
    for i in range(count):
        if i == 0:
            yield "(" * 1_000_000
        elif i == 1:
            yield "a" * 1_000_000
        elif i == 2:
            yield "(x) " * 200_000
        elif i == 3:
            yield ")" * 500_000
        elif i == 4:
            yield ("(model m) (state (x Int)) " * 30_000)[:1_000_000]
        elif i % 7 == 0:
            yield "".join(rng.choice(_FUZZ_PIECES) for _ in range(rng.randint(0, 120)))
        else:
            length = rng.randint(0, 200)
            yield "".join(chr(rng.randint(1, 0x2FF)) for _ in range(length))
