"""modelgate: SMT-backed validation of transition-system planning models.

Compiles declarative models to SMT-LIB scripts checking two properties —
does a valid final state exist, and does a bounded transition path connect
an initial state to a final one — then drives an external solver, decodes
witnesses into concrete plans, and cross-validates against a brute-force
search oracle.
"""

from .corpus import CORPUS_MODELS, corpus_dir, corpus_path, load_corpus_model
from .dsl import ModelSyntaxError, ParseError, parse_expr_text, parse_model, serialize_model
from .encoder import (EncodingConfig, PfsMode, Property, SmtScript, emit_prelude,
                      encode, encode_pfs_recursive, encode_pfs_unrolled, encode_vfs)
from .errors import ModelGateError
from .expr import App, BoolLit, Expr, Lit, Ref, eval_expr, infer_sort, render_expr
from .model import (ConcreteBinding, ConcreteState, Diagnostic, Model,
                    apply_transition, validate_model)
from .oracle import (Exhausted, Instance, Plan, ReplayFailure, bfs_reachability,
                     derive_initial_state, enumerate_vfs, replay_plan)
from .solver import (Outcome, SolverConfig, Verdict, Witness, cross_check,
                     discover_solver, parse_witness, probe_solver, run_solver,
                     witness_instance, witness_plan, witness_state)

__version__ = "0.1.0"
