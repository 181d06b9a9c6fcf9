"""Run reports: one record per solver/oracle run, in text or JSON lines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class RunReport:
    model_name: str
    property: str                 # vfs | pfs | oracle-vfs | oracle-pfs
    outcome: str                  # sat | unsat | unknown | error | found | none | exhausted
    mode: str | None = None
    depth: int | None = None
    instance: dict[str, int] = field(default_factory=dict)
    wall_time: float | None = None
    solver_identity: str | None = None
    plan: tuple[dict[str, int], ...] | None = None
    witness_state: dict[str, int] | None = None
    cross_check: str | None = None
    notes: tuple[str, ...] = ()
    error: str | None = None

    def to_record(self) -> dict:
        record = {
            "model": self.model_name,
            "property": self.property,
            "outcome": self.outcome,
        }
        if self.mode is not None:
            record["mode"] = self.mode
        if self.depth is not None:
            record["depth"] = self.depth
        if self.instance:
            record["instance"] = dict(self.instance)
        if self.wall_time is not None:
            record["wall_time"] = round(self.wall_time, 4)
        if self.solver_identity:
            record["solver"] = self.solver_identity
        if self.plan is not None:
            record["plan"] = [dict(step) for step in self.plan]
            record["plan_length"] = len(self.plan)
        if self.witness_state is not None:
            record["witness_state"] = dict(self.witness_state)
        if self.cross_check is not None:
            record["cross_check"] = self.cross_check
        if self.notes:
            record["notes"] = list(self.notes)
        if self.error is not None:
            record["error"] = self.error
        return record

    def to_json_line(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)

    def render_text(self) -> str:
        head = f"{self.model_name} {self.property}"
        if self.mode:
            head += f" [{self.mode}]"
        if self.depth is not None:
            head += f" depth<={self.depth}"
        lines = [f"{head}: {self.outcome}"]
        if self.instance:
            inst = " ".join(f"{k}={v}" for k, v in self.instance.items())
            lines.append(f"  instance: {inst}")
        if self.wall_time is not None:
            lines.append(f"  wall time: {self.wall_time:.2f}s")
        if self.solver_identity:
            lines.append(f"  solver: {self.solver_identity}")
        if self.witness_state is not None:
            state = " ".join(f"{k}={v}" for k, v in self.witness_state.items())
            lines.append(f"  witness state: {state}")
        if self.plan is not None:
            lines.append(f"  plan ({len(self.plan)} step{'s' if len(self.plan) != 1 else ''}):")
            for i, step in enumerate(self.plan, start=1):
                move = " ".join(f"{k}={v}" for k, v in step.items())
                lines.append(f"    step {i}: {move}")
        if self.cross_check is not None:
            lines.append(f"  cross-check: {self.cross_check}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        if self.error is not None:
            lines.append(f"  error: {self.error}")
        return "\n".join(lines)


def render_table(reports: list[RunReport]) -> str:
    """Compact fixed-width table for bench output."""
    headers = ("model", "property", "mode", "depth", "verdict", "time(s)")
    rows = []
    for r in reports:
        rows.append((r.model_name, r.property, r.mode or "-",
                     str(r.depth) if r.depth is not None else "-",
                     r.outcome,
                     f"{r.wall_time:.2f}" if r.wall_time is not None else "-"))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    out = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    out.append("  ".join("-" * widths[i] for i in range(len(headers))))
    for row in rows:
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(out)
