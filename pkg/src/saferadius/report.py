"""Termination rules, bound traces, and the report emitted by verification runs."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .game import BoundValue, ExceedsBudget, format_bound


@dataclass(frozen=True)
class TerminationRule:
    """Any combination of budgets; the first one to trigger stops the search.

    epsilon encodes 1/epsilon-convergence: stop after ceil(1/epsilon) search
    iterations without an improvement of the best bound.
    """

    max_iters: int | None = None
    max_seconds: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.max_iters is None and self.max_seconds is None and self.epsilon is None:
            raise ConfigError("termination rule needs at least one budget")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ConfigError("max_seconds must be positive")
        if self.epsilon is not None and not 0 < self.epsilon:
            raise ConfigError("epsilon must be positive")

    @property
    def no_improve_limit(self) -> int | None:
        if self.epsilon is None:
            return None
        return math.ceil(1.0 / self.epsilon)

    def triggered(self, iterations: int, elapsed: float, since_improvement: int) -> bool:
        if self.max_iters is not None and iterations >= self.max_iters:
            return True
        if self.max_seconds is not None and elapsed >= self.max_seconds:
            return True
        limit = self.no_improve_limit
        return limit is not None and since_improvement >= limit


@dataclass
class TraceEntry:
    """One emission of an anytime bound."""

    kind: str  # "upper" or "lower"
    index: int  # iteration, phase, or feature id depending on the producer
    elapsed: float
    value: BoundValue
    witness: np.ndarray | None = None
    converged: bool = False
    detail: dict = field(default_factory=dict)


def _json_value(value: BoundValue | None):
    return format_bound(value) if isinstance(value, ExceedsBudget) else value


@dataclass
class Verdict:
    """Budget analysis of a feature-robustness result."""

    case: str
    safe_radius_certified: BoundValue | None
    nearest_adversarial_distance: BoundValue | None
    controllable: bool | None
    budget: float | None

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "safe_radius_certified": _json_value(self.safe_radius_certified),
            "nearest_adversarial_distance": _json_value(self.nearest_adversarial_distance),
            "controllable": self.controllable,
            "budget": self.budget,
        }


@dataclass
class BoundReport:
    """Converging bounds with their trace, witnesses, and guarantee status."""

    problem: str  # "MSR", "FR", or "ATTACK"
    lower: BoundValue | None = None
    upper: BoundValue | None = None
    trace: list[TraceEntry] = field(default_factory=list)
    witness: np.ndarray | None = None
    error_bound: float | None = None
    certified: str = "uncertified"
    converged: bool = False
    verdict: Verdict | None = None
    config: dict = field(default_factory=dict)
    elapsed: float = 0.0
    notes: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if isinstance(self.lower, float) and isinstance(self.upper, float):
            if self.lower > self.upper + 1e-9:
                raise AssertionError(f"lower {self.lower} exceeds upper {self.upper}")
        if self.converged and self.lower is not None and self.upper is not None:
            if not (self.lower == self.upper or abs(self.lower - self.upper) <= 1e-12):
                raise AssertionError("converged report with distinct bounds")

    def to_json(self, trace_csv_paths: dict | None = None, witness_paths=None) -> dict:
        return {
            "problem": self.problem,
            "config": self.config,
            "lower": _json_value(self.lower),
            "upper": _json_value(self.upper),
            "error_bound": self.error_bound,
            "certified": self.certified,
            "converged": self.converged,
            "verdict": self.verdict.to_json() if self.verdict else None,
            "trace_csv_path": trace_csv_paths or {},
            "witness_paths": list(witness_paths or []),
            "elapsed_seconds": self.elapsed,
            "notes": self.notes,
        }


def upper_trace_csv(entries: list[TraceEntry], witness_paths: dict[int, str] | None = None) -> str:
    out = io.StringIO()
    out.write("iteration,elapsed_seconds,upper_bound,witness_path\n")
    for e in entries:
        path = (witness_paths or {}).get(id(e), "")
        out.write(f"{e.index},{e.elapsed:.6f},{format_bound(e.value)},{path}\n")
    return out.getvalue()


def lower_trace_csv(entries: list[TraceEntry]) -> str:
    out = io.StringIO()
    out.write("phase,elapsed_seconds,lower_bound,converged\n")
    for e in entries:
        out.write(f"{e.index},{e.elapsed:.6f},{format_bound(e.value)},{int(e.converged)}\n")
    return out.getvalue()


def feature_trace_csv(entries: list[TraceEntry]) -> str:
    out = io.StringIO()
    out.write("feature_id,elapsed_seconds,feature_beta,root_alpha,exceeds_budget\n")
    for e in entries:
        beta = e.detail.get("feature_beta")
        flag = int(isinstance(e.value, ExceedsBudget))
        out.write(
            f"{e.index},{e.elapsed:.6f},{format_bound(beta)},{format_bound(e.value)},{flag}\n"
        )
    return out.getvalue()


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
