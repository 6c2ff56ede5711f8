"""Scheduler policy family producing the per-sample transmission request.

Four named variants plus a hook for user-supplied symmetric maps:

* always      -- request every sample (the no-scheduler baseline),
* state       -- request iff ||x||^2 > eps (depends on applied controls),
* innovation  -- request iff ||x - prediction||^2 > eps; the innovation is a
                 pure function of the noise, so the decision is control-free
                 and symmetric,
* halfline    -- request iff x >= c (scalar states only; uses controls),
* custom      -- any user map of the innovation declared symmetric.

The information-pattern tag is what downstream guarantees key off: policies
tagged control-free produce bit-identical request sequences under any two
control laws for a fixed noise realization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError

KINDS = ("always", "state", "innovation", "halfline", "custom")
_CONTROL_FREE = {"always": True, "state": False, "innovation": True,
                 "halfline": False, "custom": True}


@dataclass(frozen=True)
class SchedulerPolicy:
    kind: str
    eps: float = 0.0
    threshold: float = 0.5
    direction: str = "ge"
    rule: Optional[Callable[[np.ndarray], bool]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown scheduler kind {self.kind!r}")
        if self.kind in ("state", "innovation") and self.eps < 0.0:
            raise ConfigurationError(f"eps must be >= 0, got {self.eps}")
        if self.kind == "halfline" and self.direction not in ("ge", "le"):
            raise ConfigurationError(f"direction must be 'ge' or 'le', got {self.direction!r}")
        if self.kind == "custom" and self.rule is None:
            raise ConfigurationError("custom scheduler needs a rule")

    @property
    def info_pattern(self) -> str:
        return "control-free" if _CONTROL_FREE[self.kind] else "uses-controls"

    # -- constructors -------------------------------------------------------
    @classmethod
    def always_transmit(cls) -> "SchedulerPolicy":
        return cls(kind="always")

    @classmethod
    def state_threshold(cls, eps: float) -> "SchedulerPolicy":
        return cls(kind="state", eps=float(eps))

    @classmethod
    def innovation_threshold(cls, eps: float) -> "SchedulerPolicy":
        return cls(kind="innovation", eps=float(eps))

    @classmethod
    def half_line_state(cls, threshold: float, direction: str = "ge") -> "SchedulerPolicy":
        return cls(kind="halfline", threshold=float(threshold), direction=direction)

    @classmethod
    def custom_symmetric(cls, rule: Callable[[np.ndarray], bool]) -> "SchedulerPolicy":
        """Wrap a user map of the innovation.  The caller declares the map
        symmetric (rule(r) == rule(-r)); the control-free guarantees below
        hold only if that declaration is honest."""
        return cls(kind="custom", rule=rule)


@dataclass(frozen=True)
class SchedulerInput:
    """What a scheduler sees at one sampling instant.

    `pred` is the estimate the controller would hold if the current packet is
    not delivered, i.e. the model prediction from the last received packet.
    """

    x: np.ndarray
    pred: np.ndarray
    k: int
    tau_prev: int = -1

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "pred", np.atleast_1d(np.asarray(self.pred, dtype=float)))
        if self.x.shape != self.pred.shape:
            raise ConfigurationError(
                f"x and pred must have equal shapes, got {self.x.shape} vs {self.pred.shape}"
            )
        if self.tau_prev > self.k - 1:
            raise ConfigurationError(
                f"tau_prev={self.tau_prev} must be <= k-1={self.k - 1}"
            )

    @property
    def innovation(self) -> np.ndarray:
        return self.x - self.pred


def decide(policy: SchedulerPolicy, inp: SchedulerInput) -> int:
    """Evaluate the policy: 1 requests a transmission, 0 stays silent.

    Threshold comparisons are strict (>) for the quadratic rules; the
    half-line rule uses >= (or <=) against its boundary.
    """
    if policy.kind == "always":
        return 1
    if policy.kind == "state":
        return 1 if float(inp.x @ inp.x) > policy.eps else 0
    if policy.kind == "innovation":
        r = inp.innovation
        return 1 if float(r @ r) > policy.eps else 0
    if policy.kind == "halfline":
        if inp.x.shape != (1,):
            raise ConfigurationError("half-line scheduling is defined for scalar states only")
        if policy.direction == "ge":
            return 1 if inp.x[0] >= policy.threshold else 0
        return 1 if inp.x[0] <= policy.threshold else 0
    # custom symmetric map of the innovation
    return 1 if policy.rule(inp.innovation) else 0


def is_symmetric_control_free(policy: SchedulerPolicy) -> bool:
    """True when the request sequence cannot depend on applied controls."""
    return _CONTROL_FREE[policy.kind]
