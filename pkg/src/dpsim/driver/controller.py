"""Grow-on-success, cut-on-failure time-step control that lands on stop dates."""
from __future__ import annotations

from dataclasses import dataclass


class TimestepUnderflow(RuntimeError):
    pass


@dataclass
class TimestepController:
    dt_init: float = 1.0
    dt_min: float = 0.01
    dt_max: float = 50.0
    grow: float = 2.0
    cut: float = 0.5
    max_cuts: int = 10
    dt: float | None = None  # current proposal, always within [dt_min, dt_max]
    consecutive_cuts: int = 0
    truncated: bool = False

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not (self.grow >= 1 and 0 < self.cut < 1):
            raise ValueError("need grow >= 1 and 0 < cut < 1")
        if self.dt is None:
            self.dt = self.dt_init

    def step(self, t, target):
        """Length of the next step from ``t`` without passing ``target``.

        Returns (h, hits_target); when the step reaches the target the caller
        should set time to ``target`` exactly.
        """
        remaining = target - t
        if remaining <= self.dt * (1 + 1e-12):
            self.truncated = remaining < self.dt
            return remaining, True
        self.truncated = False
        return self.dt, False

    def accept(self):
        self.consecutive_cuts = 0
        if not self.truncated:
            self.dt = min(self.dt * self.grow, self.dt_max)

    def reject(self, h=None):
        """Cut after a failed step of length ``h`` (defaults to the proposal)."""
        self.consecutive_cuts += 1
        base = self.dt if h is None else min(h, self.dt)
        new = base * self.cut
        if self.consecutive_cuts > self.max_cuts or new < self.dt_min * (1 - 1e-12):
            raise TimestepUnderflow(
                f"time step underflow after {self.consecutive_cuts} consecutive cuts (dt would be {new:.3g} day)")
        self.dt = new

    def state_dict(self):
        return {"dt": self.dt, "consecutive_cuts": self.consecutive_cuts}

    def load_state(self, d):
        self.dt = float(d["dt"])
        self.consecutive_cuts = int(d["consecutive_cuts"])
