"""Inexact Newton iteration for one backward-Euler time step."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linear
from .assembly import PropertyError, State, assemble, mixture_densities
from .linear import LinearConfig, SingularBlockError
from .parallel import SERIAL

log = logging.getLogger(__name__)

CONVERGED = "Converged"
DIVERGED = "Diverged"
MAX_ITERS = "MaxIters"
FAILED = "Failed"

FORCING_RULES = ("ew1", "ew2", "ew3", "const")


@dataclass
class NewtonConfig:
    epsilon: float = 1e-4
    max_iters: int = 15
    forcing: str = "ew3"
    gamma: float = 0.9
    beta: float = 2.0
    constant: float = 1e-8  # eta for the "const" rule (not clamped)
    eta_min: float = 1e-4
    eta_max: float = 0.9
    eta_initial: float = 0.1
    dp_max: float = 500.0
    ds_max: float = 0.2
    mb_tol: float = 1e-7
    divergence_factor: float = 1e4

    def __post_init__(self):
        self.forcing = self.forcing.lower()
        if self.forcing not in FORCING_RULES:
            raise ValueError(f"unknown forcing rule {self.forcing!r}")
        if not 0 < self.eta_min <= self.eta_max < 1:
            raise ValueError("eta bounds must satisfy 0 < eta_min <= eta_max < 1")
        if not self.epsilon > 0:
            raise ValueError("Newton tolerance must be positive")
        if not 0 <= self.gamma <= 1 or not 1 < self.beta <= 2:
            raise ValueError("EW3 needs gamma in [0, 1] and beta in (1, 2]")


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_norms: list = field(default_factory=list)
    inf_norms: list = field(default_factory=list)
    etas: list = field(default_factory=list)
    linear_iterations: list = field(default_factory=list)
    linear_residuals: list = field(default_factory=list)  # ||A y - b|| / ||b|| per step
    mb_errors: np.ndarray = field(default_factory=lambda: np.zeros(2))
    switches: int = 0
    controls: list = field(default_factory=list)  # active well controls at exit
    outcome: str = MAX_ITERS
    message: str = ""

    @property
    def converged(self):
        return self.outcome == CONVERGED

    @property
    def total_linear_iterations(self):
        return int(sum(self.linear_iterations))


def forcing_term(rule, norm_b, norm_b_prev, norm_r_prev, config: NewtonConfig, norm_diff=None):
    """Linear tolerance eta for the next Newton step.

    ew1: ||b_l - r_{l-1}|| / ||b_{l-1}||  (needs ``norm_diff``)
    ew2: | ||b_l|| - ||r_{l-1}|| | / ||b_{l-1}||
    ew3: gamma * (||b_l|| / ||b_{l-1}||)^beta
    Adaptive rules are clamped to [eta_min, eta_max]; ``const`` returns the
    configured constant unchanged.
    """
    if rule == "const":
        return config.constant
    if norm_b_prev is None:
        return min(max(config.eta_initial, config.eta_min), config.eta_max)
    if norm_b_prev == 0.0:
        return config.eta_min
    if rule == "ew1":
        eta = norm_diff / norm_b_prev
    elif rule == "ew2":
        eta = abs(norm_b - norm_r_prev) / norm_b_prev
    elif rule == "ew3":
        eta = config.gamma * (norm_b / norm_b_prev) ** config.beta
    else:
        raise ValueError(f"unknown forcing rule {rule!r}")
    return min(max(eta, config.eta_min), config.eta_max)


def mass_balance_errors(result, dt):
    """Per-phase |accumulated - injected| over the step, relative to mass in place."""
    mass = np.maximum(np.abs(result.mass_in_place), 1e-300)
    return np.abs(result.phase_imbalance) * dt / mass


def damp_update(y, n_cells, block_size, config: NewtonConfig):
    """Clip pressure changes to dp_max and saturation changes to ds_max, per entry."""
    y = y.copy()
    nc = n_cells * block_size
    cells = y[:nc].reshape(n_cells, block_size)
    p_cols = list(range(0, block_size, 2))
    s_cols = list(range(1, block_size, 2))
    cells[:, p_cols] = np.clip(cells[:, p_cols], -config.dp_max, config.dp_max)
    cells[:, s_cols] = np.clip(cells[:, s_cols], -config.ds_max, config.ds_max)
    y[nc:] = np.clip(y[nc:], -config.dp_max, config.dp_max)
    return y


def apply_update(state: State, y, config: NewtonConfig):
    n, b = state.cells.shape
    x = state.vector() + damp_update(y, n, b, config)
    new = State.from_vector(x, n, b)
    new.cells[:, 1::2] = np.clip(new.cells[:, 1::2], 0.0, 1.0)
    return new


def solve_timestep(model, state_old: State, dt, config: NewtonConfig | None = None, controls=None,
                   linear_config: LinearConfig | None = None, pool=SERIAL, assemble_fn=assemble,
                   initial: State | None = None, on_system=None, switch=None, max_switches=3):
    """Advance one step with inexact Newton; returns (state, report, last assembly).

    ``on_system(iteration, jac, rhs)`` is called with every linear system
    before it is solved.  ``switch(state, result, controls)`` may change the
    well controls in place after each update and returns True if it did; the
    residual is then re-evaluated and the forcing sequence restarts.
    Failures are reported through ``report.outcome``.
    """
    config = config or NewtonConfig()
    controls = list(controls) if controls is not None else [w.control for w in model.wells]
    linear_config = linear_config or LinearConfig()
    report = NewtonReport(controls=controls)
    x = (initial or state_old).copy()
    n, b = x.cells.shape

    def evaluate(state):
        rho = mixture_densities(model, state)
        return assemble_fn(model, state, state_old, dt, controls, rho, pool)

    try:
        res = evaluate(x)
    except (PropertyError, FloatingPointError) as exc:
        report.outcome, report.message = FAILED, str(exc)
        return x, report, None
    rhs = -res.residual
    nb = linear.norm(rhs, pool)
    report.residual_norms.append(nb)
    report.inf_norms.append(float(np.max(np.abs(rhs))) if rhs.size else 0.0)
    report.mb_errors = mass_balance_errors(res, dt)
    first = nb
    nb_prev = nr_prev = ndiff = None

    def converged():
        return (report.residual_norms[-1] < config.epsilon and report.inf_norms[-1] < config.epsilon
                and float(np.max(report.mb_errors)) < config.mb_tol)

    while not converged():
        if report.iterations >= config.max_iters:
            report.outcome = MAX_ITERS
            return x, report, res
        if not np.isfinite(nb) or nb > config.divergence_factor * max(first, 1e-300):
            report.outcome = DIVERGED
            return x, report, res
        eta = forcing_term(config.forcing, nb, nb_prev, nr_prev, config, ndiff)
        report.etas.append(eta)
        if on_system is not None:
            on_system(report.iterations, res.jac, rhs)
        try:
            lin = linear.solve(res.jac, rhs, eta, linear_config, pool)
        except SingularBlockError as exc:
            report.outcome, report.message = FAILED, str(exc)
            return x, report, res
        report.linear_iterations.append(lin.iterations)
        report.linear_residuals.append(lin.residual_norm / nb if nb else 0.0)
        if not lin.converged:
            report.outcome = FAILED
            report.message = f"linear solver did not reach rtol {eta:.3g} in {lin.iterations} iterations"
            return x, report, res
        x_new = apply_update(x, lin.x, config)
        y_applied = x_new.vector() - x.vector()
        r_lin = rhs - res.jac.matvec(y_applied, pool)
        x = x_new
        report.iterations += 1
        try:
            res = evaluate(x)
        except (PropertyError, FloatingPointError) as exc:
            report.outcome, report.message = FAILED, str(exc)
            return x, report, None
        if switch is not None and report.switches < max_switches and switch(x, res, controls):
            report.switches += 1
            try:
                res = evaluate(x)
            except (PropertyError, FloatingPointError) as exc:
                report.outcome, report.message = FAILED, str(exc)
                return x, report, None
            rhs = -res.residual
            nb = linear.norm(rhs, pool)
            first = max(first, nb)
            nb_prev = nr_prev = ndiff = None
        else:
            rhs_new = -res.residual
            nb_prev, nr_prev = nb, linear.norm(r_lin, pool)
            if config.forcing == "ew1":
                ndiff = linear.norm(rhs_new - r_lin, pool)
            rhs, nb = rhs_new, linear.norm(rhs_new, pool)
        report.residual_norms.append(nb)
        report.inf_norms.append(float(np.max(np.abs(rhs))) if rhs.size else 0.0)
        report.mb_errors = mass_balance_errors(res, dt)
        log.debug("newton %d: |b|=%.3e eta=%.2e lin=%d", report.iterations, nb, eta, lin.iterations)
    report.outcome = CONVERGED
    return x, report, res
