"""Deterministic integration of the model vector fields.

The right-hand side reuses the ModelSpec reactions evaluated at real-valued
states, so the ODE and the stochastic chain encode identical rate laws.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .models import ModelSpec, deterministic_field


class IntegrationError(RuntimeError):
    """Integration failure; the message reports the failing time."""


@dataclass(frozen=True)
class Trajectory:
    """Sampled ODE solution. times strictly increasing, states (n_times, n_states)."""

    state_names: Tuple[str, ...]
    times: np.ndarray
    states: np.ndarray

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("t",) + tuple(self.state_names))
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def integrate(model: ModelSpec, y0: Sequence[float], t_end: float,
              rel_tol: float = 1e-8, abs_tol: float = 1e-10,
              n_points: int = 400) -> Trajectory:
    """Integrate the deterministic system from y0 over [0, t_end].

    Uses an adaptive embedded Runge-Kutta 4(5) pair sampled at n_points
    (at least 200) evenly spaced output times.
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (model.n_states,):
        raise ValueError(f"y0 must have length {model.n_states}")
    if np.any(y0 < 0):
        raise ValueError("y0 components must be nonnegative")
    if not (t_end > 0):
        raise ValueError("t_end must be positive")
    for name, tol in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not (0 < tol <= 1e-2):
            raise ValueError(f"{name} must lie in (0, 1e-2], got {tol}")
    n_points = max(200, int(n_points))

    field = deterministic_field(model)
    t_eval = np.linspace(0.0, t_end, n_points)
    sol = solve_ivp(lambda t, y: field(y), (0.0, t_end), y0, method="RK45",
                    t_eval=t_eval, rtol=rel_tol, atol=abs_tol)
    if not sol.success:
        t_fail = sol.t[-1] if sol.t.size else 0.0
        raise IntegrationError(f"integration failed at t = {t_fail:.6g}: {sol.message}")
    return Trajectory(model.state_names, sol.t, sol.y.T)
