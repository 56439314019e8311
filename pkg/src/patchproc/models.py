"""Reaction networks for the three model families, equilibria, and reproduction numbers.

The same rate laws drive the exact stochastic chain and, evaluated at real
states, the deterministic vector field, so both views of a model cannot drift
apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from .params import MassAction, ParamSet, ParamSet1P, ParamSet2P

ONE_PATCH_STATES = ("S", "I", "V")
TWO_PATCH_STATES = ("S1", "I1", "V1", "S2", "I2", "V2")


@dataclass(frozen=True)
class Reaction:
    """A transition channel: state -> state + delta at the given rate.

    ``rate`` accepts a state array of shape (..., n_states) and must be
    vectorized over leading axes; every rate law here is plain arithmetic in
    the state components, so a single definition serves the SSA (integer
    states), the ODE right-hand side (real states) and the truncated-chain
    oracle (batched states).
    """

    label: str
    delta: Tuple[int, ...]
    rate: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelSpec:
    """A model family as an explicit reaction network."""

    family: str  # "one_patch_ma" | "one_patch_sat" | "two_patch"
    state_names: Tuple[str, ...]
    reactions: Tuple[Reaction, ...]
    infectious_idx: Tuple[int, ...]
    params: ParamSet

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def rates(self, x) -> np.ndarray:
        """All reaction rates at state(s) x, stacked on the last axis."""
        x = np.asarray(x, dtype=float)
        return np.stack([r.rate(x) for r in self.reactions], axis=-1)

    def stoichiometry(self) -> np.ndarray:
        """(n_reactions, n_states) integer delta matrix."""
        return np.array([r.delta for r in self.reactions], dtype=np.int64)

    def infectious_total(self, x) -> np.ndarray:
        x = np.asarray(x)
        return x[..., list(self.infectious_idx)].sum(axis=-1)


def _foi_one_patch(foi, S, I, V):
    if isinstance(foi, MassAction):
        return S * (I + V)
    return S * (foi.m1 * I / (foi.a1 + I + V) + foi.m2 * V / (foi.a2 + I + V))


def build_one_patch(params: ParamSet1P) -> ModelSpec:
    """Six-reaction SIV network with mass-action or saturating infection."""
    p = params
    reactions = (
        Reaction("Birth of S", (1, 0, 0), lambda x: p.beta * x[..., 0]),
        Reaction("Death of S", (-1, 0, 0), lambda x: p.mu * x[..., 0] ** 2),
        Reaction("Infection", (-1, 1, 0),
                 lambda x: _foi_one_patch(p.foi, x[..., 0], x[..., 1], x[..., 2])),
        Reaction("Death of I", (0, -1, 0), lambda x: p.alpha * x[..., 1]),
        Reaction("Shedding of V", (0, 0, 1), lambda x: p.delta * x[..., 1]),
        Reaction("Clearance of V", (0, 0, -1), lambda x: p.omega * x[..., 2]),
    )
    family = "one_patch_ma" if isinstance(p.foi, MassAction) else "one_patch_sat"
    return ModelSpec(family, ONE_PATCH_STATES, reactions, (1, 2), params)


def build_two_patch(params: ParamSet2P) -> ModelSpec:
    """Fourteen-reaction two-patch network; viral diffusion couples the patches."""
    p = params
    reactions = (
        Reaction("Birth of S1", (1, 0, 0, 0, 0, 0), lambda x: p.beta1 * x[..., 0]),
        Reaction("Death of S1", (-1, 0, 0, 0, 0, 0), lambda x: p.mu1 * x[..., 0] ** 2),
        Reaction("Infection of S1", (-1, 1, 0, 0, 0, 0),
                 lambda x: x[..., 0] * (x[..., 1] + x[..., 2])),
        Reaction("Death of I1", (0, -1, 0, 0, 0, 0), lambda x: p.alpha * x[..., 1]),
        Reaction("Shedding of V1", (0, 0, 1, 0, 0, 0), lambda x: p.delta * x[..., 1]),
        Reaction("Clearance of V1", (0, 0, -1, 0, 0, 0), lambda x: p.omega * x[..., 2]),
        Reaction("Diffusion of V1", (0, 0, -1, 0, 0, 1), lambda x: p.k * x[..., 2]),
        Reaction("Birth of S2", (0, 0, 0, 1, 0, 0), lambda x: p.beta2 * x[..., 3]),
        Reaction("Death of S2", (0, 0, 0, -1, 0, 0), lambda x: p.mu2 * x[..., 3] ** 2),
        Reaction("Infection of S2", (0, 0, 0, -1, 1, 0),
                 lambda x: x[..., 3] * (x[..., 4] + x[..., 5])),
        Reaction("Death of I2", (0, 0, 0, 0, -1, 0), lambda x: p.alpha * x[..., 4]),
        Reaction("Shedding of V2", (0, 0, 0, 0, 0, 1), lambda x: p.delta * x[..., 4]),
        Reaction("Clearance of V2", (0, 0, 0, 0, 0, -1), lambda x: p.omega * x[..., 5]),
        Reaction("Diffusion of V2", (0, 0, 1, 0, 0, -1), lambda x: p.k * x[..., 5]),
    )
    return ModelSpec("two_patch", TWO_PATCH_STATES, reactions, (1, 2, 4, 5), params)


def build_model(params: ParamSet) -> ModelSpec:
    if isinstance(params, ParamSet2P):
        return build_two_patch(params)
    return build_one_patch(params)


# ---------------------------------------------------------------------------
# Reproduction numbers and equilibria
# ---------------------------------------------------------------------------

def r0(params: ParamSet) -> float:
    """Basic reproduction number for any of the three families."""
    if isinstance(params, ParamSet2P):
        return two_patch_r0(params)[2]
    p = params
    if isinstance(p.foi, MassAction):
        return (p.delta + p.omega) * p.beta / (p.alpha * p.omega * p.mu)
    f = p.foi
    return ((f.m1 * f.a2 + (p.delta / p.omega) * f.m2 * f.a1)
            / (p.alpha * f.a1 * f.a2)) * (p.beta / p.mu)


def two_patch_r0(params: ParamSet2P) -> Tuple[float, float, float]:
    """Patch-specific reproduction numbers and the combined two-patch value."""
    p = params
    w2k = p.omega * (2 * p.k + p.omega)
    num = w2k + p.delta * (p.k + p.omega)
    r1 = num * p.beta1 / (p.alpha * w2k * p.mu1)
    r2 = num * p.beta2 / (p.alpha * w2k * p.mu2)
    c = p.delta * p.k / (p.alpha * w2k)
    s1, s2 = p.s_bar1, p.s_bar2
    combined = 0.5 * (r1 + r2 + math.sqrt((r1 - r2) ** 2 + 4 * s1 * s2 * c * c))
    return r1, r2, combined


def dfe(params: ParamSet) -> np.ndarray:
    """Disease-free equilibrium: susceptibles at beta/mu, no infection."""
    if isinstance(params, ParamSet2P):
        return np.array([params.s_bar1, 0.0, 0.0, params.s_bar2, 0.0, 0.0])
    return np.array([params.s_bar, 0.0, 0.0])


def deterministic_field(model: ModelSpec) -> Callable[[np.ndarray], np.ndarray]:
    """The ODE right-hand side: sum of stoichiometry x rate at real states.

    States are clamped at zero before rate evaluation; the rate laws are not
    meaningful for negative populations and the clamp keeps the integrator
    from amplifying tiny negative overshoots.
    """
    stoich = model.stoichiometry().astype(float)

    def field(y: np.ndarray) -> np.ndarray:
        rates = model.rates(np.maximum(np.asarray(y, dtype=float), 0.0))
        return rates @ stoich

    return field


class EquilibriumNotFound(RuntimeError):
    """No positive endemic equilibrium (subcritical model or failed search)."""


def endemic_equilibrium(model: ModelSpec, tol: float = 1e-10) -> np.ndarray:
    """Locate the unique positive endemic equilibrium.

    Settles the deterministic system from an interior point (DFE with one
    infected individual added per patch) and polishes with a damped Newton
    solve of the vector field. Raises EquilibriumNotFound when R0 <= 1 or the
    search does not converge to an interior root. Results are cached per
    (model, tol) since the search is deterministic.
    """
    return _endemic_cached(model, tol).copy()


@lru_cache(maxsize=128)
def _endemic_cached(model: ModelSpec, tol: float) -> np.ndarray:
    if r0(model.params) <= 1.0:
        raise EquilibriumNotFound(f"R0 = {r0(model.params):.4g} <= 1")
    field = deterministic_field(model)
    y0 = dfe(model.params)
    for i in model.infectious_idx:
        if model.state_names[i].startswith("I"):
            y0[i] += 1.0
    sol = solve_ivp(lambda t, y: field(y), (0.0, 200.0), y0,
                    rtol=1e-8, atol=1e-10, method="RK45")
    if not sol.success:
        raise EquilibriumNotFound(f"settling integration failed: {sol.message}")
    res = root(field, sol.y[:, -1], method="hybr", tol=1e-13)
    eq = res.x
    residual = float(np.linalg.norm(field(eq)))
    # judge the root by residual and positivity; hybr sometimes reports
    # failure on ill-conditioned Jacobians even at a converged root
    if residual >= tol or np.any(eq <= 0):
        raise EquilibriumNotFound(
            f"root polish failed (residual {residual:.3g}, min component {eq.min():.3g})")
    return eq


def endemic_infectious_total(model: ModelSpec) -> float:
    """Total infectious population at the endemic equilibrium."""
    eq = endemic_equilibrium(model)
    return float(eq[list(model.infectious_idx)].sum())
