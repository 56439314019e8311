"""Multitype branching approximation of the chain near the disease-free state.

Each infectious type reproduces independently with a finite offspring
distribution derived from the competing exponential reactions, with the
susceptible population frozen at its disease-free level. Extinction
probabilities are the minimal fixed point of the offspring pgf system,
available in closed form for the one-patch families and by iteration in
general.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .models import ModelSpec, r0
from .params import MassAction, ParamSet1P, ParamSet2P

Outcome = Tuple[int, ...]


@dataclass(frozen=True)
class OffspringPgf:
    """Per-type finite offspring distributions.

    outcomes[i] maps an offspring multi-index (r1..rk) to its probability.
    """

    type_names: Tuple[str, ...]
    outcomes: Tuple[Dict[Outcome, float], ...]

    def __post_init__(self):
        k = len(self.type_names)
        if len(self.outcomes) != k:
            raise ValueError("one outcome map required per type")
        for i, omap in enumerate(self.outcomes):
            total = 0.0
            for idx, p in omap.items():
                if len(idx) != k or any(r < 0 for r in idx):
                    raise ValueError(f"bad offspring index {idx} for type {i}")
                if not (0.0 <= p <= 1.0):
                    raise ValueError(f"probability {p} outside [0,1]")
                total += p
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"type {i} probabilities sum to {total}")

    @property
    def k(self) -> int:
        return len(self.type_names)

    def evaluate(self, u: Sequence[float]) -> np.ndarray:
        """F(u): per-type pgf values."""
        u = np.asarray(u, dtype=float)
        out = np.empty(self.k)
        for i, omap in enumerate(self.outcomes):
            s = 0.0
            for idx, p in omap.items():
                term = p
                for j, r in enumerate(idx):
                    if r:
                        term *= u[j] ** r
                s += term
            out[i] = s
        return out


@dataclass(frozen=True)
class ExtinctionVector:
    q: np.ndarray
    method: str  # "closed_form" | "iteration"
    residual: float
    iters: int = 0


def offspring_pgf_at_dfe(model: ModelSpec) -> OffspringPgf:
    """Offspring distributions with susceptibles frozen at the DFE level."""
    p = model.params
    if isinstance(p, ParamSet2P):
        s1, s2 = p.s_bar1, p.s_bar2
        ti = p.alpha + p.delta
        tv1 = p.omega + p.k + s1
        tv2 = p.omega + p.k + s2
        t1 = ti + s1
        t2 = ti + s2
        return OffspringPgf(
            ("I1", "V1", "I2", "V2"),
            (
                {(0, 0, 0, 0): p.alpha / t1, (1, 1, 0, 0): p.delta / t1,
                 (2, 0, 0, 0): s1 / t1},
                {(0, 0, 0, 0): p.omega / tv1, (1, 1, 0, 0): s1 / tv1,
                 (0, 0, 0, 1): p.k / tv1},
                {(0, 0, 0, 0): p.alpha / t2, (0, 0, 1, 1): p.delta / t2,
                 (0, 0, 2, 0): s2 / t2},
                {(0, 0, 0, 0): p.omega / tv2, (0, 0, 1, 1): s2 / tv2,
                 (0, 1, 0, 0): p.k / tv2},
            ))
    assert isinstance(p, ParamSet1P)
    if isinstance(p.foi, MassAction):
        phi = psi = 1.0
    else:
        phi = p.foi.m1 / (p.foi.a1 + 1.0)
        psi = p.foi.m2 / (p.foi.a2 + 1.0)
    s = p.s_bar
    ti = p.alpha + p.delta + s * phi
    tv = p.omega + s * psi
    return OffspringPgf(
        ("I", "V"),
        (
            {(0, 0): p.alpha / ti, (1, 1): p.delta / ti, (2, 0): s * phi / ti},
            {(0, 0): p.omega / tv, (1, 1): s * psi / tv},
        ))


def expectation_matrix(pgf: OffspringPgf) -> np.ndarray:
    """M = DF(1): entry (i, j) is the expected type-j offspring of a type-i parent."""
    m = np.zeros((pgf.k, pgf.k))
    for i, omap in enumerate(pgf.outcomes):
        for idx, p in omap.items():
            m[i] += p * np.asarray(idx, dtype=float)
    return m


#: Any nonnegative k x k matrix that is primitive has a positive power no
#: higher than the Wielandt bound (k-1)^2 + 1.
def is_primitive(m: np.ndarray) -> bool:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(m < 0):
        raise ValueError("matrix must be nonnegative")
    k = m.shape[0]
    bound = (k - 1) ** 2 + 1
    power = (m > 0).astype(float)
    step = power.copy()
    for _ in range(bound):
        if np.all(power > 0):
            return True
        power = ((power @ step) > 0).astype(float)
    return bool(np.all(power > 0))


def spectral_radius(m: np.ndarray, tol: float = 1e-12,
                    max_iter: int = 100_000) -> float:
    """Largest eigenvalue magnitude of a nonnegative matrix, by power iteration."""
    m = np.asarray(m, dtype=float)
    if np.all(m == 0):
        return 0.0
    v = np.full(m.shape[0], 1.0 / math.sqrt(m.shape[0]))
    rho = 0.0
    for _ in range(max_iter):
        w = m @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        new_rho = float(v @ (m @ v))
        if abs(new_rho - rho) <= tol * max(1.0, abs(new_rho)):
            return new_rho
        rho = new_rho
    raise RuntimeError(f"power iteration did not converge in {max_iter} steps")


def extinction_iterate(pgf: OffspringPgf, tol: float = 1e-12,
                       max_iter: int = 1_000_000) -> ExtinctionVector:
    """Minimal fixed point of F by iterating F^n(0); monotone nondecreasing."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = np.zeros(pgf.k)
    for it in range(1, max_iter + 1):
        nxt = pgf.evaluate(q)
        step = float(np.max(np.abs(nxt - q)))
        q = nxt
        if step < tol:
            residual = float(np.max(np.abs(pgf.evaluate(q) - q)))
            return ExtinctionVector(q, "iteration", residual, it)
    raise RuntimeError(f"fixed-point iteration did not converge in {max_iter} steps")


def extinction_closed_form(params: ParamSet1P) -> ExtinctionVector:
    """Closed-form extinction probabilities for the one-patch families.

    Values are clipped to [0, 1]; subcritical parameters give (1, 1).
    """
    s = params.s_bar
    al, de, om = params.alpha, params.delta, params.omega
    if isinstance(params.foi, MassAction):
        disc = (al - (om + s)) ** 2 + de * (de + 2 * (al + om + s))
        q1 = (al + de + om + s - math.sqrt(disc)) / (2 * s)
        q2 = om / (om + s * (1.0 - q1))
    else:
        d1 = params.foi.m1 / (params.foi.a1 + 1.0)
        d2 = params.foi.m2 / (params.foi.a2 + 1.0)
        disc = ((al * d2 - d1 * (s * d2 + om)) ** 2
                + de * d2 * d2 * (de + 2 * al + 2 * s * d1)
                + 2 * de * om * d1 * d2)
        q1 = (al * d2 + de * d2 + om * d1 + s * d1 * d2 - math.sqrt(disc)) / (2 * s * d1 * d2)
        q2 = om / (om + s * d2 * (1.0 - q1))
    q = np.clip([q1, q2], 0.0, 1.0)
    pgf = offspring_pgf_at_dfe(_one_patch_model_stub(params))
    residual = float(np.max(np.abs(pgf.evaluate(q) - q)))
    return ExtinctionVector(q, "closed_form", residual)


def _one_patch_model_stub(params: ParamSet1P) -> ModelSpec:
    from .models import build_one_patch

    return build_one_patch(params)


def p0(q: Sequence[float], z0: Sequence[int]) -> float:
    """Extinction probability from initial infectious counts: prod q_i ** j_i."""
    q = np.asarray(q, dtype=float)
    z0 = np.asarray(z0)
    if q.shape != z0.shape:
        raise ValueError("q and z0 must have the same length")
    if np.any(z0 < 0):
        raise ValueError("initial counts must be nonnegative")
    return float(np.prod(q ** z0))


def extinction_report(model: ModelSpec, method: str = "auto",
                      tol: float = 1e-12) -> dict:
    """JSON-ready extinction summary for a model."""
    pgf = offspring_pgf_at_dfe(model)
    m = expectation_matrix(pgf)
    if method == "auto":
        method = "closed_form" if isinstance(model.params, ParamSet1P) else "iteration"
    if method == "closed_form":
        if not isinstance(model.params, ParamSet1P):
            raise ValueError("closed form is available for one-patch families only")
        vec = extinction_closed_form(model.params)
    elif method == "iteration":
        vec = extinction_iterate(pgf, tol=tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return {
        "family": model.family,
        "params": model.params.to_dict(),
        "q": [float(v) for v in vec.q],
        "method": vec.method,
        "residual": vec.residual,
        "iters": vec.iters,
        "r0": r0(model.params),
        "spectral_radius": spectral_radius(m),
    }
