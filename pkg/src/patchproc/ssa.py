"""Exact stochastic simulation of the CTMC and Monte Carlo extinction estimates.

A realization ends in one of three ways: the infectious classes all hit zero
(Extinct), the infectious total reaches the outbreak threshold (Outbreak), or
the event/time budget runs out (Censored). Censored runs count as non-extinct
in estimates and are reported separately.

The outbreak threshold deserves care. In these models the susceptible supply
caps how high the infectious total can ever climb (roughly at the epidemic
peak, which is below the disease-free susceptible population), so a fixed
absolute threshold silently reclassifies every run as extinct once it exceeds
that peak. The ``auto`` threshold is therefore the infectious total at the
endemic equilibrium, rounded up: a trajectory that climbs to the quasi-steady
state has established an outbreak, and one that dies before reaching it is a
minor die-out. This choice reproduces the reference Monte Carlo tables across
population sizes from 10 to 160.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .models import (EquilibriumNotFound, ModelSpec,
                     endemic_infectious_total, r0)
from .params import ParamSet1P, ParamSet2P, MassAction
from .rng import RngSpec, Stream

#: Fallback threshold when the endemic equilibrium does not exist
#: (subcritical models, where extinction is certain anyway).
FALLBACK_THRESHOLD = 150


def set_threads(n: int) -> None:
    """Cap worker threads for batch simulation; results do not depend on it.

    Requests beyond the thread count numba reserved at startup are clamped,
    so asking for more threads than the machine has is harmless.
    """
    import numba

    numba.set_num_threads(min(max(1, n), numba.config.NUMBA_NUM_THREADS))


@dataclass(frozen=True)
class StopRule:
    """Realization termination rule.

    outbreak_threshold None means "auto": the endemic infectious total of the
    model, computed per run. Explicit thresholds must be >= 2.
    """

    outbreak_threshold: Optional[int] = None
    max_events: int = 10_000_000
    max_time: float = 1e4

    def __post_init__(self):
        if self.outbreak_threshold is not None and self.outbreak_threshold < 2:
            raise ValueError("outbreak_threshold must be >= 2")
        if self.max_events <= 0 or self.max_time <= 0:
            raise ValueError("max_events and max_time must be positive")


def resolve_threshold(model: ModelSpec, stop: StopRule) -> int:
    if stop.outbreak_threshold is not None:
        return stop.outbreak_threshold
    try:
        return max(2, math.ceil(endemic_infectious_total(model) - 1e-9))
    except EquilibriumNotFound:
        if r0(model.params) > 1.0:
            raise
        return FALLBACK_THRESHOLD


@dataclass(frozen=True)
class Subspace:
    """A named partial-extinction event, defined as a state-set predicate.

    ``implied_by_total_extinction`` covers events like "disease extinct in
    patch 1": a totally extinct realization has lost the disease in every
    patch even if the strict predicate (other patch still infected) was never
    true along the way.
    """

    name: str
    predicate: Callable[[np.ndarray], bool]
    implied_by_total_extinction: bool = True


def two_patch_subspaces() -> Tuple[Subspace, ...]:
    return (
        Subspace("patch1_extinct",
                 lambda x: x[1] + x[2] == 0 and x[4] + x[5] > 0),
        Subspace("patch2_extinct",
                 lambda x: x[4] + x[5] == 0 and x[1] + x[2] > 0),
    )


@dataclass(frozen=True)
class Outcome:
    kind: str  # "extinct" | "outbreak" | "censored"
    t_final: float
    events_used: int
    partial_hits: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class McEstimate:
    hits: int
    n: int

    @property
    def p_hat(self) -> float:
        return self.hits / self.n

    @property
    def std_err(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.n)

    def to_dict(self) -> dict:
        return {"hits": self.hits, "n": self.n,
                "p_hat": self.p_hat, "std_err": self.std_err}


@dataclass(frozen=True)
class ExtinctionEstimate:
    """Monte Carlo extinction estimate plus per-subspace partial estimates."""

    total: McEstimate
    censored: int
    partial: Dict[str, McEstimate]
    threshold: int
    master_seed: int

    def to_dict(self) -> dict:
        d = self.total.to_dict()
        d["censored"] = self.censored
        d["outbreak_threshold"] = self.threshold
        d["master_seed"] = self.master_seed
        d["partial"] = {name: est.to_dict() for name, est in self.partial.items()}
        return d


class SimulationError(RuntimeError):
    """Internal inconsistency during simulation (should be unreachable)."""


def _validate_init(model: ModelSpec, init) -> np.ndarray:
    init = np.asarray(init, dtype=np.int64)
    if init.shape != (model.n_states,):
        raise ValueError(f"init must have length {model.n_states}")
    if np.any(init < 0):
        raise ValueError("init components must be nonnegative")
    return init


def simulate_one(model: ModelSpec, init, stop: StopRule, rng: RngSpec,
                 subspaces: Optional[Sequence[Subspace]] = None,
                 log: Optional[list] = None) -> Outcome:
    """Run one exact realization (Gillespie direct method).

    ``log``, if given, collects (event_index, t, reaction_label, state) rows.
    Draws come from the stream identified by ``rng``; realization i of a batch
    run is reproduced exactly by ``stream_id = base_stream + i``.
    """
    x = _validate_init(model, init)
    if subspaces is None:
        subspaces = two_patch_subspaces() if model.family == "two_patch" else ()
    threshold = resolve_threshold(model, stop)
    stream = Stream(rng)
    t = 0.0
    events = 0
    partial: Dict[str, float] = {}

    def check_subspaces():
        for sub in subspaces:
            if sub.name not in partial and sub.predicate(x):
                partial[sub.name] = t

    check_subspaces()
    kind = "censored"
    while True:
        tot = int(model.infectious_total(x))
        if tot == 0:
            kind = "extinct"
            break
        if tot >= threshold:
            kind = "outbreak"
            break
        if events >= stop.max_events:
            kind = "censored"
            break
        rates = model.rates(x)
        total_rate = float(rates.sum())
        if total_rate <= 0.0:
            raise SimulationError(
                f"zero total rate with infectious total {tot} at state {x.tolist()}")
        t -= math.log(1.0 - stream.uniform()) / total_rate
        if t > stop.max_time:
            t = stop.max_time
            kind = "censored"
            break
        target = stream.uniform() * total_rate
        cum = 0.0
        idx = len(model.reactions) - 1
        for j, rate in enumerate(rates):
            cum += float(rate)
            if target < cum:
                idx = j
                break
        x = x + model.stoichiometry()[idx]
        events += 1
        if log is not None:
            log.append((events, t, model.reactions[idx].label, tuple(int(v) for v in x)))
        check_subspaces()

    if kind == "extinct":
        for sub in subspaces:
            if sub.implied_by_total_extinction and sub.name not in partial:
                partial[sub.name] = t
    return Outcome(kind, t, events, partial)


def _batch(model: ModelSpec, init: np.ndarray, threshold: int, stop: StopRule,
           master_seed: int, base_stream: int, n: int):
    """Dispatch to the numba kernel for the model family."""
    p = model.params
    if isinstance(p, ParamSet2P):
        return _kernels.two_patch_batch(
            n, p.beta1, p.mu1, p.beta2, p.mu2, p.alpha, p.delta, p.omega, p.k,
            int(init[0]), int(init[1]), int(init[2]),
            int(init[3]), int(init[4]), int(init[5]),
            threshold, stop.max_events, stop.max_time, master_seed, base_stream)
    assert isinstance(p, ParamSet1P)
    if isinstance(p.foi, MassAction):
        foi_code, m1, m2, a1, a2 = _kernels.FOI_MASS_ACTION, 0.0, 0.0, 1.0, 1.0
    else:
        foi_code = _kernels.FOI_SATURATING
        m1, m2, a1, a2 = p.foi.m1, p.foi.m2, p.foi.a1, p.foi.a2
    kind, t_final, events = _kernels.one_patch_batch(
        n, foi_code, p.beta, p.mu, p.alpha, p.delta, p.omega, m1, m2, a1, a2,
        int(init[0]), int(init[1]), int(init[2]),
        threshold, stop.max_events, stop.max_time, master_seed, base_stream)
    return kind, t_final, events, None, None


def estimate_extinction(model: ModelSpec, init, stop: StopRule, n: int,
                        master_seed: int, base_stream: int = 0) -> ExtinctionEstimate:
    """Estimate extinction probability over n independent realizations.

    Realization i uses stream ``base_stream + i``; hit counts are identical
    under any thread schedule. Censored realizations count as non-extinct.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    init = _validate_init(model, init)
    threshold = resolve_threshold(model, stop)
    kind, _, _, hit1, hit2 = _batch(model, init, threshold, stop,
                                    master_seed, base_stream, n)
    extinct = int(np.count_nonzero(kind == 0))
    censored = int(np.count_nonzero(kind == 2))
    partial: Dict[str, McEstimate] = {}
    if hit1 is not None:
        partial["patch1_extinct"] = McEstimate(int(hit1.sum()), n)
        partial["patch2_extinct"] = McEstimate(int(hit2.sum()), n)
    return ExtinctionEstimate(McEstimate(extinct, n), censored, partial,
                              threshold, master_seed)
