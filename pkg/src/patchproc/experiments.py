"""Reference experiments: exact truncated-chain oracle, tables, sweeps and fits.

The oracle solves the embedded jump chain's hitting problem on a capped state
space by a sparse linear solve, giving an independent check on both the Monte
Carlo estimates and the branching approximation. Capping the susceptible
range makes some boundary states non-absorbing; the oracle returns a bracket
(lower bound counts escape across a susceptible cap as non-extinction, upper
bound disallows those transitions) so its truncation error is explicit.
Reaching the outbreak threshold is absorbing non-extinction in both bounds,
matching the Monte Carlo classification.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import gmres, spilu, spsolve, LinearOperator

from .branching import (extinction_closed_form, extinction_iterate,
                        offspring_pgf_at_dfe, p0)
from .models import ModelSpec, build_model, build_one_patch, r0
from .params import ParamSet1P, ParamSet2P, Saturating
from .ssa import McEstimate, StopRule, estimate_extinction, resolve_threshold

_SPSOLVE_MAX = 40_000


class StateSpaceOverflow(RuntimeError):
    """Capped state space exceeds the configured size limit."""


@dataclass(frozen=True)
class OracleBracket:
    lower: float
    upper: float
    n_states: int
    threshold: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _solve_sparse(a: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    if a.shape[0] <= _SPSOLVE_MAX:
        return spsolve(a.tocsc(), b)
    ilu = spilu(a.tocsc(), drop_tol=1e-5, fill_factor=20)
    precond = LinearOperator(a.shape, ilu.solve)
    x, info = gmres(a, b, rtol=1e-12, atol=0.0, M=precond, maxiter=2000)
    if info != 0:
        raise RuntimeError(f"GMRES did not converge (info={info})")
    return x


def truncated_oracle(model: ModelSpec, init, caps: Sequence[int],
                     outbreak_threshold: Optional[int] = None,
                     stop: Optional[StopRule] = None,
                     max_states: int = 1_000_000) -> OracleBracket:
    """Exact extinction probability bracket on the capped chain.

    caps gives a per-component upper bound; infectious components are further
    bounded by the outbreak threshold, which defaults to the same automatic
    rule the simulator uses.
    """
    init = np.asarray(init, dtype=np.int64)
    caps = np.asarray(caps, dtype=np.int64)
    if caps.shape != (model.n_states,) or np.any(caps < 1):
        raise ValueError(f"caps must be {model.n_states} positive integers")
    if init.shape != (model.n_states,) or np.any(init < 0) or np.any(init > caps):
        raise ValueError("init must lie inside the caps")
    if outbreak_threshold is None:
        outbreak_threshold = resolve_threshold(model, stop or StopRule())
    theta = int(outbreak_threshold)
    inf_idx = list(model.infectious_idx)

    eff_caps = caps.copy()
    eff_caps[inf_idx] = np.minimum(eff_caps[inf_idx], theta - 1)
    shape = tuple(int(c) + 1 for c in eff_caps)
    n_cells = int(np.prod([float(s) for s in shape]))
    if n_cells > 40 * max_states:
        raise StateSpaceOverflow(
            f"enumeration grid has {n_cells} cells (limit {40 * max_states})")
    grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    all_states = np.stack([g.ravel() for g in grids], axis=-1)
    inf_tot = all_states[:, inf_idx].sum(axis=1)
    transient = (inf_tot >= 1) & (inf_tot <= theta - 1)
    states = all_states[transient]
    n = states.shape[0]
    if n > max_states:
        raise StateSpaceOverflow(f"{n} transient states exceed limit {max_states}")

    index = np.full(n_cells, -1, dtype=np.int64)
    flat = np.ravel_multi_index(states.T, shape)
    index[flat] = np.arange(n)

    rates = model.rates(states)  # (n, n_reactions)
    stoich = model.stoichiometry()
    total_rate = rates.sum(axis=1)
    removed = np.zeros(n)  # rate mass of cap-escaping transitions, per state
    b = np.zeros(n)
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    for j in range(len(model.reactions)):
        rate = rates[:, j]
        active = rate > 0
        if not np.any(active):
            continue
        tgt = states[active] + stoich[j]
        r = rate[active]
        src = np.flatnonzero(active)
        tot = tgt[:, inf_idx].sum(axis=1)
        extinct = tot == 0
        outbreak = tot >= theta
        over = (~extinct & ~outbreak
                & np.any(tgt > eff_caps, axis=1))
        interior = ~(extinct | outbreak | over)
        np.add.at(b, src[extinct], r[extinct])
        np.add.at(removed, src[over], r[over])
        if np.any(interior):
            tgt_idx = index[np.ravel_multi_index(tgt[interior].T, shape)]
            if np.any(tgt_idx < 0):
                raise RuntimeError("interior target missing from state index")
            rows.append(src[interior])
            cols.append(tgt_idx)
            vals.append(r[interior])

    q = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    diag_all = np.arange(n)
    a_low = sp.diags(total_rate) - q
    a_up = sp.diags(total_rate - removed) - q
    p_low = _solve_sparse(a_low.tocsr(), b)
    p_up = _solve_sparse(a_up.tocsr(), b)

    init_tot = int(init[inf_idx].sum()) if inf_idx else 0
    if init_tot == 0:
        return OracleBracket(1.0, 1.0, n, theta)
    if init_tot >= theta:
        return OracleBracket(0.0, 0.0, n, theta)
    i0 = int(index[np.ravel_multi_index(init, shape)])
    lo = float(min(p_low[i0], p_up[i0]))
    hi = float(max(p_low[i0], p_up[i0]))
    return OracleBracket(max(0.0, lo), min(1.0, hi), n, theta)


# ---------------------------------------------------------------------------
# Power-law fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of y = b * x ** lam in log-log coordinates."""

    b: float
    lam: float
    r_squared: float


def fit_power_law(points: Sequence[Tuple[float, float]]) -> PowerLawFit:
    pts = [(x, y) for x, y in points if x > 0 and y > 0]
    if len(pts) < 2:
        raise ValueError("need at least 2 points with x > 0 and y > 0")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    if np.ptp(lx) == 0:
        raise ValueError("x values are degenerate")
    lam, intercept = np.polyfit(lx, ly, 1)
    pred = lam * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(float(np.exp(intercept)), float(lam), r2)


# ---------------------------------------------------------------------------
# Beta sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    beta: float
    s_bar: float
    p0_mtbp: float
    p0_mc: Optional[McEstimate]
    supercritical: bool

    @property
    def abs_err(self) -> Optional[float]:
        if self.p0_mc is None:
            return None
        return abs(self.p0_mtbp - self.p0_mc.p_hat)

    @property
    def rel_err(self) -> Optional[float]:
        """Flagged as None rather than fabricated when p_hat = 0."""
        if self.p0_mc is None or self.p0_mc.p_hat == 0:
            return None
        return self.abs_err / self.p0_mc.p_hat


def beta_sweep(base: ParamSet1P, betas: Sequence[float], n: int,
               master_seed: int, stop: Optional[StopRule] = None) -> List[SweepRow]:
    """Extinction comparison along a beta grid with mu = 1 (so S-bar = beta).

    The initial state is (S-bar, 1, 0) at each point. Subcritical points are
    flagged and skipped rather than silently included.
    """
    if base.mu != 1.0:
        raise ValueError("beta sweeps use the mu = 1 convention")
    stop = stop or StopRule()
    rows = []
    for i, beta in enumerate(betas):
        params = dataclasses.replace(base, beta=float(beta))
        if r0(params) <= 1.0:
            rows.append(SweepRow(float(beta), params.s_bar, 1.0, None, False))
            continue
        q = extinction_closed_form(params).q
        model = build_one_patch(params)
        init = (int(round(params.s_bar)), 1, 0)
        est = estimate_extinction(model, init, stop, n,
                                  master_seed, base_stream=i * n)
        rows.append(SweepRow(float(beta), params.s_bar, float(q[0]),
                             est.total, True))
    return rows


# ---------------------------------------------------------------------------
# Table reproduction
# ---------------------------------------------------------------------------

PARAMS_1P_MA = ParamSet1P(beta=4, mu=0.05, alpha=3.3, delta=1.3, omega=4)
PARAMS_1P_SAT = ParamSet1P(beta=4, mu=0.05, alpha=3.3, delta=1.3, omega=4,
                           foi=Saturating(m1=3, m2=2.5, a1=3, a2=2))
PARAMS_2P = ParamSet2P(beta1=4, mu1=0.05, beta2=2.4, mu2=0.04,
                       alpha=3.3, delta=1.3, omega=4, k=3)

SWEEP_BASELINE = ParamSet1P(beta=10, mu=1, alpha=3.3, delta=1.3, omega=4)
SWEEP_LOW_MORTALITY = ParamSet1P(beta=10, mu=1, alpha=1.5, delta=1.3, omega=4)
SWEEP_SATURATING = ParamSet1P(beta=10, mu=1, alpha=3.3, delta=1.3, omega=4,
                              foi=Saturating(m1=6, m2=7.5, a1=3, a2=2))
SWEEP_BETAS = (10.0, 20.0, 30.0, 40.0, 50.0)

TABLE_IDS = ("T2", "T4", "T3dM", "T5")


@dataclass(frozen=True)
class TableResult:
    table_id: str
    columns: Tuple[str, ...]
    rows: List[dict]
    manifest: dict

    def write(self, out_dir) -> Tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.table_id}.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns)
            writer.writeheader()
            writer.writerows(self.rows)
        manifest_path = out / "manifest.json"
        existing = {}
        if manifest_path.exists():
            existing = json.loads(manifest_path.read_text())
        existing[self.table_id] = self.manifest
        manifest_path.write_text(json.dumps(existing, indent=2, sort_keys=True))
        return csv_path, manifest_path


def _one_patch_table(table_id: str, params: ParamSet1P, n: int,
                     master_seed: int, stop: StopRule) -> TableResult:
    model = build_one_patch(params)
    q = extinction_closed_form(params).q
    s0 = int(round(params.s_bar))
    rows = []
    for i, (i0, v0) in enumerate(((1, 0), (0, 1), (1, 1))):
        est = estimate_extinction(model, (s0, i0, v0), stop, n,
                                  master_seed, base_stream=i * n)
        rows.append({
            "I0": i0, "V0": v0,
            "p0_mtbp": round(p0(q, (i0, v0)), 6),
            "p0_mc": est.total.p_hat,
            "std_err": round(est.total.std_err, 8),
            "censored": est.censored,
        })
    manifest = {"params": params.to_dict(), "n": n, "master_seed": master_seed,
                "outbreak_threshold": resolve_threshold(model, stop)}
    return TableResult(table_id,
                       ("I0", "V0", "p0_mtbp", "p0_mc", "std_err", "censored"),
                       rows, manifest)


def _two_patch_table(n: int, master_seed: int, stop: StopRule) -> TableResult:
    model = build_model(PARAMS_2P)
    q = extinction_iterate(offspring_pgf_at_dfe(model)).q
    s1 = int(round(PARAMS_2P.s_bar1))
    s2 = int(round(PARAMS_2P.s_bar2))
    inits = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    rows = []
    for i, z in enumerate(inits):
        init = (s1, z[0], z[1], s2, z[2], z[3])
        est = estimate_extinction(model, init, stop, n,
                                  master_seed, base_stream=i * n)
        rows.append({
            "I1_0": z[0], "V1_0": z[1], "I2_0": z[2], "V2_0": z[3],
            "p0_mtbp": round(p0(q, z), 6),
            "p0_mc": est.total.p_hat,
            "std_err": round(est.total.std_err, 8),
            "censored": est.censored,
            "p_patch1_extinct": est.partial["patch1_extinct"].p_hat,
            "p_patch2_extinct": est.partial["patch2_extinct"].p_hat,
        })
    manifest = {"params": PARAMS_2P.to_dict(), "n": n, "master_seed": master_seed,
                "outbreak_threshold": resolve_threshold(model, stop)}
    return TableResult("T2",
                       ("I1_0", "V1_0", "I2_0", "V2_0", "p0_mtbp", "p0_mc",
                        "std_err", "censored",
                        "p_patch1_extinct", "p_patch2_extinct"),
                       rows, manifest)


def _error_table(n: int, master_seed: int, stop: StopRule) -> TableResult:
    configs = (("f1_alpha3.3", SWEEP_BASELINE),
               ("f1_alpha1.5", SWEEP_LOW_MORTALITY),
               ("f2_alpha3.3", SWEEP_SATURATING))
    sweeps = {}
    for j, (name, base) in enumerate(configs):
        seed = master_seed + j
        sweeps[name] = beta_sweep(base, SWEEP_BETAS, n, seed, stop)
    rows = []
    for i, beta in enumerate(SWEEP_BETAS):
        row = {"init_pop": int(beta)}
        for name, _ in configs:
            row[f"abs_err_{name}"] = round(sweeps[name][i].abs_err, 6)
        rows.append(row)
    manifest = {
        "configs": {name: base.to_dict() for name, base in configs},
        "betas": list(SWEEP_BETAS), "n": n, "master_seed": master_seed,
    }
    return TableResult("T5",
                       ("init_pop",) + tuple(f"abs_err_{name}" for name, _ in configs),
                       rows, manifest)


def reproduce_table(table_id: str, n: int = 1_000_000,
                    master_seed: int = 20260824,
                    stop: Optional[StopRule] = None,
                    out_dir=None) -> TableResult:
    """Regenerate one of the reference tables at the configured budget."""
    stop = stop or StopRule()
    t0 = time.perf_counter()
    if table_id == "T4":
        result = _one_patch_table("T4", PARAMS_1P_MA, n, master_seed, stop)
    elif table_id == "T3dM":
        result = _one_patch_table("T3dM", PARAMS_1P_SAT, n, master_seed, stop)
    elif table_id == "T2":
        result = _two_patch_table(n, master_seed, stop)
    elif table_id == "T5":
        result = _error_table(n, master_seed, stop)
    else:
        raise ValueError(f"unknown table id {table_id!r}; choose from {TABLE_IDS}")
    result.manifest["runtime_s"] = round(time.perf_counter() - t0, 3)
    if out_dir is not None:
        result.write(out_dir)
    return result
