import os

import numpy as np
import pytest

import patchproc as pp

#: PATCHPROC_QUICK=1 scales Monte Carlo budgets down 100x and widens the
#: documented tolerances accordingly.
QUICK = os.environ.get("PATCHPROC_QUICK", "") == "1"


@pytest.fixture(scope="session")
def params_ma():
    return pp.ParamSet1P(beta=4, mu=0.05, alpha=3.3, delta=1.3, omega=4)


@pytest.fixture(scope="session")
def params_sat():
    return pp.ParamSet1P(beta=4, mu=0.05, alpha=3.3, delta=1.3, omega=4,
                         foi=pp.Saturating(m1=3, m2=2.5, a1=3, a2=2))


@pytest.fixture(scope="session")
def params_2p():
    return pp.ParamSet2P(beta1=4, mu1=0.05, beta2=2.4, mu2=0.04,
                         alpha=3.3, delta=1.3, omega=4, k=3)


@pytest.fixture(scope="session")
def model_ma(params_ma):
    return pp.build_one_patch(params_ma)


@pytest.fixture(scope="session")
def model_sat(params_sat):
    return pp.build_one_patch(params_sat)


@pytest.fixture(scope="session")
def model_2p(params_2p):
    return pp.build_two_patch(params_2p)


def random_params(rng: np.random.Generator, family: str):
    """A random strictly positive parameter set of the given family."""
    def draw(lo=0.05, hi=15.0):
        return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))

    if family == "two_patch":
        return pp.ParamSet2P(beta1=draw(), mu1=draw(), beta2=draw(),
                             mu2=draw(), alpha=draw(), delta=draw(),
                             omega=draw(), k=draw())
    foi = pp.MassAction() if family == "one_patch_ma" else pp.Saturating(
        m1=draw(), m2=draw(), a1=draw(), a2=draw())
    return pp.ParamSet1P(beta=draw(), mu=draw(), alpha=draw(), delta=draw(),
                         omega=draw(), foi=foi)


def branching_threshold(params) -> float:
    """Criticality parameter of the branching approximation.

    Coincides with r0 for the mass-action families. The saturating
    branching process sees the per-capita infection rates m/(a+1) of the
    single-individual state rather than the linearized m/a, so its
    threshold combines those rates instead; it never exceeds r0.
    """
    if isinstance(params, pp.ParamSet1P) and isinstance(params.foi,
                                                       pp.Saturating):
        f = params.foi
        s_bar = params.beta / params.mu
        d1 = f.m1 / (f.a1 + 1.0)
        d2 = f.m2 / (f.a2 + 1.0)
        return (s_bar / params.alpha) * (d1 + params.delta / params.omega * d2)
    return pp.r0(params)
