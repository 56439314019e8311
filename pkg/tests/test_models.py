import dataclasses

import numpy as np
import pytest

import patchproc as pp

from conftest import random_params


def rate_by_label(model, label, state):
    (reaction,) = [r for r in model.reactions if r.label == label]
    return float(reaction.rate(np.asarray(state, dtype=float)))


class TestReactionNetworks:
    def test_one_patch_has_six_reactions(self, model_ma, model_sat):
        assert len(model_ma.reactions) == 6
        assert len(model_sat.reactions) == 6
        assert model_ma.infectious_idx == (1, 2)

    def test_two_patch_has_fourteen_reactions(self, model_2p):
        assert len(model_2p.reactions) == 14
        assert model_2p.infectious_idx == (1, 2, 4, 5)

    def test_mass_action_infection_rate(self, model_ma):
        assert rate_by_label(model_ma, "Infection", (80, 1, 0)) == 80

    def test_saturating_infection_rate(self, model_sat):
        assert rate_by_label(model_sat, "Infection", (80, 1, 0)) == pytest.approx(60)

    def test_disease_free_set_absorbing_one_patch(self, model_ma):
        rates = model_ma.rates((5, 0, 0))
        for reaction, rate in zip(model_ma.reactions, rates):
            if reaction.label in ("Infection", "Death of I", "Shedding of V",
                                  "Clearance of V"):
                assert rate == 0

    def test_diffusion_rate_and_stoichiometry(self, model_2p):
        assert rate_by_label(model_2p, "Diffusion of V1",
                             (10, 0, 2, 10, 0, 0)) == pytest.approx(6)
        (diff,) = [r for r in model_2p.reactions if r.label == "Diffusion of V1"]
        assert diff.delta == (0, 0, -1, 0, 0, 1)

    def test_two_patch_infection_rate(self, model_2p):
        assert rate_by_label(model_2p, "Infection of S1",
                             (80, 1, 0, 60, 0, 0)) == 80

    def test_disease_free_set_absorbing_two_patch(self, model_2p):
        rates = dict(zip([r.label for r in model_2p.reactions],
                         model_2p.rates((80, 0, 0, 60, 0, 0))))
        disease = [lbl for lbl in rates
                   if "Birth" not in lbl and "Death of S" not in lbl
                   and "Infection" not in lbl]
        assert len(disease) == 8
        assert all(rates[lbl] == 0 for lbl in disease)
        assert rates["Infection of S1"] == 0 and rates["Infection of S2"] == 0

    def test_rates_nonnegative_and_zero_on_empty_components(self):
        rng = np.random.default_rng(7)
        for family in ("one_patch_ma", "one_patch_sat", "two_patch"):
            for _ in range(25):
                model = pp.build_model(random_params(rng, family))
                state = rng.integers(0, 6, size=model.n_states)
                rates = model.rates(state)
                assert np.all(rates >= 0)
                for reaction, rate in zip(model.reactions, rates):
                    decremented = [c for c, d in enumerate(reaction.delta) if d < 0]
                    if any(state[c] == 0 for c in decremented):
                        assert rate == 0


class TestReproductionNumbers:
    def test_r0_mass_action(self, params_ma):
        assert pp.r0(params_ma) == pytest.approx(32.12, abs=0.005)

    def test_r0_saturating(self, params_sat):
        assert pp.r0(params_sat) == pytest.approx(34.09, abs=0.005)

    def test_r0_two_patch(self, params_2p):
        r1, r2, combined = pp.two_patch_r0(params_2p)
        assert r1 == pytest.approx(29.76, abs=0.005)
        assert r2 == pytest.approx(22.32, abs=0.005)
        assert combined == pytest.approx(30.0, abs=0.5)
        assert combined >= max(r1, r2)

    def test_two_patch_reduces_to_one_patch_as_k_vanishes(self, params_2p):
        small_k = dataclasses.replace(params_2p, k=1e-8)
        combined = pp.two_patch_r0(small_k)[2]
        one1 = pp.r0(pp.ParamSet1P(beta=params_2p.beta1, mu=params_2p.mu1,
                                   alpha=params_2p.alpha, delta=params_2p.delta,
                                   omega=params_2p.omega))
        one2 = pp.r0(pp.ParamSet1P(beta=params_2p.beta2, mu=params_2p.mu2,
                                   alpha=params_2p.alpha, delta=params_2p.delta,
                                   omega=params_2p.omega))
        assert combined == pytest.approx(max(one1, one2), abs=1e-4)

    def test_r0_monotonicity(self):
        rng = np.random.default_rng(11)
        grid = [0.5, 1.0, 2.0, 4.0]
        for family in ("one_patch_ma", "one_patch_sat", "two_patch"):
            for _ in range(10):
                base = random_params(rng, family)
                if family == "two_patch":
                    up, down = ("beta1", "delta"), ("alpha", "omega", "mu1")
                else:
                    up, down = ("beta", "delta"), ("alpha", "omega", "mu")
                for name in up:
                    values = [pp.r0(dataclasses.replace(base, **{name: v}))
                              for v in grid]
                    assert all(a < b for a, b in zip(values, values[1:]))
                for name in down:
                    values = [pp.r0(dataclasses.replace(base, **{name: v}))
                              for v in grid]
                    assert all(a > b for a, b in zip(values, values[1:]))


class TestEquilibria:
    def test_dfe_values(self, params_ma, params_2p):
        assert pp.dfe(params_ma).tolist() == [80, 0, 0]
        assert pp.dfe(params_2p) == pytest.approx([80, 0, 0, 60, 0, 0])
        small = pp.ParamSet1P(beta=10, mu=1, alpha=3.3, delta=1.3, omega=4)
        assert pp.dfe(small)[0] == pytest.approx(10)

    def test_dfe_is_fixed_point(self, model_ma, model_sat, model_2p):
        for model in (model_ma, model_sat, model_2p):
            field = pp.deterministic_field(model)
            assert np.linalg.norm(field(pp.dfe(model.params))) < 1e-12

    def test_endemic_mass_action(self, model_ma, params_ma):
        eq = pp.endemic_equilibrium(model_ma)
        field = pp.deterministic_field(model_ma)
        assert np.linalg.norm(field(eq)) < 1e-10
        s_exact = params_ma.alpha * params_ma.omega / (params_ma.delta + params_ma.omega)
        assert eq[0] == pytest.approx(s_exact, abs=1e-8)
        assert eq[2] == pytest.approx(eq[1] * params_ma.delta / params_ma.omega,
                                      rel=1e-8)

    def test_endemic_saturating(self, model_sat):
        eq = pp.endemic_equilibrium(model_sat)
        field = pp.deterministic_field(model_sat)
        assert np.linalg.norm(field(eq)) < 1e-10
        assert np.all(eq > 0)

    def test_endemic_two_patch(self, model_2p):
        eq = pp.endemic_equilibrium(model_2p)
        field = pp.deterministic_field(model_2p)
        assert np.linalg.norm(field(eq)) < 1e-8
        assert np.all(eq > 0)

    def test_subcritical_has_no_endemic_equilibrium(self):
        sub = pp.ParamSet1P(beta=0.1, mu=1, alpha=3.3, delta=1.3, omega=4)
        assert pp.r0(sub) < 1
        with pytest.raises(pp.EquilibriumNotFound):
            pp.endemic_equilibrium(pp.build_one_patch(sub))

    def test_endemic_infectious_total(self, model_ma, model_2p):
        assert pp.endemic_infectious_total(model_ma) == pytest.approx(3.875, abs=1e-3)
        assert pp.endemic_infectious_total(model_2p) == pytest.approx(6.177, abs=1e-2)
