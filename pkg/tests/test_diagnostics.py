import math

import numpy as np
import pytest

from nematic_el.coefficients import PRESETS, coercivity_constants, preset
from nematic_el.diagnostics import (
    BASE_COLUMNS,
    EnergyRecord,
    absorbing_quantity,
    budget_flux,
    dissipation_components,
    dissipative_bound_check,
    dissipative_bound_detail,
    energy_budget_residual,
    equilibrium_residual,
    evaluate_record,
    fit_decay_exponent,
    gradient_flow_trajectory,
    integrated_budget_defect,
    monotone_check,
    phi_series,
    radial_ode_solution,
    record_fields,
    steady_state_solve,
    total_energy,
)
from nematic_el.dynamics import (
    ForcingSpec,
    SimState,
    Stepper,
    System,
    constant_director,
    perturbed_constant,
    random_solenoidal,
    step_imex,
    taylor_green,
)
from nematic_el.spectral import Grid, SpectralField, sobolev_norm

from conftest import CASE1, CASE2


def zero(g):
    return SpectralField.zeros(g, "vector")


def run_records(system, state, dt, t_end):
    stepper = Stepper(system, dt)
    recs = [evaluate_record(state, system)]
    for _ in range(int(round(t_end / dt))):
        state, _ = stepper.step(state)
        recs.append(evaluate_record(state, system))
    return recs, state


@pytest.fixture
def g32():
    return Grid(2, 32)


class TestEnergy:
    def test_unit_constant(self, g32):
        rec = total_energy(SimState(zero(g32), constant_director(g32, [0, 1])), preset("SBM-EL"), CASE1)
        assert rec.e_total == pytest.approx(0.0, abs=1e-14)

    def test_zero_director(self, g32):
        rec = total_energy(SimState(zero(g32), zero(g32)), preset("SBM-EL"), CASE1)
        assert rec.e_total == pytest.approx(math.pi ** 2)
        assert rec.e_total == pytest.approx(9.8696, abs=1e-4)

    def test_shear_kinetic(self, g32):
        y = g32.coords()[1]
        u = SpectralField(g32, g32.forward(np.stack([np.cos(y), np.zeros(g32.shape)])))
        rec = total_energy(SimState(u, constant_director(g32, [1, 0])), preset("NSE-EL"), CASE1)
        assert rec.e_total == pytest.approx(math.pi ** 2, rel=1e-13)
        assert rec.kinetic == rec.e_total - rec.elastic - rec.potential

    def test_additivity(self, g32):
        st = SimState(random_solenoidal(g32, 1.0, -2.0, 1), perturbed_constant(g32, [1, 0], 0.5, seed=2))
        for name in PRESETS:
            rec = total_energy(st, preset(name), CASE1)
            assert rec.e_total - (rec.kinetic + rec.elastic + rec.potential) == 0.0


class TestDissipation:
    def test_equilibrium_zero(self, g32):
        rec = dissipation_components(SimState(zero(g32), constant_director(g32, [1, 0])), preset("NSE-EL"), CASE1)
        for name in ("diss_visc", "diss_rho", "diss_mu1", "diss_aqd", "diss_nq", "forcing_power"):
            assert abs(getattr(rec, name)) < 1e-20

    def test_case1_sign(self):
        assert -CASE1.case1_aqd_coefficient <= 0

    @pytest.mark.parametrize("seed", range(5))
    def test_nonnegative_and_coercive(self, g32, seed):
        st = SimState(random_solenoidal(g32, 1.0, -2.0, seed), perturbed_constant(g32, [0.6, 0.6], 0.5, seed=seed))
        for name in PRESETS:
            p = preset(name, alpha=0.7)
            for lc in (CASE1, CASE2):
                rec = dissipation_components(st, p, lc)
                assert rec.diss_visc >= 0 and rec.diss_rho >= 0 and rec.diss_mu1 >= 0
                assert budget_flux(rec, lc, lc.case) >= 0
            cc = coercivity_constants(p, g32)
            assert rec.diss_visc >= cc.c_a0q * sobolev_norm(st.u, p.theta - p.theta2) ** 2 * (1 - 1e-12)


class TestBudget:
    def test_stationary_zero(self, g32):
        st = SimState(zero(g32), constant_director(g32, [1, 0]))
        sysm = System(g32, preset("SBM-EL"), CASE1)
        r0 = evaluate_record(st, sysm)
        st1, _ = Stepper(sysm, 1e-2).step(st)
        assert energy_budget_residual(r0, evaluate_record(st1, sysm), 1e-2, 1, CASE1) < 1e-12

    def test_refinement(self):
        g = Grid(2, 32)
        sysm = System(g, preset("NSE-EL"), CASE1)
        st = SimState(random_solenoidal(g, 1.0, -3.0, 3), perturbed_constant(g, [1, 0], 0.3, seed=4))
        means, defects = [], []
        for dt in (4e-3, 2e-3):
            recs, _ = run_records(sysm, st, dt, 0.4)
            res = [energy_budget_residual(a, b, dt, 1, CASE1) for a, b in zip(recs[:-1], recs[1:])]
            means.append(np.mean(res))
            defects.append(abs(integrated_budget_defect(recs, CASE1)))
            assert all(b.e_total <= a.e_total for a, b in zip(recs[:-1], recs[1:]))
        assert means[1] <= 0.6 * means[0]
        assert defects[1] <= 0.6 * defects[0]

    def test_case2_one_sided(self):
        g = Grid(2, 32)
        sysm = System(g, preset("ML-EL-alpha"), CASE2)
        st = SimState(random_solenoidal(g, 1.0, -3.0, 5), perturbed_constant(g, [1, 0], 0.3, seed=6))
        recs, _ = run_records(sysm, st, 2e-3, 0.2)
        res = [energy_budget_residual(a, b, 2e-3, 2, CASE2) for a, b in zip(recs[:-1], recs[1:])]
        assert min(res) >= 0
        assert max(res) <= recs[0].e_total * 2e-3

    def test_hand_values(self):
        a = EnergyRecord(0.0, e_total=2.0, diss_visc=1.0)
        b = EnergyRecord(0.1, e_total=1.9, diss_visc=1.0)
        assert energy_budget_residual(a, b, 0.1, 1, CASE1) == pytest.approx(0.0)
        c = EnergyRecord(0.1, e_total=1.7, diss_visc=1.0)
        assert energy_budget_residual(a, c, 0.1, 1, CASE1) == pytest.approx(2.0)
        assert energy_budget_residual(a, c, 0.1, 2, CASE2) == 0.0


class TestEquilibrium:
    def test_unit_and_zero(self, g32):
        assert equilibrium_residual(constant_director(g32, [0.6, -0.8])) < 1e-14
        assert equilibrium_residual(zero(g32)) == 0

    def test_stretched_constant(self, g32):
        # f = ((1.1)^2 - 1) 1.1 e1 = 0.231 e1 on an area (2 pi)^2
        val = equilibrium_residual(constant_director(g32, [1.1, 0.0]))
        assert val == pytest.approx(0.231 * 2 * math.pi, rel=1e-12)


class TestSteady:
    def test_perturbed_unit(self, g32):
        d0 = perturbed_constant(g32, [1, 0], 1e-3, seed=1)
        res = steady_state_solve(d0)
        assert res.converged and res.residual < 1e-8 and res.iterations < 10_000

    def test_zero_fixed(self, g32):
        res = steady_state_solve(zero(g32))
        assert res.converged and res.iterations == 0
        assert np.max(np.abs(res.d.coeffs)) == 0
        res = steady_state_solve(zero(g32), scheme="imex1", max_iters=5)
        assert np.max(np.abs(res.d.coeffs)) == 0

    def test_stretched_converges_to_unit(self, g32):
        res = steady_state_solve(constant_director(g32, [1.5, 0.0]), tol=1e-10)
        d = res.d.to_physical()
        assert res.converged
        assert np.max(np.abs(d[0] - 1)) < 1e-10 and np.max(np.abs(d[1])) < 1e-15

    @pytest.mark.parametrize("r0", [0.3, 1.5, -0.8])
    def test_radial_ode(self, r0):
        g = Grid(2, 8)
        traj = gradient_flow_trajectory(constant_director(g, [r0, 0.0]), 0.025, 120)
        ts = 0.025 * np.arange(121)
        r = np.array([s.to_physical()[0].mean() for s in traj])
        assert np.max(np.abs(r - radial_ode_solution(r0, ts))) < 1e-6

    def test_fixed_point_of_dynamics(self, g32):
        res = steady_state_solve(perturbed_constant(g32, [0.3, 1], 0.1, seed=2), tol=1e-10)
        st = SimState(zero(g32), res.d)
        new, _ = step_imex(st, 1e-2, preset("NSE-EL"), CASE1)
        change = sobolev_norm(new.d - res.d, 0, "director")
        assert change <= 1e-2 * 1e-10 / abs(CASE1.lambda1) * 1.01

    def test_non_convergence_flagged(self, g32):
        res = steady_state_solve(perturbed_constant(g32, [1, 0], 0.5, seed=3), max_iters=3)
        assert not res.converged and res.iterations == 3

    def test_errors(self, g32):
        with pytest.raises(ValueError):
            steady_state_solve(zero(g32), tol=0)
        with pytest.raises(ValueError):
            steady_state_solve(zero(g32), scheme="rk2")


class TestFitting:
    def test_synthetic_power_law(self):
        t = np.linspace(0, 100, 400)
        chi, c, rms, n = fit_decay_exponent(t, 3.0 * (1 + t) ** -0.7)
        assert chi == pytest.approx(0.7, abs=0.01)
        assert c == pytest.approx(3.0, rel=1e-8) and rms < 1e-12 and n == 200

    def test_constant(self):
        chi, *_ = fit_decay_exponent(np.linspace(0, 10, 50), np.full(50, 2.5))
        assert chi == pytest.approx(0.0, abs=1e-12)

    def test_floor(self):
        t = np.linspace(0, 10, 20)
        with pytest.raises(ValueError):
            fit_decay_exponent(t, np.zeros(20), floor=1e-12)

    def test_monotone(self):
        t = np.arange(5.0)
        assert monotone_check(t, [5, 4, 4, 3, 1], 0.0)[0]
        ok, worst = monotone_check(t, [5, 4, 4.5, 3, 1], 0.1)
        assert not ok and worst == pytest.approx(0.5)

    def test_phi_decaying_forcing(self, g32):
        sysm = System(g32, preset("SBM-EL"), CASE1, ForcingSpec("decaying", taylor_green(g32, 0.1), 0.5))
        st = SimState(random_solenoidal(g32, 0.5, -3.0, 7), perturbed_constant(g32, [1, 0], 0.2, seed=8))
        recs, _ = run_records(sysm, st, 1e-2, 1.0)
        phi = phi_series(recs, sysm)
        assert np.all(phi >= np.array([r.e_total for r in recs]))
        assert monotone_check([r.t for r in recs], phi, phi[0])[0]

    def test_phi_steady_rejected(self, g32):
        sysm = System(g32, preset("SBM-EL"), CASE1, ForcingSpec("steady", taylor_green(g32)))
        with pytest.raises(ValueError):
            phi_series([EnergyRecord(0.0)], sysm)


class TestDissipativeBound:
    def test_synthetic(self):
        t = np.linspace(0, 100, 200)
        assert dissipative_bound_check(t, 5 * np.exp(-t) + 1 + 0.1 * np.sin(t))
        assert not dissipative_bound_check(t, 1 + t)
        assert not dissipative_bound_check(t, np.exp(0.05 * t))
        assert not dissipative_bound_check(t[:4], np.ones(4))

    def test_unforced_bounded(self, g32):
        sysm = System(g32, preset("SBM-EL"), CASE1)
        st = SimState(random_solenoidal(g32, 1.0, -3.0, 9), perturbed_constant(g32, [1, 0], 0.3, seed=10))
        stepper = Stepper(sysm, 1e-2)
        t, vals = [], []
        for n in range(300):
            if n % 10 == 0:
                t.append(st.t)
                vals.append(absorbing_quantity(st, 1.0))
            st, _ = stepper.step(st)
        assert dissipative_bound_check(t, vals)

    @pytest.mark.slow
    def test_steady_small_forcing_long_run(self):
        g = Grid(2, 16)
        sysm = System(g, preset("SBM-EL"), CASE1, ForcingSpec("steady", taylor_green(g, 0.05)))
        st = SimState(random_solenoidal(g, 1.0, -3.0, 11), perturbed_constant(g, [1, 0], 0.3, seed=12))
        stepper = Stepper(sysm, 0.05)
        t, vals = [], []
        for n in range(4001):
            if n % 40 == 0:
                t.append(st.t)
                vals.append(absorbing_quantity(st, 1.0))
            if n < 4000:
                st, _ = stepper.step(st)
        rep = dissipative_bound_detail(t, vals)
        assert t[-1] == pytest.approx(200.0)
        assert rep.bounded and rep.entrance_time < 150


class TestRecords:
    def test_columns(self):
        assert tuple(record_fields()) == BASE_COLUMNS
        assert len(EnergyRecord(0.0).row()) == 15
