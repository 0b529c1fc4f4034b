"""One test per acceptance criterion, each at its stated tolerance.

Every test records a PASS/FAIL line through the ``acceptance`` fixture; the
lines are repeated in the terminal summary.
"""

import math

import numpy as np
import pytest

from berslab import bers, cocycles, diagnostics, geometry, projective, scattering
from berslab.diffeo import (
    LogCoord,
    chart,
    chart_inverse,
    jacobian,
    p_to_infty_expansion_residual,
    theta_p_cocycle_residual,
)
from berslab.families import random_test_functions
from berslab.numerics import Decay, RealFunction, sup_norm

CHART_EXPONENTS = (1.0, 1.5, 2.0, 3.0, 10.0, math.inf)
OUTER_POINTS = (2j, 1 + 1j, -1 + 0.5j, 5j, 50j)


@pytest.fixture(scope="module")
def pairs(diffeos):
    return [(diffeos[i], diffeos[(i + 1) % len(diffeos)]) for i in range(len(diffeos))]


@pytest.fixture(scope="module")
def triples(diffeos):
    return [diffeos[0:3], diffeos[3:6]]


@pytest.fixture(scope="module")
def bers_q(diffeos):
    return bers.bers_map(diffeos[0])


@pytest.fixture(scope="module")
def scatter_data(bers_q):
    return scattering.scattering_coefficients(bers_q)


def test_criterion_01_chart_round_trips(diffeos, acceptance):
    assert len(diffeos) == 6
    worst = max(sup_norm(chart_inverse(chart(phi, p), p).positions - phi.positions)
                for phi in diffeos for p in CHART_EXPONENTS)
    ok = worst < 1e-10
    acceptance(1, ok, f"chart round trip sup error {worst:.2e} < 1e-10")
    assert ok


def test_criterion_02_isometry(diffeos, grid, acceptance):
    delta = RealFunction(grid, np.exp(-(grid.x - 0.5) ** 2) * np.sin(grid.x), Decay.VANISHES)
    worst = max(geometry.isometry_check(phi, delta, p, eps=1e-5).relative_error
                for phi in diffeos[:3] for p in (1.5, 2.0, 3.0, math.inf))
    ok = worst < 1e-4
    acceptance(2, ok, f"isometry relative error {worst:.2e} < 1e-4")
    assert ok


def test_criterion_03_cocycles(pairs, triples, bers_q, diffeos, acceptance):
    res = {
        "theta_p": max(theta_p_cocycle_residual(a, b, p) for a, b in pairs for p in (1.5, 2.0, 4.0)),
        "log": max(theta_p_cocycle_residual(a, b, math.inf) for a, b in pairs),
        "schwarzian": max(projective.schwarzian_cocycle_residual(a, b) for a, b in pairs),
        "projective": projective.projective_action_residual(bers_q, diffeos[1], diffeos[2]),
        "bott": max(cocycles.bott_coboundary_residual(*t) for t in triples),
        "bott_p": max(cocycles.bott_thurston_coboundary_residual(*t, p) for t in triples for p in (2.0, 3.0)),
    }
    worst = max(res.values())
    ok = worst < 1e-5
    acceptance(3, ok, "cocycle residuals " + ", ".join(f"{k}={v:.1e}" for k, v in res.items()) + " < 1e-5")
    assert ok


def test_criterion_04_geodesic_dynamics(diffeos, acceptance):
    path = geometry.GeodesicPath(2.0, diffeos[0], diffeos[1])
    strain = geometry.strain_residual(path, 0.5)
    coarse, fine = (geometry.strain_residual(path, 0.5, dt, richardson=False) for dt in (0.02, 0.01))
    ratio = coarse / fine
    riccati = max(geometry.riccati_closed_form_gap(geometry.GeodesicPath(p, diffeos[0], diffeos[1]), t)
                  for p in (2.0, 4.0, math.inf) for t in (0.25, 0.5, 1.0))
    ok = strain < 5e-3 and 3.5 <= ratio <= 4.5 and riccati < 1e-4
    acceptance(4, ok, f"strain residual {strain:.1e} < 5e-3, dt ratio {ratio:.3f} in [3.5,4.5], "
                      f"Riccati gap {riccati:.1e} < 1e-4")
    assert ok


def test_criterion_05_asymptotic_orders(diffeos, acceptance):
    phi, psi = diffeos[0], diffeos[1]
    chart_ratio = p_to_infty_expansion_residual(phi, 20.0) / p_to_infty_expansion_residual(phi, 10.0)
    sp_ratio = projective.sp_asymptotic_residual(phi, 40.0) / projective.sp_asymptotic_residual(phi, 20.0)
    cross = [projective.lp_schwarzian_composition_residual(phi, psi, p).cross_term for p in (20.0, 40.0)]
    cross_ratio = cross[1] / cross[0]
    ok = (abs(chart_ratio / 0.125 - 1) <= 0.25 and abs(sp_ratio / 0.125 - 1) <= 0.25
          and abs(cross_ratio / 0.5 - 1) <= 0.25)
    acceptance(5, ok, f"doubling-p ratios: chart {chart_ratio:.4f}, S_p {sp_ratio:.4f} (target 0.125), "
                      f"cross term {cross_ratio:.4f} (target 0.5), all within 25%")
    assert ok


def test_criterion_06_fisher_identities(densities, grid, acceptance):
    mean = max(projective.mean_schwarzian_residual(mu) for mu in densities)
    beta = max(diagnostics.integrated_beta_residual(mu) for mu in densities)
    gauss = RealFunction(grid, np.exp(-0.5 * grid.x ** 2) / np.sqrt(2 * np.pi), Decay.VANISHES)
    bound = projective.bhattacharyya_bound(gauss).bound
    ok = mean < 1e-8 and beta < 1e-8 and abs(bound - 1) < 1e-4
    acceptance(6, ok, f"mean Schwarzian {mean:.1e}, integrated beta {beta:.1e} < 1e-8; "
                      f"Gaussian bound {bound:.8f} = 1 +- 1e-4")
    assert ok


def test_criterion_07_bers_pipeline(diffeos, grid, acceptance):
    trip = miura = energy = agree = 0.0
    for phi in diffeos:
        q = bers.bers_map(phi)
        back = bers.reconstruct_diffeo(q)
        trip = max(trip, sup_norm(back.h.values - phi.h.values), sup_norm(bers.bers_map(back).values - q.values))
        miura = max(miura, bers.miura_residual(phi), bers.miura_first_order_residual(phi))
        energy = max(energy, bers.energy_identity_residual(phi))
        agree = max(agree, sup_norm(bers.distinguished_solution(q).values
                                    - bers.distinguished_solution_rk4(q).values))
    u = LogCoord(RealFunction(grid, diffeos[0].log_jac, Decay.VANISHES))
    right = max(bers.right_inverse_defect(u, v) for v in bers.default_right_inverse_inputs(grid))
    ok = trip < 1e-6 and miura < 1e-6 and energy < 1e-8 and right < 1e-5 and agree < 1e-8
    acceptance(7, ok, f"round trip {trip:.1e} < 1e-6, Miura {miura:.1e} < 1e-6, energy {energy:.1e} < 1e-8, "
                      f"right inverse {right:.1e} < 1e-5, Picard/RK4 {agree:.1e} < 1e-8")
    assert ok


def test_criterion_08_scattering(diffeos, grid, bers_q, scatter_data, acceptance):
    flux = scatter_data.flux_residual()
    sym = max(scatter_data.symmetry_residual(), scatter_data.reflection_symmetry_residual())
    r_max = scatter_data.max_abs_R()
    lowest = min(scattering.no_bound_state_check(bers.bers_map(phi)) for phi in diffeos)
    well = RealFunction(grid, 2.0 * np.exp(-grid.x ** 2), Decay.VANISHES)
    well_low = scattering.no_bound_state_check(well)
    outer = max(abs(scattering.outer_function(scatter_data, z) - scattering.a_direct(bers_q, z))
                for z in OUTER_POINTS)
    ok = flux < 1e-6 and sym < 1e-8 and r_max < 1 and lowest >= -1e-6 and well_low < 0 and outer < 1e-3
    acceptance(8, ok, f"flux {flux:.1e}, symmetry {sym:.1e}, max|R| {r_max:.3f}, lowest Bers eigenvalue "
                      f"{lowest:.2e} >= -1e-6, well eigenvalue {well_low:.3f} < 0, outer gap {outer:.1e} < 1e-3")
    assert ok


def test_criterion_09_trace_identities(bers_q, scatter_data, densities, acceptance):
    first = scattering.first_trace(bers_q, scatter_data).relative
    second = scattering.second_trace(bers_q, scatter_data).relative
    s = projective.score(densities[0]).s
    algebraic = scattering.score_square_identity_residual(bers_q, s)
    exponent = scattering.log_a_expansion_check(bers_q).exponent
    ok = first < 1e-3 and second < 1e-2 and algebraic < 1e-8 and exponent >= 3.7
    acceptance(9, ok, f"first trace {first:.1e} < 1e-3, second {second:.1e} < 1e-2, "
                      f"score identity {algebraic:.1e} < 1e-8, log a exponent {exponent:.2f} >= 3.7")
    assert ok


def test_criterion_10_structural_properties(diffeos, grid, acceptance):
    tests = random_test_functions(grid, 100, 0)
    sign_ok = crit_ok = True
    margin = math.inf
    gap_ok = True
    for phi in diffeos:
        mu = jacobian(phi)
        rep = diagnostics.sign_report(mu)
        sign_ok &= rep.pos_measure > 0 and rep.neg_measure > 0 and rep.zero_count >= 2 \
            and rep.omega_minus_in_pi_minus
        crit = diagnostics.critical_point_sign_check(mu)
        crit_ok &= bool(crit.points) and crit.all_consistent
        q = bers.bers_map(phi)
        margin = min(margin, min(diagnostics.hardy_margin(q, f) for f in tests))
        for radius in (2.0, 5.0, 10.0):
            lam, bound = diagnostics.window_spectral_gap(phi, radius)
            gap_ok &= lam >= bound
    table = diagnostics.criticality_demo(diffeos[0])
    scaling = table.energy_scaling_ok(2.0) and table.norm_scaling_ok(2.0)
    ok = sign_ok and crit_ok and margin >= -1e-8 and gap_ok and scaling
    acceptance(10, ok, f"beta signs/zeros/inclusion {sign_ok}, critical-point signs {crit_ok}, "
                       f"min Hardy margin {margin:.2e} >= -1e-8, window gaps above bound {gap_ok}, "
                       f"criticality scalings within factor 2 {scaling}")
    assert ok


def test_criterion_11_fisher_noncontrol(acceptance):
    rows = diagnostics.fisher_noncontrol_experiment(1.0, (5.0, 10.0, 20.0, 40.0))
    pinned = max(abs(r.fisher - 1.0) for r in rows)
    growth = rows[-1].beta_plus_integral / rows[0].beta_plus_integral
    linear = diagnostics.linear_zero_growth(rows)
    ok = pinned <= 1e-8 and growth > 4 and linear
    counts = [r.plateau_zero_count for r in rows]
    acceptance(11, ok, f"|I - 1| {pinned:.1e} <= 1e-8, beta+ growth x{growth:.1f} > 4, "
                       f"plateau zero counts {counts} grow linearly {linear}")
    assert ok
