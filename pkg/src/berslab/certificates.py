"""Named numerical certificates grouped by CLI subcommand.

Each runner takes a :class:`Context` and returns its certificates together
with the tables the CLI writes as CSV.  A certificate passes exactly when its
residual is at most its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import bers, cocycles, diagnostics, geometry, projective, scattering
from .diffeo import (
    Diffeo,
    LogCoord,
    chart,
    chart_inverse,
    jacobian,
    p_to_infty_expansion_residual,
    theta_p_cocycle_residual,
)
from .families import FamilySpec, bump_test_function, corpus, family_diffeo, random_test_functions
from .numerics import Decay, Grid, RealFunction, sup_norm

CHART_EXPONENTS = (1.0, 1.5, 2.0, 3.0, 10.0, math.inf)
WINDOW_RADII = (2.0, 5.0, 10.0)
OUTER_POINTS = (2j, 1 + 1j, -1 + 0.5j, 5j, 50j)
NONCONTROL_LAMBDAS = (5.0, 10.0, 20.0, 40.0)

# default tolerance and result tag per check
CHECKS: dict[str, tuple[float, str]] = {
    "chart_round_trip": (1e-10, "isometric linearization"),
    "geodesic_collinearity": (1e-10, "isometric linearization"),
    "isometry": (1e-4, "isometric linearization"),
    "path_length": (1e-6, "isometric linearization"),
    "strain_residual": (5e-3, "flat connection strain equation"),
    "strain_convergence": (0.5, "flat connection strain equation"),
    "riccati_closed_form": (1e-4, "density Riccati equation"),
    "chart_remainder_order": (0.25, "p to infinity asymptotics"),
    "schwarzian_cocycle": (1e-5, "Schwarzian cocycle"),
    "projective_action": (1e-5, "affine action on potentials"),
    "lp_schwarzian_remainder_order": (0.25, "Lp-Schwarzian asymptotics"),
    "lp_schwarzian_cross_term_order": (0.25, "Lp-Schwarzian composition law"),
    "mean_schwarzian": (1e-8, "integrated Schwarzian and Fisher information"),
    "integrated_beta": (1e-8, "integrated Schwarzian and mean negativity of beta"),
    "bhattacharyya_gaussian": (1e-4, "Bhattacharyya bound"),
    "theta_cocycle": (1e-5, "multiplicative p-root cocycle"),
    "log_cocycle": (1e-5, "additive log cocycle"),
    "gf_jacobi": (1e-8, "Gelfand-Fuchs cocycle"),
    "bott_coboundary": (1e-5, "Bott cocycle integrability"),
    "bott_thurston_coboundary": (1e-5, "Bott-Thurston rigidity"),
    "bott_infinitesimal": (1e-4, "Bott cocycle integrability"),
    "bers_round_trip": (1e-6, "inverse Bers map"),
    "picard_vs_rk4": (1e-8, "inverse Bers map"),
    "miura": (1e-6, "Miura factorization"),
    "energy_identity": (1e-8, "Bers energy identity"),
    "right_inverse": (1e-5, "tame right inverse"),
    "membership_classifier": (0.0, "inverse Bers map"),
    "flux": (1e-6, "scattering flux identity"),
    "symmetry": (1e-8, "scattering symmetry"),
    "reflection_bound": (1.0, "scattering flux identity"),
    "no_bound_state": (1e-6, "no bound states"),
    "bound_state_well": (0.0, "no bound states"),
    "outer_function": (1e-3, "outer function representation"),
    "zero_energy_membership": (1e-6, "zero-energy resonance"),
    "first_trace": (1e-3, "first trace identity"),
    "second_trace": (1e-2, "second trace identity"),
    "score_trace": (1e-3, "first trace identity"),
    "score_square_identity": (1e-8, "score form of the second trace identity"),
    "log_a_exponent": (0.0, "large-z expansion of log a"),
    "rapid_decay": (0.0, "rapid decay of the reflection data"),
    "odd_moment": (1e-8, "vanishing odd moment"),
    "beta_sign_structure": (0.0, "mixed curvature is forced"),
    "critical_point_sign": (0.0, "sign of beta at critical points"),
    "critical_point_formula": (1e-8, "sign of beta at critical points"),
    "no_global_logconcavity": (0.0, "no global log-concavity"),
    "score_zero_mean": (1e-9, "decay and zero-mean identities"),
    "hardy_margin": (1e-8, "critical Hardy weight"),
    "ground_state_identity": (1e-6, "critical Hardy weight"),
    "window_gap_bound": (1e-8, "Hardy-Poincare inequality on a window"),
    "criticality_energy": (1.0, "critical Hardy weight"),
    "criticality_norm": (0.1, "critical Hardy weight"),
    "fisher_pinned": (1e-8, "unbounded positive projective curvature"),
    "beta_plus_growth": (0.0, "unbounded positive projective curvature"),
    "beta_plus_monotone": (0.0, "unbounded positive projective curvature"),
    "zero_count_growth": (0.0, "unbounded positive projective curvature"),
}


@dataclass(frozen=True)
class Certificate:
    check_name: str
    lhs: float | None
    rhs: float | None
    residual: float
    tolerance: float
    anchor: str

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_json(self) -> dict:
        def num(v):
            return None if v is None or not math.isfinite(v) else float(v)
        return {"check_name": self.check_name, "lhs": num(self.lhs), "rhs": num(self.rhs),
                "residual": num(self.residual), "tolerance": float(self.tolerance),
                "pass": self.passed, "anchor": self.anchor}


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: np.ndarray


@dataclass
class Context:
    grid: Grid
    kgrid: scattering.KGrid
    family: FamilySpec
    tolerances: dict[str, float] = field(default_factory=dict)
    threads: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        self._cache: dict = {}

    def tol(self, check: str) -> float:
        return self.tolerances.get(check, CHECKS[check][0])

    def cert(self, check: str, residual: float, lhs=None, rhs=None, suffix: str = "") -> Certificate:
        name = check + (f"[{suffix}]" if suffix else "")
        return Certificate(name, lhs, rhs, float(residual), self.tol(check), CHECKS[check][1])

    def cached(self, key: str, make: Callable):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    @property
    def phi(self) -> Diffeo:
        return self.cached("phi", lambda: family_diffeo(self.family, self.grid))

    @property
    def corpus(self) -> list[Diffeo]:
        return self.cached("corpus", lambda: corpus(self.grid))

    @property
    def q(self) -> RealFunction:
        return self.cached("q", lambda: bers.bers_map(self.phi))

    @property
    def scattering_data(self) -> scattering.ScatteringData:
        return self.cached("sd", lambda: scattering.scattering_coefficients(self.q, self.kgrid, self.threads))


Result = tuple[list[Certificate], dict[str, Table]]


def _p_label(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def _partner(ctx: Context) -> Diffeo:
    """Corpus element paired with the configured family."""
    return ctx.corpus[1]


def run_geodesic(ctx: Context) -> Result:
    certs = []
    for i, phi in enumerate(ctx.corpus + [ctx.phi]):
        worst = max(sup_norm(chart_inverse(chart(phi, p), p).positions - phi.positions)
                    for p in CHART_EXPONENTS)
        certs.append(ctx.cert("chart_round_trip", worst, suffix=str(i) if i < len(ctx.corpus) else "family"))
    grid = ctx.grid
    delta = RealFunction(grid, np.exp(-(grid.x - 0.5) ** 2) * np.sin(grid.x), Decay.VANISHES)
    for p in (2.0, math.inf):
        iso = geometry.isometry_check(ctx.phi, delta, p)
        certs.append(ctx.cert("isometry", iso.relative_error, iso.chart_norm, iso.eulerian_norm, _p_label(p)))
    path = geometry.GeodesicPath(2.0, _partner(ctx), ctx.phi)
    certs.append(ctx.cert("geodesic_collinearity", geometry.chart_collinearity_residual(path, 0.5)))
    length = geometry.path_length(path)
    dist = geometry.distance_p(path.phi0, path.phi1, 2.0)
    certs.append(ctx.cert("path_length", abs(length - dist) / dist, length, dist))
    certs.append(ctx.cert("strain_residual", geometry.strain_residual(path, 0.5)))
    coarse, fine = (geometry.strain_residual(path, 0.5, dt, richardson=False) for dt in (0.02, 0.01))
    ratio = coarse / fine
    certs.append(ctx.cert("strain_convergence", abs(ratio - 4.0), ratio, 4.0))
    for p in (2.0, 4.0, math.inf):
        rpath = geometry.GeodesicPath(p, _partner(ctx), ctx.phi)
        certs.append(ctx.cert("riccati_closed_form", geometry.riccati_closed_form_gap(rpath, 0.5),
                              suffix=_p_label(p)))
    coarse, fine = (p_to_infty_expansion_residual(ctx.phi, p) for p in (10.0, 20.0))
    certs.append(ctx.cert("chart_remainder_order", abs(fine / coarse / 0.125 - 1), fine / coarse, 0.125))

    times = (0.0, 0.5, 1.0)
    cols = [grid.x] + [geometry.geodesic_at(path, t).jac for t in times]
    cols.append(geometry.eulerian_velocity(path, 0.5).values)
    header = ("x", "jac_t0", "jac_t0.5", "jac_t1", "eulerian_velocity_t0.5")
    return certs, {"geodesic": Table(header, np.column_stack(cols))}


def run_schwarzian(ctx: Context) -> Result:
    certs = []
    phi, psi = ctx.phi, _partner(ctx)
    certs.append(ctx.cert("schwarzian_cocycle", projective.schwarzian_cocycle_residual(phi, psi)))
    certs.append(ctx.cert("projective_action", projective.projective_action_residual(ctx.q, psi, ctx.corpus[2])))
    coarse, fine = (projective.sp_asymptotic_residual(phi, p) for p in (20.0, 40.0))
    certs.append(ctx.cert("lp_schwarzian_remainder_order", abs(fine / coarse / 0.125 - 1), fine / coarse, 0.125))
    coarse, fine = (projective.lp_schwarzian_composition_residual(phi, psi, p).cross_term for p in (20.0, 40.0))
    certs.append(ctx.cert("lp_schwarzian_cross_term_order", abs(fine / coarse / 0.5 - 1), fine / coarse, 0.5))
    for i, mu in enumerate(jacobian(d) for d in ctx.corpus):
        certs.append(ctx.cert("mean_schwarzian", projective.mean_schwarzian_residual(mu), suffix=str(i)))
        certs.append(ctx.cert("integrated_beta", diagnostics.integrated_beta_residual(mu), suffix=str(i)))
    x = ctx.grid.x
    gauss = RealFunction(ctx.grid, np.exp(-0.5 * x ** 2) / np.sqrt(2 * np.pi), Decay.VANISHES)
    bound = projective.bhattacharyya_bound(gauss).bound
    certs.append(ctx.cert("bhattacharyya_gaussian", abs(bound - 1.0), bound, 1.0))

    mu = jacobian(phi)
    cols = [x, projective.schwarzian(phi).values, ctx.q.values,
            projective.lp_schwarzian(phi, 2.0).values, projective.score_curvature(mu).values]
    header = ("x", "schwarzian", "bers_potential", "lp_schwarzian_p2", "score_curvature")
    return certs, {"schwarzian": Table(header, np.column_stack(cols))}


def run_cocycle(ctx: Context) -> Result:
    certs = []
    diffeos = ctx.corpus
    pairs = [(diffeos[i], diffeos[(i + 1) % len(diffeos)]) for i in range(len(diffeos))]
    rows = []
    for i, (phi, psi) in enumerate(pairs):
        for p in (2.0, 4.0):
            certs.append(ctx.cert("theta_cocycle", theta_p_cocycle_residual(phi, psi, p), suffix=f"{i},p={p:g}"))
        certs.append(ctx.cert("log_cocycle", theta_p_cocycle_residual(phi, psi, math.inf), suffix=str(i)))
        rows.append((i, cocycles.bott_cocycle(phi, psi), cocycles.bott_thurston_p(phi, psi, 2.0)))
    for i in range(2):
        triple = diffeos[3 * i:3 * i + 3]
        certs.append(ctx.cert("bott_coboundary", cocycles.bott_coboundary_residual(*triple), suffix=str(i)))
        certs.append(ctx.cert("bott_thurston_coboundary",
                              cocycles.bott_thurston_coboundary_residual(*triple, 2.0), suffix=str(i)))
    x = ctx.grid.x
    u, v, w = (RealFunction(ctx.grid, f, Decay.VANISHES) for f in
               (np.exp(-x ** 2), x * np.exp(-x ** 2), np.exp(-(x - 1) ** 2 / 2)))
    certs.append(ctx.cert("gf_jacobi", cocycles.gf_jacobi_residual(u, v, w)))
    ratio = cocycles.bott_infinitesimal_ratio(u, v, 1e-3, 1e-3)
    target = 0.5 * cocycles.gelfand_fuchs(u, v)
    certs.append(ctx.cert("bott_infinitesimal", abs(ratio - target) / abs(target), ratio, target))
    header = ("pair", "bott", "bott_thurston_p2")
    return certs, {"cocycle": Table(header, np.array(rows, dtype=float))}


def run_bers(ctx: Context) -> Result:
    certs = []
    for i, phi in enumerate(ctx.corpus + [ctx.phi]):
        tag = str(i) if i < len(ctx.corpus) else "family"
        q = bers.bers_map(phi)
        back = bers.reconstruct_diffeo(q)
        trip = max(sup_norm(back.h.values - phi.h.values), sup_norm(bers.bers_map(back).values - q.values))
        certs.append(ctx.cert("bers_round_trip", trip, suffix=tag))
        picard = bers.distinguished_solution(q).values
        rk4 = bers.distinguished_solution_rk4(q).values
        certs.append(ctx.cert("picard_vs_rk4", sup_norm(picard - rk4), suffix=tag))
        certs.append(ctx.cert("miura", max(bers.miura_residual(phi), bers.miura_first_order_residual(phi)),
                              suffix=tag))
        certs.append(ctx.cert("energy_identity", bers.energy_identity_residual(phi), suffix=tag))
    u = LogCoord(RealFunction(ctx.grid, ctx.phi.log_jac, Decay.VANISHES))
    defect = max(bers.right_inverse_defect(u, v) for v in bers.default_right_inverse_inputs(ctx.grid))
    certs.append(ctx.cert("right_inverse", defect))
    wrong = sum(bers.is_bers_potential(q) != label
                for _, q, label in bers.membership_corpus(ctx.grid, ctx.corpus[:5]))
    certs.append(ctx.cert("membership_classifier", wrong))

    y = bers.distinguished_solution(ctx.q).values
    witness = bers.riccati_miura_witness(ctx.q)
    cols = [ctx.grid.x, ctx.q.values, y, y ** -2, witness.w.values]
    header = ("x", "potential", "distinguished_solution", "reconstructed_jac", "miura_variable")
    return certs, {"bers": Table(header, np.column_stack(cols))}


def run_scatter(ctx: Context) -> Result:
    sd = ctx.scattering_data
    certs = [ctx.cert("flux", sd.flux_residual()),
             ctx.cert("symmetry", max(sd.symmetry_residual(), sd.reflection_symmetry_residual())),
             ctx.cert("reflection_bound", sd.max_abs_R(), sd.max_abs_R(), 1.0)]
    for i, phi in enumerate(ctx.corpus):
        low = scattering.no_bound_state_check(bers.bers_map(phi))
        certs.append(ctx.cert("no_bound_state", max(0.0, -low), low, 0.0, str(i)))
    well = RealFunction(ctx.grid, 2.0 * np.exp(-ctx.grid.x ** 2), Decay.VANISHES)
    low = scattering.no_bound_state_check(well)
    certs.append(ctx.cert("bound_state_well", max(0.0, low), low, 0.0))
    for z in OUTER_POINTS:
        outer = scattering.outer_function(sd, z)
        direct = complex(scattering.a_direct(ctx.q, z))
        certs.append(ctx.cert("outer_function", abs(outer - direct), abs(outer), abs(direct), f"{z}"))
    report = scattering.zero_energy_membership(ctx.q)
    gap = report.cross_check if report.member and report.cross_check is not None else math.inf
    certs.append(ctx.cert("zero_energy_membership", gap))

    cols = [sd.k, sd.a.real, sd.a.imag, sd.b.real, sd.b.imag, np.abs(sd.R)]
    header = ("k", "a_re", "a_im", "b_re", "b_im", "abs_R")
    return certs, {"scatter": Table(header, np.column_stack(cols))}


def run_trace(ctx: Context) -> Result:
    sd = ctx.scattering_data
    first = scattering.first_trace(ctx.q, sd)
    second = scattering.second_trace(ctx.q, sd)
    s = projective.score(jacobian(ctx.phi)).s
    score_form = scattering.score_fisher_trace(s, sd)
    expansion = scattering.log_a_expansion_check(ctx.q)
    decay = scattering.rapid_decay_check(sd)
    certs = [ctx.cert("first_trace", first.relative, first.lhs, first.rhs),
             ctx.cert("second_trace", second.relative, second.lhs, second.rhs),
             ctx.cert("score_trace", score_form.relative, score_form.lhs, score_form.rhs),
             ctx.cert("score_square_identity", scattering.score_square_identity_residual(ctx.q, s)),
             ctx.cert("log_a_exponent", max(0.0, 3.7 - expansion.exponent), expansion.exponent, 3.7),
             ctx.cert("rapid_decay", max(0.0, 4.0 - decay), decay, 4.0),
             ctx.cert("odd_moment", abs(scattering.odd_moment(sd)))]
    header = ("kappa", "log_a_remainder")
    return certs, {"trace": Table(header, np.column_stack([expansion.kappa, expansion.remainder]))}


def trace_summary(ctx: Context) -> dict:
    """Both trace identities with their residuals, tolerances and verdict."""
    sd = ctx.scattering_data
    first = scattering.first_trace(ctx.q, sd)
    second = scattering.second_trace(ctx.q, sd)
    residuals = {"first": first.relative, "second": second.relative}
    tolerances = {"first": ctx.tol("first_trace"), "second": ctx.tol("second_trace")}
    return {"first_lhs": first.lhs, "first_rhs": first.rhs,
            "second_lhs": second.lhs, "second_rhs": second.rhs,
            "residuals": residuals, "tolerances": tolerances,
            "pass": all(residuals[k] <= tolerances[k] for k in residuals)}


def diagnose_reports(ctx: Context) -> dict:
    """Sign reports per corpus density and the Hardy report of the family."""
    signs = [asdict(diagnostics.sign_report(jacobian(phi))) for phi in ctx.corpus]
    hardy = diagnostics.hardy_report(ctx.phi, bump_test_function(ctx.grid, 0.3, 1.5), 2.0)
    return {"sign_reports": signs, "hardy_report": asdict(hardy)}


def run_diagnose(ctx: Context) -> Result:
    certs = []
    rng_functions = random_test_functions(ctx.grid, 100, ctx.seed)
    for i, phi in enumerate(ctx.corpus):
        mu = jacobian(phi)
        rep = diagnostics.sign_report(mu)
        failures = (rep.pos_measure <= 0) + (rep.neg_measure <= 0) + (rep.zero_count < 2) \
            + (not rep.omega_minus_in_pi_minus)
        certs.append(ctx.cert("beta_sign_structure", failures, suffix=str(i)))
        crit = diagnostics.critical_point_sign_check(mu)
        bad = sum(not p.consistent for p in crit.points) + (len(crit.points) == 0)
        certs.append(ctx.cert("critical_point_sign", bad, suffix=str(i)))
        certs.append(ctx.cert("critical_point_formula", crit.max_formula_gap, suffix=str(i)))
        certs.append(ctx.cert("no_global_logconcavity", int(not diagnostics.no_global_logconcavity_check(mu)),
                              suffix=str(i)))
        both, mean = diagnostics.score_balance(mu)
        certs.append(ctx.cert("score_zero_mean", mean if both else math.inf, suffix=str(i)))
        q = bers.bers_map(phi)
        worst = min(diagnostics.hardy_margin(q, f) for f in rng_functions)
        certs.append(ctx.cert("hardy_margin", max(0.0, -worst), worst, 0.0, str(i)))
        gs = max(diagnostics.ground_state_identity_residual(phi, f) for f in rng_functions)
        certs.append(ctx.cert("ground_state_identity", gs, suffix=str(i)))
        for radius in WINDOW_RADII:
            lam, bound = diagnostics.window_spectral_gap(phi, radius)
            certs.append(ctx.cert("window_gap_bound", max(0.0, bound - lam), lam, bound, f"{i},R={radius:g}"))
    table = diagnostics.criticality_demo(ctx.phi)
    ref = table.rows[0].energy_times_radius
    spread = max(max(r.energy_times_radius / ref, ref / r.energy_times_radius) for r in table.rows) - 1
    certs.append(ctx.cert("criticality_energy", spread))
    certs.append(ctx.cert("criticality_norm", table.norm_limit_gap(), table.rows[-1].norm_ratio, 1.0))

    mu = jacobian(ctx.phi)
    beta = bers.beta_potential(mu).values
    s = projective.score(mu).s.values
    rows = np.array([(r.radius, r.energy, r.energy_times_radius, r.norm_sq, r.norm_ratio)
                     for r in table.rows])
    return certs, {
        "diagnose": Table(("x", "density", "score", "beta"), np.column_stack([ctx.grid.x, mu.g, s, beta])),
        "criticality": Table(("radius", "energy", "energy_times_radius", "norm_sq", "norm_ratio"), rows),
    }


def noncontrol_rows(ctx: Context):
    return ctx.cached("noncontrol", lambda: diagnostics.fisher_noncontrol_experiment(
        1.0, NONCONTROL_LAMBDAS, ctx.grid, threads=ctx.threads))


def run_noncontrol(ctx: Context) -> Result:
    rows = noncontrol_rows(ctx)
    certs = [ctx.cert("fisher_pinned", max(abs(r.fisher - 1.0) for r in rows))]
    growth = rows[-1].beta_plus_integral / rows[0].beta_plus_integral
    certs.append(ctx.cert("beta_plus_growth", max(0.0, 4.0 - growth), growth, 4.0))
    drops = sum(b.beta_plus_integral <= a.beta_plus_integral for a, b in zip(rows, rows[1:]))
    certs.append(ctx.cert("beta_plus_monotone", drops))
    shortfall = max(max(0.0, 0.9 * 8.0 / np.pi * r.lam - r.plateau_zero_count) for r in rows)
    certs.append(ctx.cert("zero_count_growth", shortfall))
    header = ("lambda", "alpha", "fisher", "beta_plus_integral", "zero_count", "plateau_zero_count",
              "calibration")
    data = np.array([(r.lam, r.alpha, r.fisher, r.beta_plus_integral, r.zero_count, r.plateau_zero_count,
                      r.calibration) for r in rows])
    return certs, {"noncontrol": Table(header, data)}


RUNNERS: dict[str, Callable[[Context], Result]] = {
    "geodesic": run_geodesic,
    "schwarzian": run_schwarzian,
    "cocycle": run_cocycle,
    "bers": run_bers,
    "scatter": run_scatter,
    "trace": run_trace,
    "diagnose": run_diagnose,
    "noncontrol": run_noncontrol,
}
SUITE_ORDER = tuple(RUNNERS)
