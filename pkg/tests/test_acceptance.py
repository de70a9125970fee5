"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The sweep criteria share their (minutes-long) runs through module-scoped
fixtures; the a priori uniformity criterion reuses the tables those sweeps
already tabulated.
"""

import math

import numpy as np
import pytest

from diskphase.experiments import (
    RunConfig,
    check_operators,
    continuous_dependence,
    run_trajectory,
    sweep_eps,
    sweep_joint,
    sweep_kappa,
)
from diskphase.forcing import evaluate, parse
from diskphase.geometry import build_grid
from diskphase.linalg import assemble, solve_bicgstab
from diskphase.norms import energy, l2_bulk
from diskphase.operators import surface_mean
from diskphase.potentials import LipschitzPerturbation, MonotoneGraph, PotentialPair
from diskphase.stepper import CoupledStepper, ProblemVariant, StepperConfig

CUBIC = PotentialPair(
    MonotoneGraph.cubic(),
    LipschitzPerturbation.neg_identity(),
    MonotoneGraph.cubic(),
    LipschitzPerturbation.neg_identity(),
)
OBSTACLE = PotentialPair(
    MonotoneGraph.obstacle(),
    LipschitzPerturbation.neg_identity(),
    MonotoneGraph.obstacle(),
    LipschitzPerturbation.neg_identity(),
)
ALL_VARIANTS = (
    ProblemVariant.full_eps_kappa(1.0, 0.1),
    ProblemVariant.eps_limit(1.0),
    ProblemVariant.kappa_limit(0.1),
    ProblemVariant.double_limit(),
)

# seeded-random smooth trace-compatible initial datum within [-1, 1]
_RNG = np.random.default_rng(20260823)
_A, _B, _C = _RNG.uniform(-0.3, 0.3, 3)
RANDOM_SMOOTH_U0 = f"{_A:.6f}+{_B:.6f}*r^2*cos(2*theta)+{_C:.6f}*r^3*sin(theta)"

SWEEP_U0 = "0.2+0.3*r^2*cos(2*theta)+0.1*r^3*sin(theta)"
SWEEP_PARAMS = tuple(2.0**-k for k in range(3, 9))


def _announce(capsys, number, name, passed, detail=""):
    line = f"criterion {number:02d} {name}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    with capsys.disabled():
        print(line, flush=True)
    assert passed, line


def _sweep_base(variant):
    return RunConfig(
        nr=32,
        ntheta=64,
        radius=1.0,
        dt=2.5e-4,
        T=0.25,
        lam=0.1,
        variant=variant,
        potentials=CUBIC,
        u0=SWEEP_U0,
    )


@pytest.fixture(scope="module")
def kappa_report():
    return sweep_kappa(
        _sweep_base(ProblemVariant.eps_limit(1.0)), SWEEP_PARAMS, stabilization=True
    )


@pytest.fixture(scope="module")
def eps_report():
    return sweep_eps(_sweep_base(ProblemVariant.kappa_limit(1.0)), SWEEP_PARAMS)


# ---------------------------------------------------------------------------
# criterion 1: operator exactness


def test_criterion_01_operator_exactness(capsys):
    report = check_operators()
    worst_green = max(row["green_residual"] for row in report.rows)
    eig_row = next(row for row in report.rows if row["ntheta"] == 64)
    eig_ok = eig_row["eigenvalue_continuum_error"] < 8.1e-4
    _announce(
        capsys,
        1,
        "operator exactness",
        report.passed and eig_ok,
        f"green {worst_green:.2e}, eig err {eig_row['eigenvalue_continuum_error']:.2e}",
    )


# ---------------------------------------------------------------------------
# criterion 2: Yosida suite


def test_criterion_02_yosida_suite(capsys):
    graphs = (
        MonotoneGraph.cubic(),
        MonotoneGraph.logarithmic(),
        MonotoneGraph.obstacle(),
        MonotoneGraph.zero(),
        MonotoneGraph.linear(2.0),
    )
    rng = np.random.default_rng(7)
    r = np.sort(rng.uniform(-3.0, 3.0, 10_000))
    dr = np.diff(r)
    violations = 0
    for g in graphs:
        with np.errstate(all="ignore"):
            b0 = g.minimal_section(r)
            bh = g.bhat(r)
        finite = np.isfinite(b0)
        for lam in (1.0, 0.1, 0.01):
            y = g.yosida(lam, r)
            j = g.resolvent(lam, r)
            m = g.moreau(lam, r)
            dy = np.diff(y)
            violations += int(np.sum(dy < -1e-10))
            violations += int(np.sum(np.abs(dy) > dr / lam * (1 + 1e-9) + 1e-12))
            violations += int(np.sum(np.abs(np.diff(j)) > dr * (1 + 1e-9) + 1e-12))
            violations += int(
                np.sum(np.abs(y[finite]) > np.abs(b0[finite]) * (1 + 1e-9) + 1e-12)
            )
            violations += int(np.sum(m < -1e-12))
            with np.errstate(invalid="ignore"):
                violations += int(np.sum(m > bh * (1 + 1e-9) + 1e-12))
    _announce(capsys, 2, "yosida suite", violations == 0, f"{violations} violations")


# ---------------------------------------------------------------------------
# criterion 3: stationarity


def test_criterion_03_stationarity(capsys):
    worst = 0.0
    for variant in ALL_VARIANTS:
        grid = build_grid(8, 16, 1.0)
        cfg = StepperConfig(dt=1e-3, lam=1e-12, potentials=CUBIC, u0="1")
        stepper = CoupledStepper(grid, variant, cfg)
        st0 = stepper.initial_state()
        st = st0
        for _ in range(100):
            st, _ = stepper.step(st)
        change = max(
            float(np.max(np.abs(st.u - st0.u))),
            float(np.max(np.abs(st.u_gamma - st0.u_gamma))),
        )
        worst = max(worst, change)
    _announce(capsys, 3, "stationarity", worst <= 1e-11, f"max change {worst:.2e}")


# ---------------------------------------------------------------------------
# criterion 4: surface mass conservation


def test_criterion_04_mass_conservation(capsys):
    worst = 0.0
    for pair in (CUBIC, OBSTACLE):
        for variant in ALL_VARIANTS:
            grid = build_grid(8, 16, 1.0)
            cfg = StepperConfig(dt=1e-3, lam=0.1, potentials=pair, u0=RANDOM_SMOOTH_U0)
            stepper = CoupledStepper(grid, variant, cfg)
            st = stepper.initial_state()
            m0 = surface_mean(grid, st.u_gamma)
            for _ in range(200):
                st, _ = stepper.step(st)
                worst = max(worst, abs(surface_mean(grid, st.u_gamma) - m0))
    _announce(capsys, 4, "mass conservation", worst <= 1e-10, f"max drift {worst:.2e}")


# ---------------------------------------------------------------------------
# criterion 5: energy dissipation


def test_criterion_05_energy_dissipation(capsys):
    worst = -math.inf
    for variant in (
        ProblemVariant.full_eps_kappa(1.0, 0.1),
        ProblemVariant.kappa_limit(0.1),
    ):
        cfg = RunConfig(
            nr=16,
            ntheta=32,
            radius=1.0,
            dt=1e-3,
            T=0.2,
            lam=0.1,
            variant=variant,
            potentials=CUBIC,
            u0=SWEEP_U0,
        )
        grid = cfg.grid()
        traj = run_trajectory(cfg)
        es = [energy(grid, s, CUBIC, variant.kappa, cfg.lam) for s in traj]
        for e_prev, e_next in zip(es, es[1:]):
            worst = max(worst, e_next - e_prev - 1e-8 * (1 + abs(e_prev)))
    _announce(
        capsys, 5, "energy dissipation", worst <= 0.0, f"worst margin {worst:.2e}"
    )


# ---------------------------------------------------------------------------
# criteria 6-8: rate sweeps


def test_criterion_06_kappa_rate(capsys, kappa_report):
    s_u = kappa_report.slopes["max_u_H"][0]
    s_g = kappa_report.slopes["max_ug_vdual"][0]
    gap = max(
        kappa_report.stabilization_gap["max_u_H"],
        kappa_report.stabilization_gap["max_ug_vdual"],
    )
    ok = s_u >= 0.45 and s_g >= 0.45 and gap < 0.05
    _announce(
        capsys,
        6,
        "kappa-rate",
        ok,
        f"slopes {s_u:.3f}/{s_g:.3f}, dt-gap {gap:.4f}",
    )


def test_criterion_07_eps_rate(capsys, eps_report):
    s_u = eps_report.slopes["max_u_H"][0]
    s_g = eps_report.slopes["max_ug_vdual"][0]
    ok = s_u >= 0.45 and s_g >= 0.45
    _announce(capsys, 7, "eps-rate", ok, f"slopes {s_u:.3f}/{s_g:.3f}")


def test_criterion_08_joint_rate(capsys):
    report = sweep_joint(
        _sweep_base(ProblemVariant.double_limit()), [(v, v) for v in SWEEP_PARAMS]
    )
    slope = report.slopes["max_u_H"][0]
    _announce(capsys, 8, "joint-rate", slope >= 0.9, f"slope {slope:.3f}")


# ---------------------------------------------------------------------------
# criterion 9: continuous dependence


def test_criterion_09_continuous_dependence(capsys):
    from dataclasses import replace

    deltas = (1e-1, 1e-2, 1e-3)
    details = []
    ok = True
    for variant in (
        ProblemVariant.eps_limit(1.0),
        ProblemVariant.kappa_limit(0.5),
        ProblemVariant.double_limit(),
    ):
        base = RunConfig(
            nr=16,
            ntheta=32,
            radius=1.0,
            dt=1e-3,
            T=0.1,
            lam=0.1,
            variant=variant,
            potentials=CUBIC,
            u0=SWEEP_U0,
        )
        ratios = []
        for delta in deltas:
            perturbed = replace(base, f=f"({base.f})+({delta})*cos(theta)")
            rep = continuous_dependence(variant, perturbed, base)
            ratios.append(rep.ratio)
        spread = max(ratios) / min(ratios)
        ok = ok and all(np.isfinite(ratios)) and spread < 2.0
        details.append(f"{variant.kind} spread {spread:.4f}")

    # all-linear problem: the ratio must be delta-invariant
    linear = PotentialPair(
        MonotoneGraph.zero(),
        LipschitzPerturbation.zero(),
        MonotoneGraph.zero(),
        LipschitzPerturbation.zero(),
    )
    variant = ProblemVariant.eps_limit(1.0)
    base = RunConfig(
        nr=16,
        ntheta=32,
        radius=1.0,
        dt=1e-3,
        T=0.1,
        lam=0.1,
        variant=variant,
        potentials=linear,
        u0="0.1*r*cos(theta)",
    )
    ratios = []
    for delta in deltas:
        perturbed = replace(base, f=f"({base.f})+({delta})*cos(theta)")
        ratios.append(continuous_dependence(variant, perturbed, base).ratio)
    lin_dev = (max(ratios) - min(ratios)) / max(ratios)
    ok = ok and lin_dev <= 1e-8
    details.append(f"linear dev {lin_dev:.2e}")
    _announce(capsys, 9, "continuous dependence", ok, "; ".join(details))


# ---------------------------------------------------------------------------
# criterion 10: a priori uniformity


def _column_ok(name, values, sweep):
    values = np.asarray(values, dtype=float)
    weighted_prefix = "sqrt_kappa" if sweep == "kappa" else "sqrt_eps"
    if name.startswith(weighted_prefix):
        # weighted by the vanishing parameter: one-sided uniform boundedness
        return bool(np.all(values <= 2.0 * values[0] + 1e-300))
    if np.max(values) == 0.0:
        return True
    return bool(np.max(values) / max(np.min(values), 1e-300) < 2.0)


def test_criterion_10_apriori_uniformity(capsys, kappa_report, eps_report):
    failures = []
    for row_key in kappa_report.apriori[0]:
        vals = [row[row_key] for row in kappa_report.apriori]
        if not _column_ok(row_key, vals, "kappa"):
            failures.append(f"kappa:{row_key}")
    for row_key in ("sqrt_eps_grad_mu_L2", "grad_mug_L2"):
        vals = [row[row_key] for row in eps_report.apriori]
        if not _column_ok(row_key, vals, "eps"):
            failures.append(f"eps:{row_key}")
    _announce(
        capsys,
        10,
        "a priori uniformity",
        not failures,
        "all columns uniform" if not failures else ", ".join(failures),
    )


# ---------------------------------------------------------------------------
# criterion 11: parser and linear algebra


def test_criterion_11_parser_and_linalg(capsys):
    ok = True
    # expression corpus, exact values
    corpus = [
        ("1+2*3", {}, 7.0),
        ("(1+2)*3", {}, 9.0),
        ("2^3^2", {}, 512.0),
        ("-2^2", {}, -4.0),
        ("2*r+theta", {"r": 2.0, "theta": 3.0}, 7.0),
        ("sin(0)+exp(0)", {}, 1.0),
        ("abs(-2)/4", {}, 0.5),
        ("pi", {}, math.pi),
    ]
    for text, env, expected in corpus:
        ok = ok and evaluate(parse(text), env) == expected

    # BiCGStab against a dense direct solve of the shifted surface Poisson
    # operator (cyclic tridiagonal)
    n, d, o = 64, 2.5, -1.0
    trips = []
    dense = np.zeros((n, n))
    for i in range(n):
        for jcol, v in ((i, d), ((i + 1) % n, o), ((i - 1) % n, o)):
            trips.append((i, jcol, v))
            dense[i, jcol] += v
    a = assemble(trips, n)
    rng = np.random.default_rng(8)
    b = rng.standard_normal(n)
    x, _ = solve_bicgstab(a, b, tol=1e-13)
    gap = float(np.max(np.abs(x - np.linalg.solve(dense, b))))
    ok = ok and gap < 1e-10

    # Newton Jacobian against central finite differences on a 4x8 state
    worst_fd = 0.0
    for variant in (ProblemVariant.full_eps_kappa(1.0, 0.1), ProblemVariant.double_limit()):
        grid = build_grid(4, 8, 1.0)
        cfg = StepperConfig(
            dt=1e-3, lam=0.1, potentials=CUBIC, u0="0.1+0.2*r^2*cos(2*theta)"
        )
        stepper = CoupledStepper(grid, variant, cfg)
        prev = stepper.initial_state()
        x0 = stepper.pack(prev) + 0.05 * np.random.default_rng(23).standard_normal(
            stepper.nun
        )
        jac = stepper.jacobian(x0).toarray()
        fd = np.zeros_like(jac)
        h = 1e-6
        for k in range(stepper.nun):
            e = np.zeros(stepper.nun)
            e[k] = h
            fd[:, k] = (
                stepper.residual(x0 + e, prev) - stepper.residual(x0 - e, prev)
            ) / (2 * h)
        worst_fd = max(worst_fd, float(np.max(np.abs(jac - fd)) / np.max(np.abs(jac))))
    ok = ok and worst_fd <= 1e-6
    _announce(
        capsys,
        11,
        "parser and linalg",
        ok,
        f"bicgstab gap {gap:.2e}, jacobian fd {worst_fd:.2e}",
    )
