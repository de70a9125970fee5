import numpy as np
import pytest

from diskphase.geometry import build_grid
from diskphase.operators import surface_mean
from diskphase.potentials import LipschitzPerturbation, MonotoneGraph, PotentialPair
from diskphase.stepper import (
    CoupledStepper,
    IncompatibleTraceError,
    ProblemVariant,
    StepperConfig,
    assemble_jacobian,
    assemble_residual,
    initial_state,
    step,
)

ALL_VARIANTS = [
    ProblemVariant.full_eps_kappa(1.0, 0.1),
    ProblemVariant.eps_limit(0.5),
    ProblemVariant.kappa_limit(0.1),
    ProblemVariant.double_limit(),
]


def _config(pair, dt=1e-3, lam=0.1, **kw):
    return StepperConfig(dt=dt, lam=lam, potentials=pair, **kw)


def test_variant_validation():
    with pytest.raises(ValueError):
        ProblemVariant.full_eps_kappa(0.0, 0.5)
    with pytest.raises(ValueError):
        ProblemVariant.full_eps_kappa(1.0, 2.0)
    with pytest.raises(ValueError):
        ProblemVariant.full_eps_kappa(1.0, 0.5, tau=1.5)
    with pytest.raises(ValueError):
        ProblemVariant.eps_limit(-1.0)
    with pytest.raises(ValueError):
        ProblemVariant("kappa_limit", kappa=0.5, tau=0.5)
    assert not ProblemVariant.kappa_limit(0.5).has_bulk_mu
    assert ProblemVariant.eps_limit(0.5).has_bulk_mu


def test_initial_state_constant(cubic_pair):
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, u0="1")
    st = initial_state(grid, cfg, ProblemVariant.full_eps_kappa(1.0, 0.1))
    assert np.all(st.u == 1.0)
    assert np.all(st.u_gamma == 1.0)
    assert st.mu is not None
    # stationary constant state: mu_gamma = beta_lam(1) + pi(1), constant
    expected = float(cubic_pair.surf_graph.yosida(0.1, 1.0)) - 1.0
    assert np.allclose(st.mu_gamma, expected)
    # harmonic extension of a constant trace is the constant itself
    assert np.allclose(st.mu, expected, atol=1e-9)


def test_initial_state_compatible_trace_accepted(cubic_pair):
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, u0="r*cos(theta)", u0_gamma="cos(theta)")
    st = initial_state(grid, cfg, ProblemVariant.double_limit())
    assert np.allclose(st.u_gamma, np.cos(grid.theta))


def test_initial_state_incompatible_trace_rejected(cubic_pair):
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, u0="0", u0_gamma="1")
    with pytest.raises(IncompatibleTraceError):
        initial_state(grid, cfg, ProblemVariant.double_limit())


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: v.kind)
def test_stationary_residual_is_zero(cubic_pair, variant):
    # u = 1 with cubic/neg-identity at tiny lam: beta_lam(1) + pi(1) ~ 0
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, lam=1e-12, u0="1")
    stepper = CoupledStepper(grid, variant, cfg)
    st = stepper.initial_state()
    res = assemble_residual(grid, variant, st, st, cfg)
    assert np.max(np.abs(res)) < 1e-9


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: v.kind)
def test_stationary_fixed_point(cubic_pair, variant):
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, lam=1e-12, u0="1")
    stepper = CoupledStepper(grid, variant, cfg)
    st = stepper.initial_state()
    new, report = stepper.step(st)
    assert report.converged
    assert np.max(np.abs(new.u - st.u)) <= 1e-12
    assert np.max(np.abs(new.u_gamma - st.u_gamma)) <= 1e-12


def test_constant_forcing_residual_rows(cubic_pair):
    grid = build_grid(4, 8, 1.0)
    variant = ProblemVariant.double_limit()
    cfg = _config(cubic_pair, lam=1e-12, u0="1", f="2")
    stepper = CoupledStepper(grid, variant, cfg)
    st = stepper.initial_state()
    res = assemble_residual(grid, variant, st, st, cfg)
    nc = grid.ncells
    assert np.allclose(res[:nc], -2.0, atol=1e-9)


@pytest.mark.parametrize(
    "variant",
    ALL_VARIANTS + [ProblemVariant.full_eps_kappa(0.5, 0.25, tau=0.5)],
    ids=lambda v: f"{v.kind}-tau{v.tau}",
)
def test_jacobian_matches_finite_differences(cubic_pair, variant):
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, u0="0.1+0.2*r^2*cos(2*theta)")
    stepper = CoupledStepper(grid, variant, cfg)
    prev = stepper.initial_state()
    rng = np.random.default_rng(23)
    x = stepper.pack(prev) + 0.05 * rng.standard_normal(stepper.nun)
    jac = stepper.jacobian(x).toarray()
    h = 1e-6
    fd = np.zeros_like(jac)
    for k in range(stepper.nun):
        e = np.zeros(stepper.nun)
        e[k] = h
        fd[:, k] = (stepper.residual(x + e, prev) - stepper.residual(x - e, prev)) / (
            2 * h
        )
    scale = np.max(np.abs(jac))
    assert np.max(np.abs(jac - fd)) <= 1e-6 * scale


def test_heat_chain_max_principle(linear_pair):
    # zero graphs, zero perturbations, no forcing: pure linear diffusion
    grid = build_grid(8, 16, 1.0)
    cfg = _config(linear_pair, u0="0.5+0.4*r^2*cos(2*theta)")
    variant = ProblemVariant.full_eps_kappa(1.0, 0.5)
    stepper = CoupledStepper(grid, variant, cfg)
    st = stepper.initial_state()
    hi = max(np.max(st.u), np.max(st.u_gamma))
    for _ in range(5):
        st, _ = stepper.step(st)
        assert max(np.max(st.u), np.max(st.u_gamma)) <= hi + 1e-10


def test_backward_boundary_example_runs():
    # zero surface graph with destabilizing -r boundary perturbation: only
    # the bulk coupling keeps the boundary equation well-posed
    pair = PotentialPair(
        MonotoneGraph.cubic(),
        LipschitzPerturbation.neg_identity(),
        MonotoneGraph.zero(),
        LipschitzPerturbation.neg_identity(),
    )
    grid = build_grid(8, 16, 1.0)
    cfg = _config(pair, u0="0.3*r*cos(theta)")
    stepper = CoupledStepper(grid, ProblemVariant.double_limit(), cfg)
    st = stepper.initial_state()
    m0 = surface_mean(grid, st.u_gamma)
    final, _ = stepper.run(0.01)
    assert abs(surface_mean(grid, final.u_gamma) - m0) <= 1e-10


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: v.kind)
def test_surface_mean_conserved_per_step(cubic_pair, variant):
    grid = build_grid(8, 16, 1.0)
    cfg = _config(cubic_pair, u0="0.2+0.3*r^2*cos(2*theta)+0.1*r^3*sin(theta)")
    stepper = CoupledStepper(grid, variant, cfg)
    st = stepper.initial_state()
    m0 = surface_mean(grid, st.u_gamma)
    for _ in range(10):
        st, _ = stepper.step(st)
        assert abs(surface_mean(grid, st.u_gamma) - m0) <= 1e-10


def test_quasi_static_bulk_potential_stays_harmonic(cubic_pair):
    # the bulk chemical potential satisfies a discrete Laplace equation at
    # every step; measured in the volume-weighted L2 norm
    from diskphase.norms import l2_bulk
    from diskphase.operators import laplacian_bulk

    grid = build_grid(16, 32, 1.0)
    variant = ProblemVariant.full_eps_kappa(1.0, 0.1)
    cfg = _config(
        cubic_pair,
        u0="0.2+0.3*r^2*cos(2*theta)+0.1*r^3*sin(theta)",
        newton_tol=1e-12,
    )
    stepper = CoupledStepper(grid, variant, cfg)
    st = stepper.initial_state()
    for _ in range(20):
        st, _ = stepper.step(st)
        lap = laplacian_bulk(grid, st.mu, st.mu_gamma)
        assert variant.eps * l2_bulk(grid, lap) < 1e-12


def test_run_zero_steps_returns_initial(cubic_pair):
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, u0="0.5")
    stepper = CoupledStepper(grid, ProblemVariant.double_limit(), cfg)
    with pytest.raises(ValueError):
        stepper.run(0.0005)  # not an integer multiple of dt


def test_run_is_deterministic(cubic_pair):
    grid = build_grid(6, 12, 1.0)
    cfg = _config(cubic_pair, u0="0.2*r*sin(theta)+0.1")
    variant = ProblemVariant.full_eps_kappa(0.5, 0.25)

    def go():
        return CoupledStepper(grid, variant, cfg).run(0.01)[0]

    a, b = go(), go()
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.u_gamma, b.u_gamma)
    assert np.array_equal(a.mu, b.mu)
    assert np.array_equal(a.mu_gamma, b.mu_gamma)


def test_first_order_in_time(cubic_pair):
    # Richardson: |u(dt) - u(dt/2)| should shrink ~2x when dt halves
    grid = build_grid(16, 32, 1.0)
    variant = ProblemVariant.full_eps_kappa(1.0, 0.5)
    u0 = "0.3*r^2*cos(2*theta)+0.1"
    T = 0.02

    def final(dt):
        cfg = _config(cubic_pair, dt=dt, u0=u0)
        return CoupledStepper(grid, variant, cfg).run(T)[0].u

    d1 = np.max(np.abs(final(2e-3) - final(1e-3)))
    d2 = np.max(np.abs(final(1e-3) - final(5e-4)))
    ratio = d1 / d2
    assert 1.5 < ratio < 2.6


def test_observers_see_every_state(cubic_pair):
    grid = build_grid(4, 8, 1.0)
    cfg = _config(cubic_pair, u0="0.1")
    stepper = CoupledStepper(grid, ProblemVariant.double_limit(), cfg)
    seen = []
    stepper.run(0.005, observers=[lambda n, s: seen.append((n, s.t))])
    assert [n for n, _ in seen] == list(range(6))
    assert seen[-1][1] == pytest.approx(0.005)


def test_module_level_wrappers(cubic_pair):
    grid = build_grid(4, 8, 1.0)
    variant = ProblemVariant.double_limit()
    cfg = _config(cubic_pair, u0="0.2")
    st = initial_state(grid, cfg, variant)
    new, report = step(grid, variant, st, cfg)
    assert report.converged
    jac = assemble_jacobian(grid, variant, st, cfg)
    assert jac.shape == (grid.ncells + 2 * grid.ntheta,) * 2


def test_config_validation(cubic_pair):
    with pytest.raises(ValueError):
        StepperConfig(dt=0.0, lam=0.1, potentials=cubic_pair)
    with pytest.raises(ValueError):
        StepperConfig(dt=1e-3, lam=0.0, potentials=cubic_pair)
