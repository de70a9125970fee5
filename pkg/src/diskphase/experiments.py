"""Experiment drivers: parameter sweeps, stability ratios, a priori tables.

Each sweep runs a family of full problems against a fixed limit-problem
reference on bitwise-identical discretizations, measures the norm brackets of
the convergence statements on the discrete differences, and fits log-log
slopes against the vanishing parameter.  The continuous-dependence driver
assembles the stability inequality of the corresponding limit problem from
two perturbed runs.  Everything here is deterministic given the config.
"""

import configparser
import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import forcing
from .geometry import Grid, build_grid
from .norms import (
    NormAccumulator,
    h1_bulk,
    h1_surface,
    l2_bulk,
    l2_surface,
    vdual_surface,
)
from .operators import (
    dirichlet_form,
    green_identity_residual,
    laplace_beltrami,
    surface_dirichlet_form,
    surface_mean,
)
from .potentials import (
    LipschitzPerturbation,
    MonotoneGraph,
    PotentialPair,
    validate_assumptions,
)
from .stepper import CoupledStepper, ProblemVariant, StepperConfig


class ConfigError(ValueError):
    """Unusable experiment configuration."""


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """One complete solver run: mesh, variant, time window, data."""

    nr: int
    ntheta: int
    radius: float
    dt: float
    T: float
    lam: float
    variant: ProblemVariant
    potentials: PotentialPair
    u0: str = "0"
    u0_gamma: str | None = None
    f: str = "0"
    f_gamma: str = "0"
    newton_tol: float = 1e-11
    newton_maxit: int = 30
    linear_tol: float = 1e-12

    def __post_init__(self):
        n_steps = round(self.T / self.dt)
        if n_steps < 1 or abs(n_steps * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ConfigError(f"T={self.T} is not an integer multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def grid(self) -> Grid:
        return build_grid(self.nr, self.ntheta, self.radius)

    def stepper_config(self) -> StepperConfig:
        return StepperConfig(
            dt=self.dt,
            lam=self.lam,
            potentials=self.potentials,
            u0=self.u0,
            u0_gamma=self.u0_gamma,
            f=self.f,
            f_gamma=self.f_gamma,
            newton_tol=self.newton_tol,
            newton_maxit=self.newton_maxit,
            linear_tol=self.linear_tol,
        )

    def validate(self):
        """Structural check of the configured nonlinearities."""
        lo, hi = self.potentials.common_domain
        lo, hi = max(lo, -1.0), min(hi, 1.0)
        report = validate_assumptions(self.potentials, lo=lo, hi=hi)
        if not report.passed:
            raise ConfigError(report.message)


def data_signature(config: RunConfig) -> str:
    """Hash of everything a sweep must hold fixed (all but the variant)."""
    fields = (
        config.nr,
        config.ntheta,
        repr(config.radius),
        repr(config.dt),
        repr(config.T),
        repr(config.lam),
        repr(config.potentials),
        str(config.u0),
        str(config.u0_gamma),
        str(config.f),
        str(config.f_gamma),
    )
    return hashlib.sha256(repr(fields).encode()).hexdigest()


def run_trajectory(config: RunConfig):
    """Run one config and return the list of states at t_0 .. t_N."""
    stepper = CoupledStepper(config.grid(), config.variant, config.stepper_config())
    states = []
    stepper.run(config.T, observers=[lambda n, s: states.append(s)])
    return states


def run_single(config: RunConfig):
    """Run one config; return (final state, diagnostics)."""
    stepper = CoupledStepper(config.grid(), config.variant, config.stepper_config())
    return stepper.run(config.T)


# ---------------------------------------------------------------------------
# rate fitting


def fit_rate(xs, ys):
    """Least-squares fit of log(y) against log(x).

    Returns (slope, intercept, correlation).  Requires at least two points,
    all strictly positive.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or ys.size != xs.size:
        raise ValueError("fit_rate needs at least two matched points")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("fit_rate needs strictly positive data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    sx, sy = np.std(lx), np.std(ly)
    if sx == 0.0 or sy == 0.0:
        corr = 0.0
    else:
        corr = float(np.corrcoef(lx, ly)[0, 1])
    return float(slope), float(intercept), corr


# ---------------------------------------------------------------------------
# per-run measurements


#: metric names in report order
METRIC_NAMES = (
    "max_u_H",  # max_t || u_diff ||_H
    "l2_u_V",  # (sum dt || u_diff ||_V^2)^(1/2)
    "sqrt_eps_conv_grad_mu",  # sqrt(eps) * max_t || grad (1*mu) ||_H
    "conv_grad_mug",  # max_t || grad_Gamma (1*mu_Gamma diff) ||
    "sqrt_kappa_grad_ug",  # sqrt(kappa) * L2-in-time surface gradient
    "max_ug_vdual",  # max_t dual norm of u_Gamma diff
)


def difference_metrics(grid, variant, traj, ref_traj, dt, mu_mode, ug_mode):
    """Norm-bracket metrics of one full run against the reference trajectory.

    mu_mode: 'difference' measures the chemical-potential metrics on the
    difference against the reference; 'full' on the run's own potential
    (used when the reference problem has none).  ug_mode selects whether the
    kappa-weighted surface-gradient metric uses the run's own u_Gamma
    ('full') or the difference ('difference').
    """
    if len(traj) != len(ref_traj):
        raise ValueError("trajectories have different lengths")
    acc = NormAccumulator(dt=dt)
    conv_mu = None
    conv_mug = None
    conv_mg = np.zeros(grid.ntheta)
    has_mu = variant.has_bulk_mu
    if has_mu:
        conv_mu = np.zeros(grid.bulk_shape)
        conv_mug = np.zeros(grid.ntheta)

    for n, (state, ref) in enumerate(zip(traj, ref_traj)):
        du = state.u - ref.u
        dug = state.u_gamma - ref.u_gamma
        acc.record_max("max_u_H", l2_bulk(grid, du))
        acc.record_max("max_ug_vdual", vdual_surface(grid, dug - surface_mean(grid, dug)))
        if n == 0:
            continue
        acc.record_square("l2_u_V", h1_bulk(grid, du, dug))
        ug = state.u_gamma if ug_mode == "full" else dug
        acc.record_square("grad_ug", np.sqrt(surface_dirichlet_form(grid, ug, ug)))
        if mu_mode == "difference":
            dmg = state.mu_gamma - ref.mu_gamma
        else:
            dmg = state.mu_gamma
        conv_mg = conv_mg + dt * dmg
        acc.record_max("conv_grad_mug", np.sqrt(surface_dirichlet_form(grid, conv_mg, conv_mg)))
        if has_mu:
            dmu = state.mu - (ref.mu if mu_mode == "difference" else 0.0)
            conv_mu = conv_mu + dt * dmu
            conv_mug = conv_mug + dt * dmg
            acc.record_max(
                "conv_grad_mu",
                np.sqrt(dirichlet_form(grid, conv_mu, conv_mug, conv_mu, conv_mug)),
            )

    out = {
        "max_u_H": acc.max("max_u_H"),
        "l2_u_V": acc.l2("l2_u_V"),
        "conv_grad_mug": acc.max("conv_grad_mug"),
        "sqrt_kappa_grad_ug": np.sqrt(max(variant.kappa, 0.0)) * acc.l2("grad_ug"),
        "max_ug_vdual": acc.max("max_ug_vdual"),
    }
    if has_mu:
        out["sqrt_eps_conv_grad_mu"] = np.sqrt(variant.eps) * acc.max("conv_grad_mu")
    else:
        out["sqrt_eps_conv_grad_mu"] = 0.0
    return out


APRIORI_COLUMNS = (
    "dt_u_L2H",
    "u_LinfV",
    "sqrt_kappa_ug_LinfV",
    "bhat_bulk_LinfL1",
    "bhat_surf_LinfL1",
    "sqrt_eps_grad_mu_L2",
    "grad_mug_L2",
    "dt_ug_L2Vdual",
)


def apriori_quantities(grid, variant, traj, dt, pair, lam):
    """Tabulate the uniform-bound quantities of one trajectory."""
    acc = NormAccumulator(dt=dt)
    sk = np.sqrt(max(variant.kappa, 0.0))
    for n, state in enumerate(traj):
        u, ug = state.u, state.u_gamma
        acc.record_max("u_V", h1_bulk(grid, u, ug))
        acc.record_max("ug_V", h1_surface(grid, ug))
        acc.record_max(
            "bhat_bulk", float(np.sum(pair.bulk_graph.moreau(lam, u) * grid.w[:, None]))
        )
        acc.record_max(
            "bhat_surf", float(np.sum(pair.surf_graph.moreau(lam, ug) * grid.s))
        )
        if n == 0:
            continue
        prev = traj[n - 1]
        du = (u - prev.u) / dt
        dug = (ug - prev.u_gamma) / dt
        acc.record_square("dt_u", l2_bulk(grid, du))
        acc.record_square("dt_ug_vdual", vdual_surface(grid, dug))
        if variant.tau > 0.0:
            acc.record_square("dt_ug", l2_surface(grid, dug))
        if variant.has_bulk_mu:
            acc.record_square(
                "grad_mu",
                np.sqrt(
                    dirichlet_form(grid, state.mu, state.mu_gamma, state.mu, state.mu_gamma)
                ),
            )
        acc.record_square(
            "grad_mug",
            np.sqrt(surface_dirichlet_form(grid, state.mu_gamma, state.mu_gamma)),
        )
    out = {
        "dt_u_L2H": acc.l2("dt_u"),
        "u_LinfV": acc.max("u_V"),
        "sqrt_kappa_ug_LinfV": sk * acc.max("ug_V"),
        "bhat_bulk_LinfL1": acc.max("bhat_bulk"),
        "bhat_surf_LinfL1": acc.max("bhat_surf"),
        "grad_mug_L2": acc.l2("grad_mug"),
        "dt_ug_L2Vdual": acc.l2("dt_ug_vdual"),
    }
    if variant.has_bulk_mu:
        out["sqrt_eps_grad_mu_L2"] = np.sqrt(variant.eps) * acc.l2("grad_mu")
    else:
        out["sqrt_eps_grad_mu_L2"] = 0.0
    if variant.tau > 0.0:
        out["sqrt_tau_dt_ug_L2H"] = np.sqrt(variant.tau) * acc.l2("dt_ug")
    return out


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class RateReport:
    """Per-parameter error metrics and their fitted log-log slopes."""

    sweep: str  # 'kappa' | 'eps' | 'joint'
    params: tuple  # swept parameter values (kappa, eps, or (eps, kappa))
    abscissa: tuple  # values the slopes are fitted against
    metrics: dict  # name -> tuple of per-parameter values
    slopes: dict  # name -> (slope, intercept, correlation)
    apriori: tuple  # per-parameter a priori tables
    refined_slopes: dict | None = None  # same fits at dt/2, if requested
    stabilization_gap: dict | None = None  # |slope - refined slope| per metric


def _check_params(values, name):
    values = tuple(float(v) for v in values)
    if len(values) < 2:
        raise ValueError(f"need at least two {name} values to fit a rate")
    if any(not 0.0 < v <= 1.0 for v in values):
        raise ValueError(f"{name} values must lie in (0, 1]")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} values must be strictly decreasing")
    return values


def _run_family(configs, jobs):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_trajectory, configs))
    return [run_trajectory(c) for c in configs]


def _sweep(base, sweep, ref_variant, run_variants, params, abscissa, mu_mode, ug_mode, jobs):
    ref_cfg = replace(base, variant=ref_variant)
    run_cfgs = [replace(base, variant=v) for v in run_variants]
    sigs = {data_signature(c) for c in [ref_cfg, *run_cfgs]}
    if len(sigs) != 1:
        raise ValueError("sweep members disagree on grid/time/data configuration")
    grid = base.grid()
    dt = base.dt
    trajectories = _run_family([ref_cfg, *run_cfgs], jobs)
    ref_traj, run_trajs = trajectories[0], trajectories[1:]

    metrics = {name: [] for name in METRIC_NAMES}
    tables = []
    for variant, traj in zip(run_variants, run_trajs):
        m = difference_metrics(grid, variant, traj, ref_traj, dt, mu_mode, ug_mode)
        for name in METRIC_NAMES:
            metrics[name].append(m[name])
        tables.append(
            apriori_quantities(grid, variant, traj, dt, base.potentials, base.lam)
        )

    slopes = {}
    for name, vals in metrics.items():
        vals_arr = np.asarray(vals)
        if np.all(vals_arr > 0.0):
            slopes[name] = fit_rate(abscissa, vals_arr)
        else:
            slopes[name] = (float("nan"), float("nan"), 0.0)
    return RateReport(
        sweep=sweep,
        params=tuple(params),
        abscissa=tuple(abscissa),
        metrics={k: tuple(v) for k, v in metrics.items()},
        slopes=slopes,
        apriori=tuple(tables),
    )


def _with_stabilization(report_fn, base, stabilization):
    report = report_fn(base)
    if not stabilization:
        return report
    refined = report_fn(replace(base, dt=base.dt / 2.0))
    gap = {
        name: abs(report.slopes[name][0] - refined.slopes[name][0])
        for name in report.slopes
    }
    return replace(report, refined_slopes=refined.slopes, stabilization_gap=gap)


def sweep_kappa(base: RunConfig, kappas, stabilization=False, jobs=1) -> RateReport:
    """Full problems at decreasing kappa against the kappa=0 reference."""
    kappas = _check_params(kappas, "kappa")
    if base.variant.kind != "eps_limit":
        raise ValueError("kappa sweep needs an eps_limit reference variant")
    eps = base.variant.eps

    def go(cfg):
        return _sweep(
            cfg,
            "kappa",
            ProblemVariant.eps_limit(eps),
            [ProblemVariant.full_eps_kappa(eps, k) for k in kappas],
            kappas,
            kappas,
            mu_mode="difference",
            ug_mode="full",
            jobs=jobs,
        )

    return _with_stabilization(go, base, stabilization)


def sweep_eps(base: RunConfig, epss, stabilization=False, jobs=1) -> RateReport:
    """Full problems at decreasing eps against the kappa-limit reference."""
    epss = _check_params(epss, "eps")
    if base.variant.kind != "kappa_limit":
        raise ValueError("eps sweep needs a kappa_limit reference variant")
    kappa = base.variant.kappa

    def go(cfg):
        return _sweep(
            cfg,
            "eps",
            ProblemVariant.kappa_limit(kappa),
            [ProblemVariant.full_eps_kappa(e, kappa) for e in epss],
            epss,
            epss,
            mu_mode="full",
            ug_mode="difference",
            jobs=jobs,
        )

    return _with_stabilization(go, base, stabilization)


def sweep_joint(base: RunConfig, pairs, stabilization=False, jobs=1) -> RateReport:
    """Full problems along a list of (eps, kappa) pairs against the double
    limit; slopes are fitted against sqrt(eps) + sqrt(kappa)."""
    pairs = [(float(e), float(k)) for e, k in pairs]
    if len(pairs) < 2:
        raise ValueError("need at least two (eps, kappa) pairs to fit a rate")
    _check_params([e for e, _ in pairs], "eps")
    _check_params([k for _, k in pairs], "kappa")
    if base.variant.kind != "double_limit":
        raise ValueError("joint sweep needs a double_limit reference variant")
    abscissa = [np.sqrt(e) + np.sqrt(k) for e, k in pairs]

    def go(cfg):
        return _sweep(
            cfg,
            "joint",
            ProblemVariant.double_limit(),
            [ProblemVariant.full_eps_kappa(e, k) for e, k in pairs],
            pairs,
            abscissa,
            mu_mode="full",
            ug_mode="full",
            jobs=jobs,
        )

    return _with_stabilization(go, base, stabilization)


# ---------------------------------------------------------------------------
# continuous dependence


@dataclass(frozen=True)
class StabilityReport:
    """One side-by-side run pair reduced to the stability inequality."""

    variant_kind: str
    lhs: float
    rhs: float
    ratio: float
    perturbation: float
    note: str = "forcing dual norms upper-bounded by their plain L2-in-space norms"


def continuous_dependence(variant: ProblemVariant, cfg_a: RunConfig, cfg_b: RunConfig) -> StabilityReport:
    """Stability ratio of two runs of the same problem with perturbed data.

    The left side collects the solution-difference norms of the relevant
    stability statement (adding the L2-in-time surface V-norm when surface
    diffusion is present); the right side collects the data-difference norms.
    The initial boundary data must share their surface mean.
    """
    if cfg_a.variant != variant or cfg_b.variant != variant:
        raise ValueError("both configs must use the stated problem variant")
    sig_a = data_signature(replace(cfg_a, u0="", u0_gamma="", f="", f_gamma=""))
    sig_b = data_signature(replace(cfg_b, u0="", u0_gamma="", f="", f_gamma=""))
    if sig_a != sig_b:
        raise ValueError("configs must share grid, time window, and potentials")

    grid = cfg_a.grid()
    step_a = CoupledStepper(grid, variant, cfg_a.stepper_config())
    step_b = CoupledStepper(grid, variant, cfg_b.stepper_config())
    init_a, init_b = step_a.initial_state(), step_b.initial_state()
    mean_gap = abs(
        surface_mean(grid, init_a.u_gamma) - surface_mean(grid, init_b.u_gamma)
    )
    if mean_gap > 1e-12:
        raise ValueError(
            f"initial boundary data have different surface means (gap {mean_gap:.3e})"
        )

    traj_a = run_trajectory(cfg_a)
    traj_b = run_trajectory(cfg_b)
    dt = cfg_a.dt
    acc = NormAccumulator(dt=dt)
    with_surface_v = variant.kind == "kappa_limit"
    for n, (a, b) in enumerate(zip(traj_a, traj_b)):
        du = a.u - b.u
        dug = a.u_gamma - b.u_gamma
        acc.record_max("u_H", l2_bulk(grid, du))
        acc.record_max("ug_vdual", vdual_surface(grid, dug))
        if n == 0:
            continue
        acc.record_square("u_V", h1_bulk(grid, du, dug))
        if with_surface_v:
            acc.record_square("ug_V", h1_surface(grid, dug))
        t = n * dt
        df = step_a.sample_f(t) - step_b.sample_f(t)
        dfg = step_a.sample_f_gamma(t) - step_b.sample_f_gamma(t)
        acc.record_square("f_H", l2_bulk(grid, df))
        acc.record_square("fg_H", l2_surface(grid, dfg))

    lhs = acc.max("u_H") + acc.l2("u_V") + acc.max("ug_vdual")
    if with_surface_v:
        lhs += acc.l2("ug_V")
    du0 = init_a.u - init_b.u
    dug0 = init_a.u_gamma - init_b.u_gamma
    rhs = (
        l2_bulk(grid, du0)
        + vdual_surface(grid, dug0)
        + acc.l2("f_H")
        + acc.l2("fg_H")
    )
    if rhs == 0.0:
        raise ValueError("zero data perturbation: stability ratio is undefined")
    return StabilityReport(
        variant_kind=variant.kind,
        lhs=lhs,
        rhs=rhs,
        ratio=lhs / rhs,
        perturbation=rhs,
    )


# ---------------------------------------------------------------------------
# a priori tables and operator self-checks


def apriori(base: RunConfig, family: str, values, jobs=1):
    """A priori quantity table over a kappa- or eps-family of full problems.

    Returns a list of dict rows, one per family value, each including the
    swept parameter under the key 'param'.
    """
    if family not in ("kappa", "eps"):
        raise ValueError("family must be 'kappa' or 'eps'")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("need at least one family value")
    grid = base.grid()
    rows = []
    configs = []
    for v in values:
        variant = replace(base.variant, **{family: v})
        configs.append(replace(base, variant=variant))
    trajectories = _run_family(configs, jobs)
    for v, cfg, traj in zip(values, configs, trajectories):
        row = {"param": v}
        row.update(
            apriori_quantities(grid, cfg.variant, traj, base.dt, base.potentials, base.lam)
        )
        rows.append(row)
    return rows


@dataclass(frozen=True)
class OperatorCheckReport:
    passed: bool
    rows: tuple
    message: str


def check_operators(grid_sizes=((4, 8), (16, 32), (32, 64)), radius=1.0,
                    quadruples=100, outer_flux_scale=1.0, seed=20260823) -> OperatorCheckReport:
    """Exactness self-checks of the discrete operators.

    Per grid: the transmission identity on random field quadruples, the
    conservation of the surface Laplacian, and the lowest angular eigenvalue
    against its closed form.  `outer_flux_scale` corrupts the boundary flux
    on purpose so failure detection itself can be exercised.
    """
    rng = np.random.default_rng(seed)
    rows = []
    passed = True
    failures = []
    for nr, ntheta in grid_sizes:
        grid = build_grid(nr, ntheta, radius)
        worst = 0.0
        for _ in range(quadruples):
            u = rng.standard_normal(grid.bulk_shape)
            ug = rng.standard_normal(grid.ntheta)
            v = rng.standard_normal(grid.bulk_shape)
            vg = rng.standard_normal(grid.ntheta)
            res = green_identity_residual(
                grid, u, ug, v, vg, outer_flux_scale=outer_flux_scale
            )
            worst = max(worst, res)
        z = rng.standard_normal(grid.ntheta)
        lb = laplace_beltrami(grid, z)
        conservation = abs(float(np.sum(lb * grid.s))) / max(
            float(np.sum(np.abs(lb * grid.s))), 1e-300
        )
        ones_row = float(np.max(np.abs(laplace_beltrami(grid, np.ones(grid.ntheta)))))
        mode = np.cos(grid.theta)
        lb_mode = laplace_beltrami(grid, mode)
        eig = float(np.sum(lb_mode * mode * grid.s) / np.sum(mode * mode * grid.s))
        h = grid.htheta
        eig_exact = -(2.0 - 2.0 * np.cos(h)) / (radius * h) ** 2
        eig_err_discrete = abs(eig - eig_exact) / abs(eig_exact)
        eig_err_continuum = abs(eig + 1.0 / radius**2)
        row = {
            "nr": nr,
            "ntheta": ntheta,
            "green_residual": worst,
            "beltrami_conservation": conservation,
            "beltrami_row_sum": ones_row,
            "eigenvalue": eig,
            "eigenvalue_closed_form_error": eig_err_discrete,
            "eigenvalue_continuum_error": eig_err_continuum,
        }
        ok = (
            worst < 1e-12
            and conservation < 1e-13
            and ones_row == 0.0
            and eig_err_discrete < 1e-12
        )
        row["passed"] = ok
        rows.append(row)
        if not ok:
            passed = False
            if worst >= 1e-12:
                failures.append(
                    f"grid {nr}x{ntheta}: transmission identity residual {worst:.3e}"
                )
            else:
                failures.append(f"grid {nr}x{ntheta}: surface operator check failed")
    message = "all operator checks passed" if passed else "; ".join(failures)
    return OperatorCheckReport(passed=passed, rows=tuple(rows), message=message)


# ---------------------------------------------------------------------------
# config file parsing


def _parse_graph(text: str) -> MonotoneGraph:
    text = text.strip()
    name, args = _split_call(text)
    if name == "cubic":
        return MonotoneGraph.cubic()
    if name == "logarithmic":
        return MonotoneGraph.logarithmic()
    if name == "obstacle":
        if len(args) == 0:
            return MonotoneGraph.obstacle()
        if len(args) == 2:
            return MonotoneGraph.obstacle(args[0], args[1])
        raise ConfigError(f"obstacle takes 0 or 2 arguments, got {text!r}")
    if name == "zero":
        return MonotoneGraph.zero()
    if name == "linear":
        if len(args) != 1:
            raise ConfigError(f"linear takes exactly one slope, got {text!r}")
        return MonotoneGraph.linear(args[0])
    raise ConfigError(f"unknown graph {text!r}")


def _parse_pi(text: str) -> LipschitzPerturbation:
    name, args = _split_call(text.strip())
    if name == "neg_identity":
        return LipschitzPerturbation.neg_identity()
    if name == "scaled_neg_identity":
        if len(args) != 1:
            raise ConfigError(f"scaled_neg_identity takes one constant, got {text!r}")
        return LipschitzPerturbation.scaled_neg_identity(args[0])
    if name == "zero":
        return LipschitzPerturbation.zero()
    raise ConfigError(f"unknown perturbation {text!r}")


def _split_call(text: str):
    if "(" not in text:
        return text, []
    if not text.endswith(")"):
        raise ConfigError(f"malformed potential descriptor {text!r}")
    name, rest = text.split("(", 1)
    body = rest[:-1].strip()
    if not body:
        return name.strip(), []
    try:
        args = [float(p) for p in body.split(",")]
    except ValueError:
        raise ConfigError(f"non-numeric argument in {text!r}") from None
    return name.strip(), args


def _parse_variant(section) -> ProblemVariant:
    kind = section.get("variant", "full").strip()
    eps = section.getfloat("eps", fallback=1.0)
    kappa = section.getfloat("kappa", fallback=1.0)
    tau = section.getfloat("tau", fallback=0.0)
    try:
        if kind == "full":
            return ProblemVariant.full_eps_kappa(eps, kappa, tau)
        if kind == "eps_limit":
            return ProblemVariant.eps_limit(eps)
        if kind == "kappa_limit":
            return ProblemVariant.kappa_limit(kappa)
        if kind == "double_limit":
            return ProblemVariant.double_limit()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown variant {kind!r}")


def load_config(path: str):
    """Parse an INI config into (RunConfig, sweep values, sweep family)."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    try:
        g = parser["grid"]
        t = parser["time"]
        p = parser["problem"]
        pot = parser["potentials"]
        data = parser["data"] if parser.has_section("data") else {}
    except KeyError as exc:
        raise ConfigError(f"missing config section {exc}") from None
    try:
        pair = PotentialPair(
            bulk_graph=_parse_graph(pot.get("bulk_graph", "cubic")),
            bulk_pi=_parse_pi(pot.get("bulk_pi", "neg_identity")),
            surf_graph=_parse_graph(pot.get("surf_graph", "cubic")),
            surf_pi=_parse_pi(pot.get("surf_pi", "neg_identity")),
            rho=pot.getfloat("rho", fallback=1.0),
            c0=pot.getfloat("c0", fallback=1.0),
            cbeta=pot.getfloat("cbeta", fallback=None),
        )
        config = RunConfig(
            nr=g.getint("nr"),
            ntheta=g.getint("ntheta"),
            radius=g.getfloat("radius", fallback=1.0),
            dt=t.getfloat("dt"),
            T=t.getfloat("T"),
            lam=p.getfloat("lambda", fallback=0.1),
            variant=_parse_variant(p),
            potentials=pair,
            u0=data.get("u0", "0"),
            u0_gamma=data.get("u0_gamma", None) or None,
            f=data.get("f", "0"),
            f_gamma=data.get("f_gamma", "0"),
        )
        for name in ("u0", "u0_gamma", "f", "f_gamma"):
            value = getattr(config, name)
            if value is not None:
                forcing.parse(str(value))
    except (ValueError, TypeError, forcing.ForcingSyntaxError) as exc:
        raise ConfigError(f"bad configuration: {exc}") from None

    sweep_values = []
    sweep_family = "kappa"
    if parser.has_section("sweep"):
        raw = parser["sweep"].get("values", "")
        sweep_family = parser["sweep"].get("family", "kappa").strip()
        try:
            sweep_values = [float(v) for v in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"bad sweep values {raw!r}") from None
    return config, sweep_values, sweep_family
