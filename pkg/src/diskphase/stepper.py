"""Implicit-Euler monolithic time steppers for the coupled system.

Four problem variants are supported:

  full         bulk Allen-Cahn + quasi-static bulk chemical potential +
               Cahn-Hilliard surface dynamics with surface diffusion kappa
               (optionally with viscous regularization tau > 0)
  eps_limit    the same with kappa = 0
  kappa_limit  no bulk chemical potential; surface Cahn-Hilliard with kappa
  double_limit no bulk chemical potential and kappa = 0

All spatial couplings go through the exact discrete transmission identities
of the operators module, which is what makes the surface mean conserved per
step to solver accuracy.  The monotone nonlinearities always enter through
their Yosida approximations at the configured regularization level.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forcing
from .geometry import Grid
from .linalg import NewtonReport
from .operators import laplace_beltrami, surface_mean
from .potentials import PotentialPair

_MEAN_DRIFT_TOL = 1e-10


class StepError(RuntimeError):
    """A time step failed (Newton breakdown or violated invariant)."""


class IncompatibleTraceError(ValueError):
    """u0 restricted to the boundary disagrees with u0_gamma."""


@dataclass(frozen=True)
class ProblemVariant:
    """Which limit of the coupled system is being stepped."""

    kind: str  # 'full' | 'eps_limit' | 'kappa_limit' | 'double_limit'
    eps: float = 1.0
    kappa: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if self.kind not in ("full", "eps_limit", "kappa_limit", "double_limit"):
            raise ValueError(f"unknown variant kind {self.kind!r}")
        if self.kind in ("full", "eps_limit") and not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.kind in ("full", "kappa_limit") and not 0.0 < self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.tau > 0.0 and self.kind != "full":
            raise ValueError("viscous regularization applies to the full variant only")

    @classmethod
    def full_eps_kappa(cls, eps: float, kappa: float, tau: float = 0.0):
        return cls("full", eps=eps, kappa=kappa, tau=tau)

    @classmethod
    def eps_limit(cls, eps: float):
        return cls("eps_limit", eps=eps, kappa=0.0)

    @classmethod
    def kappa_limit(cls, kappa: float):
        return cls("kappa_limit", eps=0.0, kappa=kappa)

    @classmethod
    def double_limit(cls):
        return cls("double_limit", eps=0.0, kappa=0.0)

    @property
    def has_bulk_mu(self) -> bool:
        return self.kind in ("full", "eps_limit")


@dataclass(frozen=True)
class CoupledState:
    """Full unknown vector at one time level."""

    t: float
    u: np.ndarray
    u_gamma: np.ndarray
    mu_gamma: np.ndarray
    mu: np.ndarray | None = None  # present only for variants with bulk mu


def _as_expression(value):
    if value is None or isinstance(value, forcing.Expression):
        return value
    return forcing.parse(str(value))


@dataclass(frozen=True)
class StepperConfig:
    """Time step, Yosida level, nonlinearities, data, solver knobs."""

    dt: float
    lam: float
    potentials: PotentialPair
    u0: forcing.Expression | str = "0"
    u0_gamma: forcing.Expression | str | None = None
    f: forcing.Expression | str = "0"
    f_gamma: forcing.Expression | str = "0"
    newton_tol: float = 1e-11
    newton_maxit: int = 30
    linear_tol: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.lam > 0.0:
            raise ValueError("lam must be positive")
        for name in ("u0", "u0_gamma", "f", "f_gamma"):
            object.__setattr__(self, name, _as_expression(getattr(self, name)))


class CoupledStepper:
    """Precomputed operators and Newton driver for one (grid, variant, cfg)."""

    def __init__(self, grid: Grid, variant: ProblemVariant, cfg: StepperConfig):
        self.grid = grid
        self.variant = variant
        self.cfg = cfg
        nc = grid.ncells
        nt = grid.ntheta
        self.nc, self.nt = nc, nt
        self.has_mu = variant.has_bulk_mu
        self.nun = 2 * nc + 2 * nt if self.has_mu else nc + 2 * nt

        self._rr, self._tt = np.meshgrid(grid.r, grid.theta, indexing="ij")
        self._lu = None
        self._build_matrices()
        self._build_linear_jacobian()

    # -- operator matrices ---------------------------------------------------

    def _build_matrices(self):
        g = self.grid
        nr, nt, nc = g.nr, g.ntheta, self.nc

        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(v)

        idx = np.arange(nc).reshape(nr, nt)
        w = g.w[:, None]

        # radial faces
        t_rad = g.rho[1:-1] * g.htheta / g.hr  # faces 1..nr-1
        for i in range(1, nr):
            t = t_rad[i - 1]
            lo, hi = idx[i - 1], idx[i]
            add(lo, hi, t / g.w[i - 1])
            add(lo, lo, -t / g.w[i - 1])
            add(hi, lo, t / g.w[i])
            add(hi, hi, -t / g.w[i])
        # angular faces (periodic)
        t_ang = g.hr / (g.r * g.htheta)
        for i in range(nr):
            t = t_ang[i] / g.w[i]
            me = idx[i]
            nxt = np.roll(idx[i], -1)
            add(me, nxt, t)
            add(me, me, -t)
            add(nxt, me, t)
            add(nxt, nxt, -t)
        t_out = g.radius * g.htheta / (g.hr / 2.0)
        add(idx[-1], idx[-1], -t_out / g.w[-1])

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate([np.broadcast_to(v, (nt,)) for v in vals])
        self.L_cells = sp.csr_matrix((vals, (rows, cols)), shape=(nc, nc))

        self.L_trace = sp.csr_matrix(
            (np.full(nt, t_out / g.w[-1]), (idx[-1], np.arange(nt))), shape=(nc, nt)
        )
        # normal derivative: (u_gamma - u_last)/(hr/2)
        two_over_hr = 2.0 / g.hr
        self.Dn_cells = sp.csr_matrix(
            (np.full(nt, -two_over_hr), (np.arange(nt), idx[-1])), shape=(nt, nc)
        )
        self.dn_trace_coeff = two_over_hr

        h2 = (g.radius * g.htheta) ** 2
        j = np.arange(nt)
        self.LB = sp.csr_matrix(
            (
                np.concatenate([np.full(nt, -2.0 / h2), np.full(nt, 1.0 / h2), np.full(nt, 1.0 / h2)]),
                (np.concatenate([j, j, j]), np.concatenate([j, (j + 1) % nt, (j - 1) % nt])),
            ),
            shape=(nt, nt),
        )

    def _build_linear_jacobian(self):
        v, cfg = self.variant, self.cfg
        nc, nt = self.nc, self.nt
        dt = cfg.dt
        I_c = sp.identity(nc, format="csr")
        I_t = sp.identity(nt, format="csr")
        Dn_t = self.dn_trace_coeff * I_t
        Z_ct = sp.csr_matrix((nc, nt))
        Z_tc = sp.csr_matrix((nt, nc))

        if self.has_mu:
            eps, kappa, tau = v.eps, v.kappa, v.tau
            # rows: [u | u_gamma | mu | mu_gamma]
            row_u = [I_c / dt - self.L_cells, -self.L_trace, -tau * I_c, Z_ct]
            row_ug = [Z_tc, I_t / dt, eps * self.Dn_cells, eps * Dn_t - self.LB]
            row_mu = [(tau / eps / dt) * I_c, Z_ct, -self.L_cells, -self.L_trace]
            row_mg = [-self.Dn_cells, -Dn_t - (tau / dt) * I_t + kappa * self.LB, Z_tc, I_t]
            blocks = [row_u, row_ug, row_mu, row_mg]
        else:
            kappa = v.kappa
            row_u = [I_c / dt - self.L_cells, -self.L_trace, Z_ct]
            row_ug = [Z_tc, I_t / dt, -self.LB]
            row_mg = [-self.Dn_cells, -Dn_t + kappa * self.LB, I_t]
            blocks = [row_u, row_ug, row_mg]
        self.J_linear = sp.bmat(blocks, format="csr")
        # ensure the nonlinear diagonal slots exist in the pattern
        self.J_linear = (self.J_linear + sp.identity(self.nun, format="csr") * 0.0).tocsr()
        # per-row operator scale: convergence is judged relative to it, since
        # rows of tiny inner cells carry 1/w factors that amplify roundoff
        # far above any fixed absolute tolerance
        self.row_scale = np.maximum(
            1.0, np.asarray(np.abs(self.J_linear).sum(axis=1)).ravel()
        )

    # -- state packing --------------------------------------------------------

    def pack(self, state: CoupledState) -> np.ndarray:
        parts = [state.u.ravel(), state.u_gamma]
        if self.has_mu:
            parts += [state.mu.ravel(), state.mu_gamma]
        else:
            parts += [state.mu_gamma]
        return np.concatenate(parts)

    def unpack(self, x: np.ndarray, t: float) -> CoupledState:
        nc, nt = self.nc, self.nt
        u = x[:nc].reshape(self.grid.bulk_shape).copy()
        ug = x[nc : nc + nt].copy()
        if self.has_mu:
            mu = x[nc + nt : 2 * nc + nt].reshape(self.grid.bulk_shape).copy()
            mg = x[2 * nc + nt :].copy()
            return CoupledState(t=t, u=u, u_gamma=ug, mu=mu, mu_gamma=mg)
        mg = x[nc + nt :].copy()
        return CoupledState(t=t, u=u, u_gamma=ug, mu=None, mu_gamma=mg)

    # -- data sampling ---------------------------------------------------------

    def sample_f(self, t: float) -> np.ndarray:
        out = forcing.evaluate_polar(self.cfg.f, self._rr, self._tt, t)
        return np.broadcast_to(np.asarray(out, dtype=float), self.grid.bulk_shape)

    def sample_f_gamma(self, t: float) -> np.ndarray:
        g = self.grid
        out = forcing.evaluate_polar(self.cfg.f_gamma, g.radius, g.theta, t)
        return np.broadcast_to(np.asarray(out, dtype=float), (g.ntheta,))

    # -- residual / Jacobian ----------------------------------------------------

    def residual(self, x: np.ndarray, prev: CoupledState) -> np.ndarray:
        v, cfg, g = self.variant, self.cfg, self.grid
        nc, nt = self.nc, self.nt
        dt, lam = cfg.dt, cfg.lam
        pot = cfg.potentials
        t_next = prev.t + dt

        u = x[:nc]
        ug = x[nc : nc + nt]
        if self.has_mu:
            mu = x[nc + nt : 2 * nc + nt]
            mg = x[2 * nc + nt :]
        else:
            mu = None
            mg = x[nc + nt :]

        up = prev.u.ravel()
        ugp = prev.u_gamma

        f = self.sample_f(t_next).ravel()
        fg = self.sample_f_gamma(t_next)

        lap_u = self.L_cells @ u + self.L_trace @ ug
        dn_u = self.Dn_cells @ u + self.dn_trace_coeff * ug
        lb_ug = self.LB @ ug
        lb_mg = self.LB @ mg

        beta_u = pot.bulk_graph.yosida(lam, u)
        beta_g = pot.surf_graph.yosida(lam, ug)

        r_u = (u - up) / dt - lap_u + beta_u + pot.bulk_pi(u) - f
        if self.has_mu:
            eps, kappa, tau = v.eps, v.kappa, v.tau
            r_u = r_u - tau * mu
            dn_mu = self.Dn_cells @ mu + self.dn_trace_coeff * mg
            r_ug = (ug - ugp) / dt + eps * dn_mu - lb_mg
            lap_mu = self.L_cells @ mu + self.L_trace @ mg
            r_mu = -lap_mu + (tau / eps) * (u - up) / dt
            r_mg = (
                mg
                - tau * (ug - ugp) / dt
                - dn_u
                + kappa * lb_ug
                - beta_g
                - pot.surf_pi(ug)
                + fg
            )
            return np.concatenate([r_u, r_ug, r_mu, r_mg])
        kappa = v.kappa
        r_ug = (ug - ugp) / dt - lb_mg
        r_mg = mg - dn_u + kappa * lb_ug - beta_g - pot.surf_pi(ug) + fg
        return np.concatenate([r_u, r_ug, r_mg])

    def jacobian(self, x: np.ndarray) -> sp.csr_matrix:
        cfg = self.cfg
        nc, nt = self.nc, self.nt
        pot, lam = cfg.potentials, cfg.lam
        u = x[:nc]
        ug = x[nc : nc + nt]
        d = np.zeros(self.nun)
        d[:nc] = pot.bulk_graph.yosida_slope(lam, u) + pot.bulk_pi.slope
        # the nonlinear surface terms sit in the constitutive rows' u_gamma
        # column, which is off the main diagonal; handled as a separate block
        surf = -(pot.surf_graph.yosida_slope(lam, ug) + pot.surf_pi.slope)
        jac = self.J_linear + sp.diags(d)
        off_rows = np.arange(self.nun - nt, self.nun)
        off_cols = np.arange(nc, nc + nt)
        jac = jac + sp.csr_matrix((surf, (off_rows, off_cols)), shape=jac.shape)
        return jac.tocsr()

    # -- stepping -----------------------------------------------------------------

    def initial_state(self) -> CoupledState:
        g, cfg = self.grid, self.cfg
        if cfg.u0 is None:
            raise ValueError("config has no initial-data expression u0")
        u = np.asarray(
            forcing.evaluate_polar(cfg.u0, self._rr, self._tt, 0.0), dtype=float
        )
        u = np.broadcast_to(u, g.bulk_shape).copy()
        trace = np.broadcast_to(
            np.asarray(forcing.evaluate_polar(cfg.u0, g.radius, g.theta, 0.0), dtype=float),
            (g.ntheta,),
        ).copy()
        if cfg.u0_gamma is not None:
            ug = np.broadcast_to(
                np.asarray(
                    forcing.evaluate_polar(cfg.u0_gamma, g.radius, g.theta, 0.0),
                    dtype=float,
                ),
                (g.ntheta,),
            ).copy()
            gap = float(np.max(np.abs(trace - ug)))
            if gap > 1e-12:
                raise IncompatibleTraceError(
                    f"u0 at the boundary differs from u0_gamma by {gap:.3e}"
                )
        else:
            ug = trace

        # close mu_gamma by the constitutive surface equation at t=0
        from .operators import normal_derivative  # local import avoids cycle at init

        pot, lam = cfg.potentials, cfg.lam
        mg = (
            normal_derivative(g, u, ug)
            - self.variant.kappa * laplace_beltrami(g, ug)
            + pot.surf_graph.yosida(lam, ug)
            + pot.surf_pi(ug)
            - self.sample_f_gamma(0.0)
        )
        mu = None
        if self.has_mu:
            # harmonic extension of mu_gamma into the bulk
            rhs = -(self.L_trace @ mg)
            mu_flat = spla.spsolve(self.L_cells.tocsc(), rhs)
            mu = mu_flat.reshape(g.bulk_shape)
        return CoupledState(t=0.0, u=u, u_gamma=ug, mu=mu, mu_gamma=mg)

    def _residual_measure(self, f: np.ndarray) -> float:
        """Convergence measure: per-row scaled max norm, except the surface
        evolution rows, which are held to the absolute tolerance because the
        per-step mass-drift bound rests on them."""
        nc, nt = self.nc, self.nt
        scaled = float(np.max(np.abs(f) / self.row_scale))
        surface = float(np.max(np.abs(f[nc : nc + nt])))
        return max(scaled, surface)

    def _factorize(self, x: np.ndarray):
        self._lu = spla.splu(self.jacobian(x).tocsc())

    def step(self, prev: CoupledState) -> tuple[CoupledState, NewtonReport]:
        """One implicit-Euler step by Newton iteration.

        The Jacobian factorization is reused across iterations and steps (the
        nonlinear diagonal drifts slowly at small dt) and rebuilt whenever the
        iteration stops contracting, so the accepted state always meets the
        full Newton tolerance.
        """
        cfg = self.cfg
        x = self.pack(prev)
        report = NewtonReport()
        f = self.residual(x, prev)
        fnorm = self._residual_measure(f)
        report.residual_norm = fnorm
        it = 0
        last_factor_it = -1
        while fnorm > cfg.newton_tol:
            if it >= cfg.newton_maxit:
                raise StepError(
                    f"Newton stalled at t={prev.t + cfg.dt:.6g} "
                    f"(residual {fnorm:.3e}); try a smaller dt or a larger lam"
                )
            it += 1
            if self._lu is None:
                self._factorize(x)
                last_factor_it = it
            dx = self._lu.solve(-f)
            report.linear_iterations += 1
            scale = 1.0
            accepted = False
            for _ in range(9):
                x_new = x + scale * dx
                f_new = self.residual(x_new, prev)
                fnorm_new = self._residual_measure(f_new)
                if fnorm_new < fnorm or fnorm_new <= cfg.newton_tol:
                    accepted = True
                    break
                scale *= 0.5
            if not accepted:
                if last_factor_it == it:
                    raise StepError(
                        f"Newton line search exhausted at t={prev.t + cfg.dt:.6g} "
                        f"(residual {fnorm:.3e}); try a smaller dt or a larger lam"
                    )
                self._factorize(x)
                last_factor_it = it
                continue
            slow = fnorm_new > 0.25 * fnorm
            x, f, fnorm = x_new, f_new, fnorm_new
            report.residual_norm = fnorm
            if slow and fnorm > cfg.newton_tol and last_factor_it != it:
                self._factorize(x)
                last_factor_it = it
        report.converged = True
        report.iterations = it
        state = self.unpack(x, prev.t + cfg.dt)
        drift = abs(surface_mean(self.grid, state.u_gamma) - surface_mean(self.grid, prev.u_gamma))
        if self.variant.tau == 0.0 and drift > _MEAN_DRIFT_TOL:
            raise StepError(
                f"surface mean drifted by {drift:.3e} in one step at t={state.t:.6g}"
            )
        return state, report

    def run(self, T: float, observers=(), initial: CoupledState | None = None):
        """March N = T/dt implicit-Euler steps; T/dt must be integral."""
        dt = self.cfg.dt
        n_steps = int(round(T / dt))
        if abs(n_steps * dt - T) > 1e-9 * max(1.0, abs(T)):
            raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
        state = self.initial_state() if initial is None else initial
        for obs in observers:
            obs(0, state)
        diagnostics = {"newton_iterations": [], "linear_iterations": []}
        for n in range(1, n_steps + 1):
            try:
                state, rep = self.step(state)
            except StepError as exc:
                raise StepError(f"step {n} failed at t={n * dt:.6g}: {exc}") from exc
            diagnostics["newton_iterations"].append(rep.iterations)
            diagnostics["linear_iterations"].append(rep.linear_iterations)
            for obs in observers:
                obs(n, state)
        return state, diagnostics


# -- module-level convenience wrappers ------------------------------------------


def initial_state(grid: Grid, cfg: StepperConfig, variant: ProblemVariant) -> CoupledState:
    return CoupledStepper(grid, variant, cfg).initial_state()


def assemble_residual(
    grid: Grid,
    variant: ProblemVariant,
    prev: CoupledState,
    guess: CoupledState,
    cfg: StepperConfig,
) -> np.ndarray:
    stepper = CoupledStepper(grid, variant, cfg)
    return stepper.residual(stepper.pack(guess), prev)


def assemble_jacobian(
    grid: Grid,
    variant: ProblemVariant,
    guess: CoupledState,
    cfg: StepperConfig,
) -> sp.csr_matrix:
    stepper = CoupledStepper(grid, variant, cfg)
    return stepper.jacobian(stepper.pack(guess))


def step(
    grid: Grid,
    variant: ProblemVariant,
    prev: CoupledState,
    cfg: StepperConfig,
) -> tuple[CoupledState, NewtonReport]:
    return CoupledStepper(grid, variant, cfg).step(prev)


def run(
    grid: Grid,
    variant: ProblemVariant,
    cfg: StepperConfig,
    T: float,
    observers=(),
):
    return CoupledStepper(grid, variant, cfg).run(T, observers=observers)
