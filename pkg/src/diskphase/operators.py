"""Discrete differential operators on the polar disk mesh.

Everything here is flux-form (finite volume), arranged so the discrete Green
identity

    sum_ij (Lap_h u)_ij v_ij w_ij + a_h(u, v) = sum_j (dnu u)_j vGamma_j s_j

holds exactly for all field quadruples.  The bulk-surface coupling is thus a
discrete transmission identity, not an approximation.

Transmissibilities:
  radial face at rho_i (between rings i-1 and i):   T = rho_i * htheta / hr
  angular face inside ring i:                       T = hr / (r_i * htheta)
  outer face (half-cell two-point difference):      T = R * htheta / (hr/2)
The rho_0 face has zero area and carries zero flux.
"""

import numpy as np

from .geometry import Grid


def _outer_transmissibility(grid: Grid) -> float:
    return grid.radius * grid.htheta / (grid.hr / 2.0)


def laplacian_bulk(
    grid: Grid,
    u: np.ndarray,
    u_gamma: np.ndarray,
    outer_flux_scale: float = 1.0,
) -> np.ndarray:
    """Flux-form bulk Laplacian with Dirichlet trace u_gamma at the boundary.

    `outer_flux_scale` deliberately corrupts the outer-face transmissibility;
    it exists only so exactness checks can demonstrate failure detection.
    """
    u = grid.check_bulk(u, "u")
    u_gamma = grid.check_surface(u_gamma, "u_gamma")
    out = np.zeros_like(u)

    # radial internal faces at rho_1 .. rho_{nr-1}
    t_rad = (grid.rho[1:-1] * grid.htheta / grid.hr)[:, None]
    flux = t_rad * (u[1:, :] - u[:-1, :])
    out[:-1, :] += flux
    out[1:, :] -= flux

    # outer Dirichlet face, two-point difference over the half cell
    t_out = _outer_transmissibility(grid) * outer_flux_scale
    out[-1, :] += t_out * (u_gamma - u[-1, :])

    # angular faces, periodic in j
    t_ang = (grid.hr / (grid.r * grid.htheta))[:, None]
    out += t_ang * (np.roll(u, -1, axis=1) - 2.0 * u + np.roll(u, 1, axis=1))

    out /= grid.w[:, None]
    return out


def dirichlet_form(
    grid: Grid,
    u: np.ndarray,
    u_gamma: np.ndarray,
    v: np.ndarray,
    v_gamma: np.ndarray,
) -> float:
    """Bulk Dirichlet form a_h(u, v) = sum over faces of T * delta_u * delta_v.

    Includes the outer faces with delta = trace - outermost cell; symmetric
    and positive semidefinite, with kernel the constants.
    """
    u = grid.check_bulk(u, "u")
    v = grid.check_bulk(v, "v")
    u_gamma = grid.check_surface(u_gamma, "u_gamma")
    v_gamma = grid.check_surface(v_gamma, "v_gamma")

    t_rad = (grid.rho[1:-1] * grid.htheta / grid.hr)[:, None]
    total = float(np.sum(t_rad * (u[1:, :] - u[:-1, :]) * (v[1:, :] - v[:-1, :])))

    t_out = _outer_transmissibility(grid)
    total += float(np.sum(t_out * (u_gamma - u[-1, :]) * (v_gamma - v[-1, :])))

    t_ang = (grid.hr / (grid.r * grid.htheta))[:, None]
    du = np.roll(u, -1, axis=1) - u
    dv = np.roll(v, -1, axis=1) - v
    total += float(np.sum(t_ang * du * dv))
    return total


def normal_derivative(grid: Grid, u: np.ndarray, u_gamma: np.ndarray) -> np.ndarray:
    """Outward normal derivative (u_gamma - outermost cell) / (hr/2).

    Flux-form companion of the outer-face term of `laplacian_bulk`, so the
    discrete Green identity is exact.
    """
    u = grid.check_bulk(u, "u")
    u_gamma = grid.check_surface(u_gamma, "u_gamma")
    return (u_gamma - u[-1, :]) / (grid.hr / 2.0)


def laplace_beltrami(grid: Grid, z: np.ndarray) -> np.ndarray:
    """Periodic second difference on the boundary circle, /(R*htheta)^2."""
    z = grid.check_surface(z, "z")
    h2 = (grid.radius * grid.htheta) ** 2
    return (np.roll(z, -1) - 2.0 * z + np.roll(z, 1)) / h2


def surface_dirichlet_form(grid: Grid, z: np.ndarray, w: np.ndarray) -> float:
    """Surface Dirichlet form, arranged so that

    sum_j (laplace_beltrami z)_j w_j s_j == -surface_dirichlet_form(z, w)

    exactly for all z, w.
    """
    z = grid.check_surface(z, "z")
    w = grid.check_surface(w, "w")
    dz = np.roll(z, -1) - z
    dw = np.roll(w, -1) - w
    return float(np.sum(dz * dw) / (grid.radius * grid.htheta))


def surface_mean(grid: Grid, z: np.ndarray) -> float:
    """Face-length-weighted mean (sum z_j s_j) / (2 pi R)."""
    z = grid.check_surface(z, "z")
    return float(np.sum(z * grid.s) / np.sum(grid.s))


def inverse_surface_laplacian(grid: Grid, z: np.ndarray) -> np.ndarray:
    """Solve -laplace_beltrami(y) = z with zero mean, for zero-mean z.

    The periodic tridiagonal system is solved directly in O(ntheta) by two
    cumulative sums over the face differences g_j = y_{j+1} - y_j, with the
    constant null vector deflated by the zero-mean gauge.
    """
    z = grid.check_surface(z, "z")
    scale = float(np.max(np.abs(z)))
    mean = surface_mean(grid, z)
    if abs(mean) > 1e-12 * max(scale, 1e-300):
        raise ValueError(
            f"inverse_surface_laplacian needs zero-mean input, got mean {mean:.3e}"
        )
    if scale == 0.0:
        return np.zeros_like(z)
    c = 1.0 / (grid.radius * grid.htheta) ** 2
    # -c (g_j - g_{j-1}) = z_j  =>  g_j = g_{n-1} - S_j / c, S_j = sum_{m<=j} z_m
    partial = np.cumsum(z)
    g_last = float(np.sum(partial)) / (grid.ntheta * c)
    g = g_last - partial / c
    y = np.empty_like(z)
    y[0] = 0.0
    y[1:] = np.cumsum(g[:-1])
    y -= surface_mean(grid, y)
    return y


def green_identity_residual(
    grid: Grid,
    u: np.ndarray,
    u_gamma: np.ndarray,
    v: np.ndarray,
    v_gamma: np.ndarray,
    outer_flux_scale: float = 1.0,
) -> float:
    """Relative residual of the discrete Green identity for one quadruple."""
    lap = laplacian_bulk(grid, u, u_gamma, outer_flux_scale=outer_flux_scale)
    vol = float(np.sum(lap * v * grid.w[:, None]))
    form = dirichlet_form(grid, u, u_gamma, v, v_gamma)
    bnd = float(np.sum(normal_derivative(grid, u, u_gamma) * v_gamma * grid.s))
    scale = max(abs(vol), abs(form), abs(bnd), 1e-300)
    return abs(vol + form - bnd) / scale
