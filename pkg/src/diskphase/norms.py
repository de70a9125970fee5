"""Discrete norms, time accumulators, and the free energy.

Spatial norms are quadrature sums against the finite-volume measures (cell
volumes w in the bulk, face lengths s on the boundary circle).  The dual
norm on the boundary inverts the surface Laplacian on the zero-mean part and
treats the mean separately, mirroring the continuous duality pairing.

Time accumulators fold per-step scalars/fields into max-in-time and
L2-in-time statistics and running convolutions; merging two accumulators is
exactly equivalent to feeding one accumulator both streams.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import Grid
from .operators import (
    dirichlet_form,
    inverse_surface_laplacian,
    surface_dirichlet_form,
    surface_mean,
)
from .potentials import PotentialPair


def l2_bulk(grid: Grid, u: np.ndarray) -> float:
    u = grid.check_bulk(u, "u")
    return float(np.sqrt(np.sum(u * u * grid.w[:, None])))


def l2_surface(grid: Grid, z: np.ndarray) -> float:
    z = grid.check_surface(z, "z")
    return float(np.sqrt(np.sum(z * z * grid.s)))


def h1_bulk(grid: Grid, u: np.ndarray, u_gamma: np.ndarray) -> float:
    """Full H1 norm: L2 part plus the Dirichlet form (with boundary trace)."""
    return float(
        np.sqrt(l2_bulk(grid, u) ** 2 + dirichlet_form(grid, u, u_gamma, u, u_gamma))
    )


def h1_surface(grid: Grid, z: np.ndarray) -> float:
    return float(np.sqrt(l2_surface(grid, z) ** 2 + surface_dirichlet_form(grid, z, z)))


def vdual_surface(grid: Grid, z: np.ndarray) -> float:
    """Dual norm on the boundary circle.

    The zero-mean part is paired against the solution of the inverse surface
    Laplacian; the mean contributes |Gamma| * mean^2.  Always nonnegative.
    """
    z = grid.check_surface(z, "z")
    mean = surface_mean(grid, z)
    z0 = z - mean
    y = inverse_surface_laplacian(grid, z0)
    perimeter = float(np.sum(grid.s))
    val = float(np.sum(z0 * y * grid.s)) + perimeter * mean**2
    return float(np.sqrt(max(val, 0.0)))


def energy(grid: Grid, state, pair: PotentialPair, kappa: float, lam: float) -> float:
    """Regularized free energy of a state.

    E = 1/2 a_h(u,u) + sum_w (bhat_lam + pihat)(u)
        + kappa/2 * |grad_Gamma u_Gamma|^2 + sum_s (bhat_Gamma,lam + pihat_Gamma)(u_Gamma)
    """
    u, ug = state.u, state.u_gamma
    bulk_density = pair.bulk_graph.moreau(lam, u) + pair.bulk_pi.pihat(u)
    surf_density = pair.surf_graph.moreau(lam, ug) + pair.surf_pi.pihat(ug)
    return float(
        0.5 * dirichlet_form(grid, u, ug, u, ug)
        + np.sum(bulk_density * grid.w[:, None])
        + 0.5 * kappa * surface_dirichlet_form(grid, ug, ug)
        + np.sum(surf_density * grid.s)
    )


@dataclass
class NormAccumulator:
    """Folds a stream of per-step values into time statistics.

    record_max     -> max over the stream            (L-infinity in time)
    record_square  -> sqrt(sum dt * value^2)         (L2 in time)
    record_convolution -> running sum dt * field     ((1 * g) at the last time)

    Merging accumulators with `merge` commutes with splitting the stream.
    """

    dt: float
    maxima: dict = field(default_factory=dict)
    squares: dict = field(default_factory=dict)
    convolutions: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")

    def record_max(self, name: str, value: float):
        value = float(value)
        if name not in self.maxima or value > self.maxima[name]:
            self.maxima[name] = value

    def record_square(self, name: str, value: float):
        self.squares[name] = self.squares.get(name, 0.0) + self.dt * float(value) ** 2

    def record_convolution(self, name: str, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if name in self.convolutions:
            self.convolutions[name] = self.convolutions[name] + self.dt * values
        else:
            self.convolutions[name] = self.dt * values

    def max(self, name: str) -> float:
        return self.maxima[name]

    def l2(self, name: str) -> float:
        return float(np.sqrt(self.squares[name]))

    def convolution(self, name: str) -> np.ndarray:
        return self.convolutions[name]


def accumulate(acc: NormAccumulator, kind: str, name: str, value):
    """Dispatching front end: kind is 'max', 'square', or 'convolution'."""
    if kind == "max":
        acc.record_max(name, value)
    elif kind == "square":
        acc.record_square(name, value)
    elif kind == "convolution":
        acc.record_convolution(name, value)
    else:
        raise ValueError(f"unknown accumulation kind {kind!r}")


def finalize(acc: NormAccumulator) -> dict:
    """Collapse to finished statistics: maxima as-is, squares rooted,
    convolutions as arrays."""
    out = {}
    for name, v in acc.maxima.items():
        out[f"max:{name}"] = v
    for name in acc.squares:
        out[f"l2:{name}"] = acc.l2(name)
    for name, v in acc.convolutions.items():
        out[f"conv:{name}"] = v
    return out


def merge(a: NormAccumulator, b: NormAccumulator) -> NormAccumulator:
    """Combine two accumulators fed from disjoint parts of one stream."""
    if a.dt != b.dt:
        raise ValueError("cannot merge accumulators with different dt")
    out = NormAccumulator(dt=a.dt)
    out.maxima = dict(a.maxima)
    for name, v in b.maxima.items():
        if name not in out.maxima or v > out.maxima[name]:
            out.maxima[name] = v
    out.squares = dict(a.squares)
    for name, v in b.squares.items():
        out.squares[name] = out.squares.get(name, 0.0) + v
    out.convolutions = {k: np.copy(v) for k, v in a.convolutions.items()}
    for name, v in b.convolutions.items():
        if name in out.convolutions:
            out.convolutions[name] = out.convolutions[name] + v
        else:
            out.convolutions[name] = np.copy(v)
    return out
