"""Polar finite-volume mesh of a disk and field sampling.

The mesh is cell-centered in radius (no node at the origin, so the polar
Laplacian needs no coordinate-singularity treatment) and uniform periodic in
angle.  Angle samples are cell-centered for both bulk cells and boundary
faces, so boundary faces align index-wise with the outermost ring of cells.

Bulk fields are (nr, ntheta) arrays indexed (i, j) with i the radial ring and
j the angular sector; surface fields are (ntheta,) arrays on boundary faces.
"""

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Unusable mesh parameters."""


class SampleError(ValueError):
    """A sampled value was not finite."""


@dataclass(frozen=True)
class Grid:
    """Polar finite-volume layout of the disk of radius `radius`.

    Attributes
    ----------
    nr, ntheta : cell counts (radial, angular); ntheta must be even.
    hr, htheta : mesh widths, hr = radius/nr, htheta = 2*pi/ntheta.
    r          : (nr,) cell-center radii, r[i] = (i + 1/2) * hr.
    rho        : (nr+1,) radial face radii, rho[i] = i * hr (rho[0] = 0).
    theta      : (ntheta,) cell-center angles, theta[j] = (j + 1/2) * htheta.
    w          : (nr,) cell volume per ring, w[i] = r[i] * hr * htheta
                 (all cells of a ring share the same volume).
    s          : (ntheta,) boundary face lengths, all equal to radius*htheta.
    """

    nr: int
    ntheta: int
    radius: float
    hr: float = field(init=False)
    htheta: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)
    rho: np.ndarray = field(init=False, repr=False)
    theta: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.nr < 2:
            raise GridError(f"nr must be >= 2, got {self.nr}")
        if self.ntheta < 4 or self.ntheta % 2 != 0:
            raise GridError(f"ntheta must be even and >= 4, got {self.ntheta}")
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise GridError(f"radius must be positive, got {self.radius}")
        hr = self.radius / self.nr
        htheta = 2.0 * np.pi / self.ntheta
        object.__setattr__(self, "hr", hr)
        object.__setattr__(self, "htheta", htheta)
        r = (np.arange(self.nr) + 0.5) * hr
        rho = np.arange(self.nr + 1) * hr
        theta = (np.arange(self.ntheta) + 0.5) * htheta
        for name, arr in (("r", r), ("rho", rho), ("theta", theta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        w = r * hr * htheta
        s = np.full(self.ntheta, self.radius * htheta)
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "s", s)

    @property
    def ncells(self) -> int:
        return self.nr * self.ntheta

    @property
    def bulk_shape(self) -> tuple[int, int]:
        return (self.nr, self.ntheta)

    def check_bulk(self, u: np.ndarray, name: str = "bulk field") -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != self.bulk_shape:
            raise ValueError(
                f"{name} has shape {u.shape}, expected {self.bulk_shape}"
            )
        return u

    def check_surface(self, z: np.ndarray, name: str = "surface field") -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.ntheta,):
            raise ValueError(
                f"{name} has shape {z.shape}, expected ({self.ntheta},)"
            )
        return z


def build_grid(nr: int, ntheta: int, radius: float) -> Grid:
    """Construct the polar finite-volume mesh; rejects unusable parameters."""
    return Grid(nr=int(nr), ntheta=int(ntheta), radius=float(radius))


def sample_bulk(grid: Grid, g) -> np.ndarray:
    """Sample g(r, theta) at all cell centers; rejects non-finite values."""
    rr, tt = np.meshgrid(grid.r, grid.theta, indexing="ij")
    values = np.asarray(g(rr, tt), dtype=float)
    values = np.broadcast_to(values, grid.bulk_shape).copy()
    if not np.all(np.isfinite(values)):
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise SampleError(
            f"non-finite bulk sample at cell (i={i}, j={j}), "
            f"r={grid.r[i]:.6g}, theta={grid.theta[j]:.6g}"
        )
    return values


def sample_surface(grid: Grid, g) -> np.ndarray:
    """Sample g(theta) at boundary face centers; rejects non-finite values."""
    values = np.asarray(g(grid.theta), dtype=float)
    values = np.broadcast_to(values, (grid.ntheta,)).copy()
    if not np.all(np.isfinite(values)):
        j = int(np.flatnonzero(~np.isfinite(values))[0])
        raise SampleError(
            f"non-finite surface sample at face j={j}, theta={grid.theta[j]:.6g}"
        )
    return values
