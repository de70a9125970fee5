"""Nonlinearity catalog: maximal monotone graphs with Yosida machinery.

The graphs beta, beta_Gamma come from double-well potentials; each carries a
convex potential bhat with bhat(0) = 0 and 0 in beta(0).  Singular and
multivalued graphs (logarithmic, obstacle) are only ever used through their
resolvents and Yosida approximations, which are total on the real line.

All evaluators are vectorized over numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

_RESOLVENT_TOL = 1e-14


class AssumptionViolation(ValueError):
    """A configured potential pair fails a structural assumption."""


@dataclass(frozen=True)
class MonotoneGraph:
    """One of the catalog graphs: cubic, logarithmic, obstacle, zero, linear.

    `lo`/`hi` bound the obstacle interval; `m` is the linear slope.
    """

    kind: str
    lo: float = -1.0
    hi: float = 1.0
    m: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cubic", "logarithmic", "obstacle", "zero", "linear"):
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.kind == "obstacle" and not self.lo < 0.0 < self.hi:
            raise ValueError("obstacle interval must contain 0 in its interior")
        if self.kind == "linear" and self.m < 0.0:
            raise ValueError("linear graph slope must be nonnegative")

    # -- constructors -------------------------------------------------------

    @classmethod
    def cubic(cls) -> "MonotoneGraph":
        return cls("cubic")

    @classmethod
    def logarithmic(cls) -> "MonotoneGraph":
        return cls("logarithmic")

    @classmethod
    def obstacle(cls, lo: float = -1.0, hi: float = 1.0) -> "MonotoneGraph":
        return cls("obstacle", lo=lo, hi=hi)

    @classmethod
    def zero(cls) -> "MonotoneGraph":
        return cls("zero")

    @classmethod
    def linear(cls, m: float) -> "MonotoneGraph":
        return cls("linear", m=m)

    # -- structure ----------------------------------------------------------

    @property
    def domain(self) -> tuple[float, float]:
        """Effective domain of the graph (closed interval, possibly infinite)."""
        if self.kind == "logarithmic":
            return (-1.0, 1.0)
        if self.kind == "obstacle":
            return (self.lo, self.hi)
        return (-np.inf, np.inf)

    def minimal_section(self, r):
        """beta-degree-zero: the element of beta(r) of minimal modulus."""
        r = np.asarray(r, dtype=float)
        if self.kind == "cubic":
            return r**3
        if self.kind == "logarithmic":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.log((1.0 + r) / (1.0 - r))
            return np.where(np.abs(r) < 1.0, out, np.sign(r) * np.inf)
        if self.kind == "obstacle":
            out = np.zeros_like(r)
            return np.where((r >= self.lo) & (r <= self.hi), out, np.nan)
        if self.kind == "linear":
            return self.m * r
        return np.zeros_like(r)

    def bhat(self, r):
        """Convex potential with bhat(0) = 0 (infinite outside the domain)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "cubic":
            return 0.25 * r**4
        if self.kind == "logarithmic":
            with np.errstate(divide="ignore", invalid="ignore"):
                a = np.where(np.abs(1.0 + r) > 0, (1.0 + r) * np.log(np.maximum(1.0 + r, 1e-300)), 0.0)
                b = np.where(np.abs(1.0 - r) > 0, (1.0 - r) * np.log(np.maximum(1.0 - r, 1e-300)), 0.0)
            out = a + b
            out = np.where(np.abs(r) <= 1.0, out, np.inf)
            return np.where(np.abs(r) == 1.0, 2.0 * np.log(2.0), out)
        if self.kind == "obstacle":
            return np.where((r >= self.lo) & (r <= self.hi), 0.0, np.inf)
        if self.kind == "linear":
            return 0.5 * self.m * r**2
        return np.zeros_like(r)

    # -- resolvent / Yosida -------------------------------------------------

    def resolvent(self, lam: float, r):
        """J = (I + lam*beta)^{-1}(r); total on R for every lam > 0."""
        if not lam > 0.0:
            raise ValueError("lam must be positive")
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return r.copy()
        if self.kind == "linear":
            return r / (1.0 + lam * self.m)
        if self.kind == "obstacle":
            return np.clip(r, self.lo, self.hi)
        if self.kind == "cubic":
            return _cubic_resolvent(lam, r)
        return _log_resolvent(lam, r)

    def yosida(self, lam: float, r):
        """beta_lam(r) = (r - J_lam(r)) / lam; monotone, 1/lam-Lipschitz.

        Evaluated through the identity beta_lam(r) = beta(J_lam(r)), which
        avoids the catastrophic cancellation of (r - J)/lam at small lam.
        """
        if not lam > 0.0:
            raise ValueError("lam must be positive")
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "linear":
            return self.m * r / (1.0 + lam * self.m)
        if self.kind == "obstacle":
            # r - clip(r) is exact in floating point
            return (r - np.clip(r, self.lo, self.hi)) / lam
        if self.kind == "cubic":
            return self.resolvent(lam, r) ** 3
        # logarithmic: beta_lam(r) = 2 s with J = tanh(s) (see _log_arg)
        return 2.0 * _log_arg(lam, r)

    def yosida_slope(self, lam: float, r):
        """Derivative of beta_lam (right derivative at kinks), in [0, 1/lam]."""
        if not lam > 0.0:
            raise ValueError("lam must be positive")
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "linear":
            return np.full_like(r, self.m / (1.0 + lam * self.m))
        if self.kind == "obstacle":
            inside = (r >= self.lo) & (r < self.hi)
            return np.where(inside, 0.0, 1.0 / lam)
        j = self.resolvent(lam, r)
        if self.kind == "cubic":
            d = 3.0 * j**2
        else:
            # j can round to +-1 exactly deep in the saturated regime; the
            # slope limit there is 1/lam
            d = 2.0 / np.maximum(1.0 - j**2, 1e-300)
        return d / (1.0 + lam * d)

    def moreau(self, lam: float, r):
        """Moreau envelope bhat_lam(r) = |r - J|^2/(2 lam) + bhat(J).

        Since r - J = lam * beta_lam(r), the quadratic term equals
        lam * beta_lam(r)^2 / 2, which stays accurate for tiny lam.
        """
        r = np.asarray(r, dtype=float)
        j = self.resolvent(lam, r)
        y = self.yosida(lam, r)
        return 0.5 * lam * y**2 + self.bhat(j)


def _cubic_resolvent(lam: float, r: np.ndarray) -> np.ndarray:
    # real root of lam*J^3 + J = r by Cardano, then Newton polish
    p = 1.0 / lam
    t = np.abs(r) / (2.0 * lam)
    d = np.sqrt(t**2 + (p / 3.0) ** 3)
    cr = np.cbrt(t + d)
    j = cr - (p / 3.0) / cr
    j = np.sign(r) * j
    for _ in range(2):
        f = j + lam * j**3 - r
        j = j - f / (1.0 + 3.0 * lam * j**2)
    return j


def _log_arg(lam: float, r: np.ndarray) -> np.ndarray:
    # solve J + lam*ln((1+J)/(1-J)) = r on (-1, 1) through the substitution
    # J = tanh(s): tanh(s) + 2*lam*s = r is strictly monotone in s with
    # derivative >= 2*lam, so bracketed Newton always converges and the
    # near-boundary values of J come out to full precision; the raw s is
    # returned because beta_lam(r) = 2*s exactly
    shape = np.shape(r)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    hi = (np.abs(r) + 1.0) / (2.0 * lam)
    lo = -hi
    s = r / (1.0 + 2.0 * lam)
    tol = _RESOLVENT_TOL * (1.0 + np.abs(r))
    for _ in range(100):
        t = np.tanh(s)
        f = t + 2.0 * lam * s - r
        done = np.abs(f) <= tol
        if np.all(done):
            break
        hi = np.where(f > 0, s, hi)
        lo = np.where(f < 0, s, lo)
        cand = s - f / ((1.0 - t**2) + 2.0 * lam)
        bad = (cand <= lo) | (cand >= hi)
        s = np.where(done, s, np.where(bad, 0.5 * (lo + hi), cand))
    return s.reshape(shape)


def _log_resolvent(lam: float, r: np.ndarray) -> np.ndarray:
    return np.tanh(_log_arg(lam, r))


@dataclass(frozen=True)
class LipschitzPerturbation:
    """Lipschitz part of the double-well: -r, -2*c*r, or zero."""

    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("neg_identity", "scaled_neg_identity", "zero"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")

    @classmethod
    def neg_identity(cls) -> "LipschitzPerturbation":
        return cls("neg_identity")

    @classmethod
    def scaled_neg_identity(cls, c: float) -> "LipschitzPerturbation":
        return cls("scaled_neg_identity", c=c)

    @classmethod
    def zero(cls) -> "LipschitzPerturbation":
        return cls("zero")

    @property
    def lipschitz(self) -> float:
        if self.kind == "neg_identity":
            return 1.0
        if self.kind == "scaled_neg_identity":
            return 2.0 * self.c
        return 0.0

    @property
    def slope(self) -> float:
        return -self.lipschitz

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.slope * r

    def pihat(self, r):
        """Antiderivative with pihat(0) = 0."""
        r = np.asarray(r, dtype=float)
        return 0.5 * self.slope * r**2


@dataclass(frozen=True)
class PotentialPair:
    """Bulk and surface nonlinearities plus the domination constants.

    `rho` and `c0` are the constants of the dominance condition
    |beta(r)| <= rho*|beta_Gamma(r)| + c0; `cbeta` optionally enables the
    two-sided growth comparison.
    """

    bulk_graph: MonotoneGraph
    bulk_pi: LipschitzPerturbation
    surf_graph: MonotoneGraph
    surf_pi: LipschitzPerturbation
    rho: float = 1.0
    c0: float = 1.0
    cbeta: float | None = None

    def __post_init__(self):
        if self.rho < 1.0:
            raise ValueError("rho must be >= 1")
        if not self.c0 > 0.0:
            raise ValueError("c0 must be positive")
        if self.cbeta is not None and self.cbeta < 1.0:
            raise ValueError("cbeta must be >= 1")

    @property
    def common_domain(self) -> tuple[float, float]:
        blo, bhi = self.bulk_graph.domain
        slo, shi = self.surf_graph.domain
        return (max(blo, slo), min(bhi, shi))


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    message: str
    offending_r: float | None = None
    lhs: float | None = None
    rhs: float | None = None


_YOSIDA_CHECK_LAMBDAS = (1.0, 0.1, 0.01)


def validate_assumptions(
    pair: PotentialPair,
    sample_count: int = 1000,
    lo: float = -1.0,
    hi: float = 1.0,
) -> ValidationReport:
    """Check the dominance condition (and optional two-sided growth bounds)
    on a dense sample of [lo, hi], for the graphs and for their Yosida
    approximations at a few regularization levels.
    """
    dlo, dhi = pair.common_domain
    if lo < dlo or hi > dhi:
        raise ValueError(
            f"sample range [{lo}, {hi}] exceeds the common effective domain "
            f"[{dlo}, {dhi}]"
        )
    # keep samples strictly inside open domains where the section blows up
    eps = 1e-9 * (hi - lo)
    rs = np.linspace(lo + eps, hi - eps, sample_count)

    def check(bulk_vals, surf_vals, label):
        lhs = np.abs(bulk_vals)
        rhs = pair.rho * np.abs(surf_vals) + pair.c0
        bad = lhs > rhs
        if np.any(bad):
            k = int(np.argmax(bad))
            return ValidationReport(
                False,
                f"dominance violated ({label}) at r={rs[k]:.6g}: "
                f"{lhs[k]:.6g} > {rhs[k]:.6g}",
                offending_r=float(rs[k]),
                lhs=float(lhs[k]),
                rhs=float(rhs[k]),
            )
        if pair.cbeta is not None:
            cb = pair.cbeta
            upper = cb * (np.abs(surf_vals) + 1.0)
            lower = np.abs(surf_vals) / cb - cb
            bad = (lhs > upper) | (lhs < lower)
            if np.any(bad):
                k = int(np.argmax(bad))
                return ValidationReport(
                    False,
                    f"two-sided growth bound violated ({label}) at r={rs[k]:.6g}",
                    offending_r=float(rs[k]),
                    lhs=float(lhs[k]),
                    rhs=float(upper[k]),
                )
        return None

    with np.errstate(all="ignore"):
        bulk0 = pair.bulk_graph.minimal_section(rs)
        surf0 = pair.surf_graph.minimal_section(rs)
    # obstacle sections are undefined outside [lo, hi]; NaN never triggers >
    fail = check(np.nan_to_num(bulk0, nan=0.0, posinf=np.inf, neginf=-np.inf),
                 np.nan_to_num(surf0, nan=0.0), "minimal sections")
    if fail is not None:
        return fail
    for lam in _YOSIDA_CHECK_LAMBDAS:
        fail = check(
            pair.bulk_graph.yosida(lam, rs),
            pair.surf_graph.yosida(lam, rs),
            f"Yosida, lam={lam}",
        )
        if fail is not None:
            return fail
    return ValidationReport(True, "all dominance checks passed")


# module-level aliases matching the operation names
def resolvent(graph: MonotoneGraph, lam: float, r):
    return graph.resolvent(lam, r)


def yosida(graph: MonotoneGraph, lam: float, r):
    return graph.yosida(lam, r)


def yosida_slope(graph: MonotoneGraph, lam: float, r):
    return graph.yosida_slope(lam, r)


def moreau(graph: MonotoneGraph, lam: float, r):
    return graph.moreau(lam, r)
