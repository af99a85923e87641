"""Special-function evaluation and the physical constants used everywhere else.

All interaction laws of the fractional vortex model are expressed through a
handful of Gamma-function combinations.  They are collected here, together
with a self-contained Gamma implementation, so that the rest of the package
has a single source of truth for signs and normalizations.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FracParams",
    "gamma_fn",
    "riesz_constant",
    "interaction_constant",
    "pair_energy_constant",
    "perp",
    "riesz_point_gradient_perp",
]


# Lanczos approximation, g = 7, 9 coefficients.  Relative error is a few
# 1e-14 over the positive reals, comfortably below the 1e-12 contract.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)


@dataclass(frozen=True)
class FracParams:
    """Dimension, fractional order and nonlinearity exponent.

    Parameters
    ----------
    s : float
        Fractional order of the inverse Laplacian, 0 < s < 1.
    gamma : float, optional
        Nonlinearity exponent of the plasma problem.  Only required by the
        plasma/ansatz layers; when given in dimension 2 it must satisfy
        1 < gamma < (2+2s)/(2-2s) and gamma != 1/(1-s).
    n : int
        Spatial dimension, >= 2.  Only n = 2 is exercised by the test
        suite; the constants below are valid for general n.
    """

    s: float
    gamma: float | None = None
    n: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"dimension n must be >= 2, got {self.n}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"fractional order s must lie in (0, 1), got {self.s}")

    @property
    def gamma_max(self) -> float:
        """Upper admissibility limit (n+2s)/(n-2s) for the exponent."""
        return (self.n + 2 * self.s) / (self.n - 2 * self.s)

    def require_plasma(self) -> float:
        """Return gamma after checking the plasma admissibility window."""
        g = self.gamma
        if g is None:
            raise ValueError("gamma is required for plasma/ansatz computations")
        if not 1.0 < g < self.gamma_max:
            raise ValueError(
                f"gamma={g} outside the admissible window (1, {self.gamma_max:g}) "
                f"for s={self.s}, n={self.n}"
            )
        return g

    def require_mass_exponent(self) -> float:
        """Exponent 2*(1 - s*gamma/(gamma-1)) of the per-vortex scale.

        Degenerates to 0 exactly at gamma = 1/(1-s), where the vortex scale
        can no longer be matched to an intensity; that value is rejected.
        """
        g = self.require_plasma()
        expo = 2.0 * (1.0 - self.s * g / (g - 1.0))
        if abs(expo) < 1e-12:
            raise ValueError(
                f"gamma={g} equals 1/(1-s) for s={self.s}; the scale/intensity "
                "relation is degenerate there"
            )
        return expo


def gamma_fn(x):
    """Euler Gamma function on the positive axis (Lanczos, g=7, 9 terms).

    Accepts scalars or arrays.  Values below 0.5 are routed through the
    reflection formula.  Raises ``ValueError`` for non-positive input.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("gamma_fn requires finite positive arguments")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)

    out = np.empty_like(x)
    small = x < 0.5
    # reflection: Gamma(x) = pi / (sin(pi x) * Gamma(1 - x))
    if np.any(small):
        out[small] = np.pi / (np.sin(np.pi * x[small]) * _lanczos(1.0 - x[small]))
    out[~small] = _lanczos(x[~small])
    return out[0] if scalar else out


def _lanczos(x):
    """Lanczos core, valid for x >= 0.5."""
    z = x - 1.0
    series = np.full_like(z, _LANCZOS_COEFFS[0])
    for i in range(1, len(_LANCZOS_COEFFS)):
        series += _LANCZOS_COEFFS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return np.sqrt(2.0 * np.pi) * t ** (z + 0.5) * np.exp(-t) * series


def riesz_constant(params: FracParams) -> float:
    """Normalization of the Riesz kernel |x|^{-(n-2s)} inverting (-Lap)^s.

    c_{n,s} = pi^{-n/2} 2^{-2s} Gamma((n-2s)/2) / Gamma(s), valid for
    0 < s < min(1, n/2).
    """
    n, s = params.n, params.s
    if not 0.0 < s < min(1.0, n / 2.0):
        raise ValueError(f"riesz_constant requires 0 < s < min(1, n/2), got s={s}")
    return float(
        np.pi ** (-n / 2.0) * 2.0 ** (-2.0 * s) * gamma_fn((n - 2.0 * s) / 2.0) / gamma_fn(s)
    )


def interaction_constant(s: float) -> float:
    """Strength K(s) of the pairwise point-vortex interaction.

    K(s) = Gamma(2-s) / (2^{2s-1} pi Gamma(s)), continuous at the Euler
    limit with K(1) = 1/(2 pi).  Computed from Gammas directly; the
    equivalent form (2-2s) * c_{2,s} cancels badly near s = 1 and is kept
    as a unit test only.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError(f"interaction_constant requires 0 < s <= 1, got s={s}")
    return float(gamma_fn(2.0 - s) / (2.0 ** (2.0 * s - 1.0) * np.pi * gamma_fn(s)))


def pair_energy_constant(s: float) -> float:
    """Coefficient of the unordered pairwise interaction energy.

    Equals Gamma(1-s) / (2^{2s} pi Gamma(s)) = K(s) / (2-2s).  With this
    normalization the gradient of sum_{i<j} m_i m_j |b_i-b_j|^{2s-2}
    reproduces the point-vortex force field exactly, which is the property
    the equilibrium functionals rely on.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"pair_energy_constant requires 0 < s < 1, got s={s}")
    return float(gamma_fn(1.0 - s) / (2.0 ** (2.0 * s) * np.pi * gamma_fn(s)))


def perp(v):
    """Perpendicular rotation (a1, a2) -> (a2, -a1), applied along the last axis."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = v[..., 1]
    out[..., 1] = -v[..., 0]
    return out


def riesz_point_gradient_perp(s: float, z):
    """Perp-gradient of the Riesz kernel G_s at displacement z != 0.

    Returns grad^perp G_s(z) = -K(s) z^perp / |z|^{4-2s}; summing
    m_i * riesz_point_gradient_perp(s, x - xi_i) over vortices gives the
    velocity field they induce at x.
    """
    z = np.asarray(z, dtype=float)
    r2 = np.sum(z * z, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("riesz_point_gradient_perp is singular at z = 0")
    scale = -interaction_constant(s) * r2 ** (-(4.0 - 2.0 * s) / 2.0)
    return scale[..., None] * perp(z) if z.ndim > 1 else scale * perp(z)
