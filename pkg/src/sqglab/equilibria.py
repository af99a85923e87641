"""Relative equilibria of the fractional point-vortex system.

Covers the residuals of the traveling and rotating balance equations, the
closed-form vortex pair and rotating polygon, the variational energies whose
critical points they are, symmetric vortex/anti-vortex arrays, a damped
gauged Newton solver with finite-difference Jacobians, spectral
nondegeneracy certificates, and natural-parameter continuation in the
fractional order s.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import subspace_angles

from .constants import gamma_fn, interaction_constant, pair_energy_constant, perp
from .pointvortex import VortexConfig, velocity_field

__all__ = [
    "EquilibriumSolution",
    "SymmetricArrayParams",
    "Certificate",
    "NewtonResult",
    "ContinuationBranch",
    "traveling_residual",
    "rotating_residual",
    "vortex_pair",
    "rotating_polygon",
    "traveling_energy",
    "traveling_energy_grad",
    "rotating_energy",
    "rotating_energy_grad",
    "balancing_forces",
    "fit_array_speed",
    "symmetric_array_residual",
    "solve_newton",
    "solve_symmetric_array",
    "solve_rotating",
    "six_vortex_seed",
    "translation_generator",
    "rotation_generator",
    "hessian_of_traveling_energy",
    "hessian_of_rotating_energy",
    "reduced_jacobian",
    "nondegeneracy_spectrum",
    "continue_in_s",
    "solution_to_dict",
]

# A six-point symmetric traveling array known to exist at s = 1/2: three
# vortices of intensity +1 at p_1, conj(p_1), p_3 with p_3 on the real axis,
# mirrored by three anti-vortices q_i = -conj(p_i).  Coordinates are a
# published 3-digit numerical solution; Newton refinement lands within
# 2e-4 of them.
SIX_VORTEX_PAIR_SEED = (-1.026, 0.563)
SIX_VORTEX_AXIS_SEED = 0.368


# ---------------------------------------------------------------------------
# residuals and closed forms


def traveling_residual(config: VortexConfig, c: float) -> np.ndarray:
    """Residual of the traveling balance, flattened to length 2k.

    Block j is c*e2 - K(s) sum_{i!=j} m_i (b_i-b_j)^perp / |b_i-b_j|^{4-2s};
    a configuration translating rigidly with speed c along e2 makes every
    block vanish.
    """
    res = -velocity_field(config)
    res[:, 1] += c
    return res.ravel()


def rotating_residual(config: VortexConfig, alpha: float) -> np.ndarray:
    """Residual of the rigid-rotation balance, flattened to length 2k.

    Block j is alpha*b_j + K(s) sum_{i!=j} m_i (b_i-b_j) / |b_i-b_j|^{4-2s}.
    """
    res = alpha * config.positions - perp(velocity_field(config))
    return res.ravel()


def pair_speed(d: float, m: float, s: float) -> float:
    """Closed-form speed -Gamma(2-s) m / (4 pi Gamma(s) d^{3-2s}) of the pair."""
    if d <= 0.0:
        raise ValueError("pair separation d must be positive")
    return float(-gamma_fn(2.0 - s) * m / (4.0 * np.pi * gamma_fn(s) * d ** (3.0 - 2.0 * s)))


def vortex_pair(d: float, m: float, s: float) -> "EquilibriumSolution":
    """Traveling vortex/anti-vortex pair at (+d, 0), (-d, 0).

    Intensities are (m, -m) and the speed is the closed form of
    ``pair_speed``.  The residual norm of the returned solution is machine
    small by construction.  The solution carries its symmetric-array
    reduction (a single real-axis point), which makes it continuable in s.
    """
    c = pair_speed(d, m, s)
    config = VortexConfig([[d, 0.0], [-d, 0.0]], [m, -m], s)
    res = float(np.abs(traveling_residual(config, c)).max())
    params = SymmetricArrayParams(
        pair_points=np.zeros((0, 2)), axis_points=np.array([d]), c=c, s=s, intensity=m
    )
    return EquilibriumSolution(
        config=config,
        motion_type="traveling",
        motion_value=c,
        residual_norm=res,
        array_params=params,
    )


def polygon_rate(k: int, rho: float, m: float, s: float) -> float:
    """Angular velocity of the regular k-gon of equal intensities.

    alpha = m rho^{2s-4} Gamma(2-s)/(2^{s+1} pi Gamma(s))
            * sum_{l=1}^{k-1} (1 - cos(2 pi l / k))^{-(1-s)}.
    The rho exponent 2s-4 is the one consistent with the rotating balance
    (dimensional analysis of the force law); tests exercise rho = 1.
    """
    if k < 2:
        raise ValueError("polygon needs k >= 2 vertices")
    if rho <= 0.0:
        raise ValueError("polygon radius rho must be positive")
    angsum = sum((1.0 - np.cos(2.0 * np.pi * l / k)) ** (-(1.0 - s)) for l in range(1, k))
    return float(
        m
        * rho ** (2.0 * s - 4.0)
        * gamma_fn(2.0 - s)
        / (2.0 ** (s + 1.0) * np.pi * gamma_fn(s))
        * angsum
    )


def rotating_polygon(k: int, rho: float, m: float, s: float) -> "EquilibriumSolution":
    """Rigidly rotating regular k-gon of radius rho and equal intensities m."""
    alpha = polygon_rate(k, rho, m, s)
    angles = 2.0 * np.pi * np.arange(k) / k
    config = VortexConfig(
        np.column_stack([rho * np.cos(angles), rho * np.sin(angles)]), np.full(k, float(m)), s
    )
    res = float(np.abs(rotating_residual(config, alpha)).max())
    return EquilibriumSolution(
        config=config, motion_type="rotating", motion_value=alpha, residual_norm=res
    )


# ---------------------------------------------------------------------------
# variational energies


def _interaction_energy(config: VortexConfig) -> float:
    pos, m, s = config.positions, config.intensities, config.s
    iu = np.triu_indices(config.k, 1)
    if iu[0].size == 0:
        return 0.0
    d = pos[iu[0]] - pos[iu[1]]
    r = np.sqrt((d**2).sum(-1))
    if np.any(r == 0.0):
        raise ValueError("coincident vortices: interaction energy is singular")
    return pair_energy_constant(s) * float(np.sum(m[iu[0]] * m[iu[1]] * r ** (2.0 * s - 2.0)))


def _interaction_grad(config: VortexConfig) -> np.ndarray:
    """Gradient of the unordered pairwise energy, shape (k, 2).

    Equals m_j K(s) sum_{i!=j} m_i (b_i-b_j)/|b_i-b_j|^{4-2s} at block j.
    """
    return config.intensities[:, None] * (-perp(velocity_field(config)))


def traveling_energy(config: VortexConfig, c: float) -> float:
    """Energy whose critical points are traveling equilibria at speed c."""
    return float(c * np.sum(config.intensities * config.positions[:, 0])) + _interaction_energy(
        config
    )


def traveling_energy_grad(config: VortexConfig, c: float) -> np.ndarray:
    """Analytic gradient of ``traveling_energy``, flattened to length 2k.

    Component-wise it equals the intensity-scaled perp rotation of
    ``traveling_residual``: grad_j = m_j * residual_j^perp.
    """
    grad = _interaction_grad(config)
    grad[:, 0] += c * config.intensities
    return grad.ravel()


def rotating_energy(config: VortexConfig, alpha: float) -> float:
    """Energy whose critical points are rotating equilibria at rate alpha."""
    return float(
        0.5 * alpha * np.sum(config.intensities * (config.positions**2).sum(axis=1))
    ) + _interaction_energy(config)


def rotating_energy_grad(config: VortexConfig, alpha: float) -> np.ndarray:
    """Analytic gradient of ``rotating_energy``: m_j times the rotating residual."""
    grad = _interaction_grad(config)
    grad += alpha * config.intensities[:, None] * config.positions
    return grad.ravel()


# ---------------------------------------------------------------------------
# vortex/anti-vortex arrays


def balancing_forces(p: np.ndarray, q: np.ndarray, s: float):
    """Raw force sums of the traveling-array balance, for unit intensities.

    For vortices of intensity +1 at rows of ``p`` and -1 at rows of ``q``:

        Fp_i = sum_{j != i} (p_i-p_j)/|p_i-p_j|^{4-2s}
               - sum_l (p_i-q_l)/|p_i-q_l|^{4-2s}

    and symmetrically for ``Fq``.  A traveling array satisfies
    Fp_i = c/K(s) e1 and Fq_m = -c/K(s) e1.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    pts = np.vstack([p, q])
    if len(np.unique(pts.round(decimals=14), axis=0)) != len(pts):
        raise ValueError("array points must be pairwise distinct")
    sgn = np.concatenate([np.ones(len(p)), -np.ones(len(q))])
    diff = pts[:, None, :] - pts[None, :, :]
    r2 = (diff**2).sum(-1)
    np.fill_diagonal(r2, 1.0)
    w = r2 ** (-(4.0 - 2.0 * s) / 2.0)
    np.fill_diagonal(w, 0.0)
    F = np.einsum("j,ijd,ij->id", sgn, diff, w)
    # force on a -1 vortex from the field of the others, with overall sign
    # chosen so both blocks read off the same printed balance equations
    F[len(p):] *= -1.0
    return F[: len(p)], F[len(p):]


def fit_array_speed(p: np.ndarray, q: np.ndarray, s: float) -> float:
    """Least-squares speed c given the forces on a candidate array."""
    Fp, Fq = balancing_forces(p, q, s)
    kappa = 1.0 / interaction_constant(s)
    return float((Fp[:, 0].sum() - Fq[:, 0].sum()) / (kappa * (len(Fp) + len(Fq))))


@dataclass(frozen=True)
class SymmetricArrayParams:
    """Free coordinates of a symmetric traveling vortex/anti-vortex array.

    The 2k points are reconstructed as p = (pair representatives, their
    conjugates, real-axis points) and q_i = -conj(p_i).  ``pair_points``
    holds the j0 representatives p_1, p_3, ... (one per conjugate pair) and
    ``axis_points`` the real coordinates of the remaining p_j.
    """

    pair_points: np.ndarray  # (j0, 2)
    axis_points: np.ndarray  # (k - 2 j0,)
    c: float
    s: float
    intensity: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "pair_points", np.asarray(self.pair_points, dtype=float).reshape(-1, 2)
        )
        object.__setattr__(
            self, "axis_points", np.atleast_1d(np.asarray(self.axis_points, dtype=float))
        )
        if self.intensity <= 0.0:
            raise ValueError("intensity of the +1 block must be positive")

    @property
    def j0(self) -> int:
        return self.pair_points.shape[0]

    @property
    def k(self) -> int:
        return 2 * self.j0 + self.axis_points.size

    def reconstruct(self):
        """Full (p, q) point sets, each of shape (k, 2)."""
        pieces = []
        for x, y in self.pair_points:
            pieces.append([x, y])
            pieces.append([x, -y])
        for x in self.axis_points:
            pieces.append([x, 0.0])
        p = np.array(pieces).reshape(-1, 2)
        q = np.column_stack([-p[:, 0], p[:, 1]])
        return p, q

    def free_vector(self) -> np.ndarray:
        """Free coordinates (pair x/y interleaved, axis x's, then c)."""
        return np.concatenate([self.pair_points.ravel(), self.axis_points, [self.c]])

    def with_free_vector(self, v: np.ndarray) -> "SymmetricArrayParams":
        j0 = self.j0
        return replace(
            self,
            pair_points=v[: 2 * j0].reshape(j0, 2),
            axis_points=v[2 * j0 : 2 * j0 + self.axis_points.size],
            c=float(v[-1]),
        )

    def to_config(self) -> VortexConfig:
        p, q = self.reconstruct()
        m = self.intensity
        return VortexConfig(np.vstack([p, q]), np.concatenate([np.full(self.k, m), np.full(self.k, -m)]), self.s)


def symmetric_array_residual(params: SymmetricArrayParams) -> np.ndarray:
    """Balance equations projected onto the free coordinates.

    Evaluates the raw force balance on the reconstructed 2k points and keeps
    one representative equation per free coordinate: both components at each
    conjugate-pair representative, the e1 component at each real-axis point.
    The mirror and conjugation symmetries make the dropped equations
    identically redundant.
    """
    p, q = params.reconstruct()
    Fp, _ = balancing_forces(p, q, params.s)
    target = params.c / interaction_constant(params.s)
    out = []
    for j in range(params.j0):
        i = 2 * j  # representative p_{2j+1} sits at row 2j
        out.extend([Fp[i, 0] - target, Fp[i, 1]])
    for a in range(params.axis_points.size):
        i = 2 * params.j0 + a
        out.append(Fp[i, 0] - target)
    return np.array(out)


def six_vortex_seed(s: float = 0.5) -> SymmetricArrayParams:
    """Seed parameters of the known six-vortex symmetric array.

    The speed is filled in by the least-squares fit on the seed coordinates.
    """
    params = SymmetricArrayParams(
        pair_points=np.array([SIX_VORTEX_PAIR_SEED]),
        axis_points=np.array([SIX_VORTEX_AXIS_SEED]),
        c=0.0,
        s=s,
    )
    p, q = params.reconstruct()
    return replace(params, c=fit_array_speed(p, q, s))


# ---------------------------------------------------------------------------
# Newton solver with gauge rows


@dataclass
class NewtonResult:
    x: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    rank_deficient: bool = False
    jacobian: np.ndarray | None = None
    message: str = ""


def _fd_jacobian(fn, x, scale=1e-6):
    """Central finite-difference Jacobian, step 1e-6 x coordinate scale."""
    f0 = np.atleast_1d(fn(x))
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = scale * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.atleast_1d(fn(xp)) - np.atleast_1d(fn(xm))) / (2.0 * h)
    return J


def solve_newton(
    residual,
    initial,
    gauge_rows=(),
    tol: float = 1e-12,
    max_iter: int = 100,
    fd_scale: float = 1e-6,
) -> NewtonResult:
    """Damped Newton with FD Jacobian and appended linear gauge rows.

    ``gauge_rows`` is a sequence of ``(coefficients, target)`` pairs, each
    contributing the extra equation coefficients . x = target; they pin the
    континuous symmetries (translations, rotation phase, scale) that would
    otherwise make the Jacobian singular.  Steps are least-squares solves of
    the augmented system, damped by backtracking (up to 8 halvings).
    Convergence is declared when the sup-norm of the augmented residual
    falls below ``tol``; an exact initial root is accepted at 0 iterations.
    A rank-deficient augmented Jacobian is reported through the
    ``rank_deficient`` flag.
    """
    x = np.asarray(initial, dtype=float).copy()
    rows = [(np.asarray(a, dtype=float), float(b)) for a, b in gauge_rows]

    def aug(xv):
        parts = [np.atleast_1d(residual(xv))]
        for a, b in rows:
            parts.append(np.atleast_1d(a @ xv - b))
        return np.concatenate(parts)

    F = aug(x)
    if not np.all(np.isfinite(F)):
        raise ValueError("initial residual is not finite")
    rank_deficient = False
    J = None
    for it in range(max_iter):
        norm = float(np.abs(F).max())
        if norm < tol:
            return NewtonResult(x, norm, it, True, rank_deficient, J)
        J = _fd_jacobian(residual, x, fd_scale)
        if rows:
            J = np.vstack([J] + [a[None, :] for a, _ in rows])
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] < 1e-12 * max(sv[0], 1.0):
            rank_deficient = True
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam, best = 1.0, None
        for _ in range(8):
            Fn = aug(x + lam * step)
            rn = float(np.abs(Fn).max())
            if best is None or rn < best[0]:
                best = (rn, x + lam * step, Fn)
            if rn < norm:
                break
            lam *= 0.5
        if best[0] >= norm and norm < 1e-14:
            return NewtonResult(x, norm, it, True, rank_deficient, J)
        _, x, F = best
    norm = float(np.abs(F).max())
    return NewtonResult(
        x,
        norm,
        max_iter,
        bool(norm < tol),
        rank_deficient,
        J,
        message="" if norm < tol else f"no convergence after {max_iter} iterations",
    )


@dataclass
class EquilibriumSolution:
    """A relative equilibrium with its motion parameter and certificate."""

    config: VortexConfig
    motion_type: str  # "traveling" or "rotating"
    motion_value: float
    residual_norm: float
    certificate: "Certificate | None" = None
    array_params: SymmetricArrayParams | None = None
    gauge_index: int | None = None  # pinned free coordinate of the array reduction


def solve_symmetric_array(
    initial: SymmetricArrayParams,
    gauge_index: int | None = None,
    gauge_value: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> EquilibriumSolution:
    """Solve the symmetric-array balance with the speed free.

    ``gauge_index`` selects which free coordinate is pinned to break the
    scaling covariance (the default pins the first real-axis coordinate,
    falling back to the first pair coordinate); it is pinned to
    ``gauge_value`` (default: its initial value).  The remaining unknowns,
    including c, are solved by damped Newton.
    """
    nfree = initial.free_vector().size
    if gauge_index is None:
        gauge_index = 2 * initial.j0 if initial.axis_points.size else 0
    if not 0 <= gauge_index < nfree - 1:
        raise ValueError("gauge_index must pin a position coordinate")
    x0 = initial.free_vector()
    if gauge_value is None:
        gauge_value = x0[gauge_index]
    pin = np.zeros(nfree)
    pin[gauge_index] = 1.0

    def res(v):
        return symmetric_array_residual(initial.with_free_vector(v))

    result = solve_newton(res, x0, gauge_rows=[(pin, gauge_value)], tol=tol, max_iter=max_iter)
    params = initial.with_free_vector(result.x)
    sol = EquilibriumSolution(
        config=params.to_config(),
        motion_type="traveling",
        motion_value=params.c,
        residual_norm=result.residual_norm,
        array_params=params,
        gauge_index=gauge_index,
    )
    if not result.converged:
        raise NewtonFailure(result, sol)
    return sol


def solve_rotating(
    config: VortexConfig,
    alpha0: float,
    phase_target: float | None = None,
    scale_target: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> EquilibriumSolution:
    """Solve the rotating balance with alpha free.

    Gauge rows pin the rotation phase (b_1 . e2 = ``phase_target``) and the
    scale (b_1 . e1 = ``scale_target``); both default to the initial values
    so an exact equilibrium is accepted unchanged.
    """
    k = config.k
    x0 = np.concatenate([config.positions.ravel(), [alpha0]])
    rot_gauge = np.zeros(2 * k + 1)
    rot_gauge[1] = 1.0
    scale_gauge = np.zeros(2 * k + 1)
    scale_gauge[0] = 1.0
    if phase_target is None:
        phase_target = x0[1]
    if scale_target is None:
        scale_target = x0[0]

    def res(v):
        cfg = config.with_positions(v[:-1].reshape(k, 2))
        return rotating_residual(cfg, v[-1])

    result = solve_newton(
        res,
        x0,
        gauge_rows=[(rot_gauge, phase_target), (scale_gauge, scale_target)],
        tol=tol,
        max_iter=max_iter,
    )
    cfg = config.with_positions(result.x[:-1].reshape(k, 2))
    sol = EquilibriumSolution(
        config=cfg,
        motion_type="rotating",
        motion_value=float(result.x[-1]),
        residual_norm=result.residual_norm,
    )
    if not result.converged:
        raise NewtonFailure(result, sol)
    return sol


class NewtonFailure(RuntimeError):
    """Raised when a solve does not converge; carries the failure report."""

    def __init__(self, result: NewtonResult, partial=None):
        super().__init__(
            f"Newton did not converge: residual {result.residual_norm:.3e} "
            f"after {result.iterations} iterations"
            + (", rank-deficient augmented Jacobian" if result.rank_deficient else "")
        )
        self.result = result
        self.partial = partial


# ---------------------------------------------------------------------------
# nondegeneracy certificates


@dataclass
class Certificate:
    """Spectrum of the relevant second-order operator at an equilibrium."""

    spectrum: np.ndarray
    kernel_dimension: int
    kernel_tol: float
    spectrum_kind: str  # "hessian_eigenvalues" or "jacobian_singular_values"
    matches_generators: bool | None = None
    max_subspace_angle: float | None = None


def translation_generator(k: int, axis: int) -> np.ndarray:
    """Tangent vector of a rigid translation along the given axis."""
    g = np.zeros((k, 2))
    g[:, axis] = 1.0
    return g.ravel()


def rotation_generator(config: VortexConfig) -> np.ndarray:
    """Tangent vector b_j -> b_j^perp of a rigid rotation."""
    return perp(config.positions).ravel()


def hessian_of_traveling_energy(
    config: VortexConfig, c: float, fd_scale: float = 1e-6, symmetrize: bool = True
) -> np.ndarray:
    """FD Hessian (2k x 2k) of the traveling energy in the positions."""

    def grad(v):
        return traveling_energy_grad(config.with_positions(v.reshape(config.k, 2)), c)

    H = _fd_jacobian(grad, config.positions.ravel().copy(), fd_scale)
    return 0.5 * (H + H.T) if symmetrize else H


def hessian_of_rotating_energy(
    config: VortexConfig, alpha: float, fd_scale: float = 1e-6, symmetrize: bool = True
) -> np.ndarray:
    """FD Hessian (2k x 2k) of the rotating energy in the positions."""

    def grad(v):
        return rotating_energy_grad(config.with_positions(v.reshape(config.k, 2)), alpha)

    H = _fd_jacobian(grad, config.positions.ravel().copy(), fd_scale)
    return 0.5 * (H + H.T) if symmetrize else H


def reduced_jacobian(params: SymmetricArrayParams, gauge_index: int) -> np.ndarray:
    """FD Jacobian of the gauge-reduced symmetric-array residual.

    Square in the unknowns that remain once the pinned coordinate is
    removed (the speed stays free).
    """
    x0 = params.free_vector()
    free = [i for i in range(x0.size) if i != gauge_index]

    def res(v):
        x = x0.copy()
        x[free] = v
        return symmetric_array_residual(params.with_free_vector(x))

    return _fd_jacobian(res, x0[free].copy())


def nondegeneracy_spectrum(
    solution: EquilibriumSolution,
    symmetry_generators=(),
    kernel_tol: float | None = None,
    use_array_reduction: bool | None = None,
) -> Certificate:
    """Spectral nondegeneracy certificate of an equilibrium.

    For traveling/rotating solutions the spectrum is the eigenvalues of the
    (symmetrized FD) Hessian of the corresponding energy; kernel dimension
    counts eigenvalues below ``kernel_tol`` (default 1e-6 times the largest
    magnitude).  When the solution carries a symmetric-array reduction and
    ``use_array_reduction`` is requested (or it was solved that way), the
    spectrum is instead the singular values of the gauge-reduced Jacobian,
    whose trivial kernel is exactly the array notion of nondegeneracy.

    If ``symmetry_generators`` are provided, the kernel span is compared
    against their span; ``matches_generators`` is true when the largest
    principal angle is below 1e-3 radians.
    """
    if use_array_reduction is None:
        use_array_reduction = solution.gauge_index is not None
    if use_array_reduction:
        if solution.array_params is None:
            raise ValueError("solution carries no symmetric-array reduction")
        gauge = solution.gauge_index
        if gauge is None:
            gauge = 2 * solution.array_params.j0 if solution.array_params.axis_points.size else 0
        J = reduced_jacobian(solution.array_params, gauge)
        sv = np.linalg.svd(J, compute_uv=False)
        tol = kernel_tol if kernel_tol is not None else 1e-6 * max(sv.max(), 1.0)
        kdim = int(np.sum(sv < tol))
        cert = Certificate(
            spectrum=sv, kernel_dimension=kdim, kernel_tol=tol, spectrum_kind="jacobian_singular_values"
        )
        solution.certificate = cert
        return cert

    if solution.motion_type == "traveling":
        H = hessian_of_traveling_energy(solution.config, solution.motion_value)
    elif solution.motion_type == "rotating":
        H = hessian_of_rotating_energy(solution.config, solution.motion_value)
    else:
        raise ValueError(f"unknown motion type {solution.motion_type!r}")
    evals, evecs = np.linalg.eigh(H)
    tol = kernel_tol if kernel_tol is not None else 1e-6 * max(np.abs(evals).max(), 1.0)
    kernel_mask = np.abs(evals) < tol
    kdim = int(kernel_mask.sum())
    matches = None
    angle = None
    gens = [np.asarray(g, dtype=float) for g in symmetry_generators]
    if gens and kdim > 0:
        G = np.column_stack(gens)
        Kspan = evecs[:, kernel_mask]
        if G.shape[1] == Kspan.shape[1]:
            angle = float(np.max(subspace_angles(G, Kspan)))
            matches = bool(angle < 1e-3)
        else:
            matches = False
    cert = Certificate(
        spectrum=evals,
        kernel_dimension=kdim,
        kernel_tol=tol,
        spectrum_kind="hessian_eigenvalues",
        matches_generators=matches,
        max_subspace_angle=angle,
    )
    solution.certificate = cert
    return cert


# ---------------------------------------------------------------------------
# continuation in s


@dataclass
class ContinuationBranch:
    solutions: list
    bifurcated: bool = False
    reached_s: float = field(default=np.nan)


def _resolve_at_s(solution: EquilibriumSolution, s_new: float) -> EquilibriumSolution:
    if solution.array_params is not None:
        warm = replace(solution.array_params, s=s_new)
        gi = solution.gauge_index
        return solve_symmetric_array(warm, gauge_index=gi)
    if solution.motion_type == "rotating":
        cfg = solution.config
        warm = VortexConfig(cfg.positions, cfg.intensities, s_new)
        return solve_rotating(warm, solution.motion_value)
    raise ValueError(
        "continuation needs a symmetric-array reduction or a rotating solution"
    )


def _kernel_dim(solution: EquilibriumSolution) -> int:
    return nondegeneracy_spectrum(solution).kernel_dimension


def continue_in_s(
    solution: EquilibriumSolution, s_target: float, steps: int, max_halvings: int = 3
) -> ContinuationBranch:
    """Natural-parameter continuation of an equilibrium branch in s.

    Takes ``steps`` uniform increments from the solution's current s to
    ``s_target``, re-solving with the previous point as warm start.  A
    non-converging step retries with the increment halved, up to
    ``max_halvings`` times.  The branch is truncated with the bifurcation
    flag set if the gauge-reduced kernel dimension ever increases.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    branch = [solution]
    if steps == 0:
        return ContinuationBranch(branch, False, solution.config.s)
    k0 = _kernel_dim(solution)
    s_now = solution.config.s
    ds = (s_target - s_now) / steps
    current = solution
    while abs(s_now - s_target) > 1e-14:
        s_next = s_now + ds
        if (ds > 0 and s_next > s_target) or (ds < 0 and s_next < s_target):
            s_next = s_target
        halvings = 0
        while True:
            try:
                nxt = _resolve_at_s(current, s_next)
                break
            except NewtonFailure:
                halvings += 1
                if halvings > max_halvings:
                    raise
                s_next = s_now + (s_next - s_now) / 2.0
        if _kernel_dim(nxt) > k0:
            return ContinuationBranch(branch, True, s_now)
        branch.append(nxt)
        current = nxt
        s_now = s_next
    return ContinuationBranch(branch, False, s_now)


# ---------------------------------------------------------------------------
# export


def solution_to_dict(solution: EquilibriumSolution, gamma: float | None = None) -> dict:
    """JSON-ready description of a solution (fixed field order)."""
    out = {"s": solution.config.s}
    if gamma is not None:
        out["gamma"] = gamma
    out["positions"] = [list(map(float, row)) for row in solution.config.positions]
    out["intensities"] = [float(v) for v in solution.config.intensities]
    out["motion"] = {"type": solution.motion_type, "value": float(solution.motion_value)}
    out["residual_norm"] = float(solution.residual_norm)
    cert = solution.certificate
    if cert is not None:
        out["spectrum"] = [float(v) for v in cert.spectrum]
        out["kernel_dimension"] = int(cert.kernel_dimension)
    return out
