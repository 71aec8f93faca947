"""Discretized Birman-Schwinger diagnostics on periodic grids.

The free generator is diagonal in the discrete Fourier basis with multiplier
Psi(|xi_k|^2); the Schroedinger matrix is H = F^* diag(Psi) F + diag(V).
The Birman-Schwinger matrix at spectral parameter lam is the Nystroem
discretization

    K_ij = sqrt(|V_i|) R_lam(x_i - x_j) sqrt(|V_j|) h^d,

with the resolvent kernel periodized over a configurable number of image
shells and a cell-averaged diagonal when the kernel is singular at 0.
Its Frobenius norm is the grid Hilbert-Schmidt estimate, and an eigenvalue
of H at -lam corresponds to an eigenvalue 1 of K_lam.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import DomainError, RegimeError, ResourceError
from .kernels import resolvent_value, symbol_psi
from .params import ModelParams
from .quadrature import DEFAULT_QUAD, QuadratureSpec
from .riesz import RadialPotential, gamma_d, sigma_d
from .rollnik import rollnik_norm

#: dense eigensolves refuse beyond this many unknowns
DENSE_BUDGET = 32768


@dataclass(frozen=True)
class GridSpec:
    """Periodic box [-L, L)^d with N points per axis, spacing h = 2L/N."""

    d: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError("grids support d in {1, 2, 3}")
        if self.points_per_axis % 2 != 0 or self.points_per_axis < 4:
            raise DomainError("points_per_axis must be even and >= 4")
        if self.half_width <= 0:
            raise DomainError("half_width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def n_total(self) -> int:
        return self.points_per_axis ** self.d

    def axis(self) -> np.ndarray:
        N = self.points_per_axis
        return -self.half_width + self.h * np.arange(N)

    def radii(self) -> np.ndarray:
        """|x| for every grid point, flattened in C order."""
        ax = self.axis()
        if self.d == 1:
            return np.abs(ax)
        grids = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.sqrt(sum(g * g for g in grids)).ravel()

    def fourier_multiplier(self, p: ModelParams) -> np.ndarray:
        N = self.points_per_axis
        k1 = 2.0 * math.pi * np.fft.fftfreq(N, d=self.h)
        if self.d == 1:
            ksq = k1 * k1
        else:
            grids = np.meshgrid(*([k1] * self.d), indexing="ij")
            ksq = sum(g * g for g in grids)
        return symbol_psi(ksq, p)


@dataclass
class SpectralReport:
    grid: GridSpec
    hs_norm: float
    op_norm_estimate: float
    eigenvalues: list
    neg_counts: dict
    bs_residuals: list
    truncation_radius: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "grid": {"d": self.grid.d, "half_width": self.grid.half_width,
                     "points_per_axis": self.grid.points_per_axis},
            "hs_norm": self.hs_norm,
            "op_norm_estimate": self.op_norm_estimate,
            "eigenvalues": list(map(float, self.eigenvalues)),
            "neg_counts": {str(k): int(v) for k, v in self.neg_counts.items()},
            "bs_residuals": list(map(float, self.bs_residuals)),
            "truncation_radius": self.truncation_radius,
        }

    def eigenvalues_csv(self) -> str:
        return "\n".join(f"{v:.17g}" for v in sorted(self.eigenvalues)) + "\n"


def sample_potential(grid: GridSpec, V: RadialPotential,
                     sign: float = None) -> tuple[np.ndarray, float | None]:
    """Sample the potential on the grid; singular families are truncated at
    the first grid shell (value frozen at radius h), and the truncation
    radius is reported."""
    r = grid.radii()
    truncated_at = None
    if V.singular_radii:
        truncated_at = grid.h
        r = np.maximum(r, grid.h)
    vals = V.profile(r)
    if sign is None:
        sign = -1.0 if V.sign == "nonpos" else 1.0
    return sign * vals, truncated_at


def free_multiplier_matrix(grid: GridSpec, p: ModelParams) -> np.ndarray:
    """Dense matrix of the free generator (circulant per axis)."""
    if grid.n_total > DENSE_BUDGET:
        raise ResourceError(
            f"dense operator would need {grid.n_total} unknowns "
            f"(budget {DENSE_BUDGET}); use the matrix-free path")
    psi = grid.fourier_multiplier(p)
    kernel = np.fft.ifftn(psi).real  # convolution stencil c[i-j mod N]
    N = grid.points_per_axis
    idx = np.arange(N)
    diff = (idx[:, None] - idx[None, :]) % N
    if grid.d == 1:
        return kernel[diff]
    if grid.d == 2:
        T = kernel[diff[:, :, None, None], diff[None, None, :, :]]
        return T.transpose(0, 2, 1, 3).reshape(N * N, N * N)
    T = kernel[diff[:, :, None, None, None, None],
               diff[None, None, :, :, None, None],
               diff[None, None, None, None, :, :]]
    return T.transpose(0, 2, 4, 1, 3, 5).reshape(N ** 3, N ** 3)


def build_hamiltonian(grid: GridSpec, V: RadialPotential, p: ModelParams,
                      depth: float = 1.0) -> np.ndarray:
    """H = F^* diag(Psi) F + diag(V) as a dense symmetric matrix.

    ``depth`` rescales the sampled potential (sign taken from V.sign).
    """
    T = free_multiplier_matrix(grid, p)
    v, _ = sample_potential(grid, V)
    return T + np.diag(depth * v)


def hamiltonian_operator(grid: GridSpec, V: RadialPotential, p: ModelParams,
                         depth: float = 1.0) -> LinearOperator:
    """Matrix-free FFT-based application of H (for lattices beyond the dense
    budget)."""
    psi = grid.fourier_multiplier(p)
    v, _ = sample_potential(grid, V)
    v = depth * v
    shape = (grid.points_per_axis,) * grid.d
    n = grid.n_total

    def matvec(x):
        xg = x.reshape(shape)
        out = np.fft.ifftn(psi * np.fft.fftn(xg)).real
        return (out + v.reshape(shape) * xg).ravel()

    return LinearOperator((n, n), matvec=matvec, dtype=float)


def lowest_eigenvalues(grid: GridSpec, V: RadialPotential, p: ModelParams,
                       k: int = 4, depth: float = 1.0) -> np.ndarray:
    """Smallest k eigenvalues of H by matrix-free Lanczos."""
    op = hamiltonian_operator(grid, V, p, depth)
    vals = eigsh(op, k=k, which="SA", return_eigenvectors=False,
                 maxiter=5000, tol=1e-9)
    return np.sort(vals)


# ---------------------------------------------------------------------------
# Birman-Schwinger matrices
# ---------------------------------------------------------------------------

def _kernel_samples(grid: GridSpec, p: ModelParams,
                    image_shells: int | None,
                    spec: QuadratureSpec) -> np.ndarray:
    """Periodized resolvent kernel R(x_i - x_j) as a stencil over grid
    offsets, with the cell-averaged value at offset 0 when singular."""
    N = grid.points_per_axis
    L = grid.half_width
    h = grid.h
    ax_off = h * np.arange(N)  # offsets 0..(N-1)h along each axis, mod 2L
    ax_off = np.where(ax_off > L, ax_off - 2 * L, ax_off)
    if image_shells is None:
        image_shells = 0 if p.lam == 0 else 3

    shells = range(-image_shells, image_shells + 1)
    if grid.d == 1:
        offs = ax_off[:, None] + 2 * L * np.asarray(list(shells))[None, :]
        dist = np.abs(offs)
    else:
        grids = np.meshgrid(*([ax_off] * grid.d), indexing="ij")
        base = np.stack([g.ravel() for g in grids], axis=1)
        img_ax = 2 * L * np.asarray(list(shells))
        img_grids = np.meshgrid(*([img_ax] * grid.d), indexing="ij")
        imgs = np.stack([g.ravel() for g in img_grids], axis=1)
        dist = np.linalg.norm(base[:, None, :] + imgs[None, :, :], axis=2)

    flat = dist.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    vals = np.empty_like(uniq)
    for i, r in enumerate(uniq):
        if r == 0.0:
            # cell-averaged origin value: preserves Hilbert-Schmidt
            # convergence for singular kernels and absorbs the |z|^{alpha-1}
            # kink of the bounded ones
            vals[i] = _cell_averaged_origin(grid, p, spec)
        else:
            vals[i] = resolvent_value(r, p, spec)
    table = vals[inv].reshape(dist.shape)
    stencil = table.sum(axis=-1) if grid.d == 1 else table.sum(axis=1)

    # periodization tail control: the next omitted shell must be negligible
    if image_shells > 0:
        probe = resolvent_value(2 * L * (image_shells + 1) - L, p, spec)
        main = float(np.max(np.abs(stencil)))
        if probe > 1e-6 * main:
            raise DomainError(
                "periodic image tail exceeds 1e-6 of the main term; "
                "increase the box or the number of image shells")
    return stencil.reshape((N,) * grid.d)


def _kernel_singular_at_origin(p: ModelParams) -> bool:
    return p.alpha <= p.d


def _resolvent_at_zero(p: ModelParams, spec) -> float:
    """R_lam(0) for alpha > d (bounded kernels): one-dimensional integral."""
    from .quadrature import oscillatory_radial_transform

    def f(s):
        return 1.0 / (p.lam + symbol_psi(np.asarray(s) ** 2, p))

    val, _ = oscillatory_radial_transform(f, 0.0, p.d, spec)
    return val


def _cell_averaged_origin(grid: GridSpec, p: ModelParams, spec) -> float:
    """Cell average (1/h^d) int_{cell} R(|z|) dz around the origin."""
    h = grid.h
    if grid.d == 1:
        val, _ = integrate.quad(lambda z: resolvent_value(z, p, spec),
                                1e-12, h / 2.0, limit=100)
        return 2.0 * val / h
    # radial approximation of the cube cell by the volume-equivalent ball
    r_eq = (grid.h ** grid.d / (sigma_d(grid.d) / grid.d)) ** (1.0 / grid.d)
    val, _ = integrate.quad(
        lambda r: resolvent_value(r, p, spec) * sigma_d(grid.d) * r ** (grid.d - 1),
        1e-12, r_eq, limit=100)
    return val / grid.h ** grid.d


def bs_kernel_matrix(grid: GridSpec, V: RadialPotential, p: ModelParams,
                     depth: float = 1.0, image_shells: int | None = None,
                     spec: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """K = sqrt|V| R_lam sqrt|V| h^d on the grid (symmetric PSD up to
    discretization error)."""
    if p.lam == 0 and not p.transient:
        raise RegimeError("0-resolvent undefined in a recurrent regime")
    if grid.n_total > DENSE_BUDGET:
        raise ResourceError("Birman-Schwinger matrix beyond the dense budget")
    stencil = _kernel_samples(grid, p, image_shells, spec)
    v, _ = sample_potential(grid, V)
    sq = np.sqrt(np.abs(depth * v))
    N = grid.points_per_axis
    idx = np.arange(N)
    diff = (idx[:, None] - idx[None, :]) % N
    if grid.d == 1:
        R = stencil[diff]
    elif grid.d == 2:
        R = stencil[diff[:, :, None, None], diff[None, None, :, :]] \
            .transpose(0, 2, 1, 3).reshape(N * N, N * N)
    else:
        R = stencil[diff[:, :, None, None, None, None],
                    diff[None, None, :, :, None, None],
                    diff[None, None, None, None, :, :]] \
            .transpose(0, 2, 4, 1, 3, 5).reshape(N ** 3, N ** 3)
    return (sq[:, None] * R * sq[None, :]) * grid.h ** grid.d


def hs_norm(matrix: np.ndarray, grid: GridSpec = None) -> float:
    """Frobenius norm of the Nystroem matrix = grid Hilbert-Schmidt norm
    (the h^d quadrature weights are already inside the matrix)."""
    return float(np.linalg.norm(matrix, "fro"))


def count_negative_eigs(H: np.ndarray, lambda0: float = 0.0) -> int:
    """#{eigenvalues of H below -lambda0} by dense symmetric eigensolve."""
    if H.shape[0] > DENSE_BUDGET:
        raise ResourceError("dense eigensolve beyond budget")
    if lambda0 < 0:
        raise DomainError("lambda0 must be nonnegative")
    vals = np.linalg.eigvalsh(H)
    return int(np.sum(vals < -lambda0))


def bs_principle_check(grid: GridSpec, V: RadialPotential, p: ModelParams,
                       depth: float = 1.0, grid_tolerance: float = 1e-6,
                       spec: QuadratureSpec = DEFAULT_QUAD) -> list:
    """For each eigenvalue -lam of H below -grid_tolerance, the nearest
    eigenvalue of K_lam to 1: returns the list of |eig - 1| residuals."""
    if V.sign == "nonneg" and depth > 0:
        raise DomainError("the correspondence requires a non-positive potential")
    H = build_hamiltonian(grid, V, p, depth)
    vals = np.linalg.eigvalsh(H)
    residuals = []
    for ev in vals[vals < -grid_tolerance]:
        lam = -float(ev)
        K = bs_kernel_matrix(grid, V, p.with_lam(lam), depth, spec=spec)
        keig = np.linalg.eigvalsh(K)
        residuals.append(float(np.min(np.abs(keig - 1.0))))
    return residuals


def no_bound_state_threshold(p: ModelParams,
                             calibration=None,
                             spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Critical norm below which H = L + V has no bound states.

    m = 0: the 0-resolvent is the Riesz kernel, so the Hilbert-Schmidt norm
    of K_0 equals ||V|| / gamma_d(alpha) and the threshold is gamma_d(alpha).

    m > 0 (d = 3 only): threshold on the combined norm
    sqrt(||V||_{3,alpha}^2 + m^{4/alpha-2} ||V||_{classical}^2), with the
    comparison constant calibrated as the grid supremum of
    R_0^m / combined envelope.
    """
    if not p.transient:
        raise RegimeError("the criterion requires a transient regime")
    if p.m == 0:
        if not p.rollnik_admissible:
            raise RegimeError("requires alpha < d < 2*alpha")
        return gamma_d(p.alpha, p.d)
    if p.d != 3:
        raise RegimeError("the massive criterion is stated for d = 3")
    # calibrated comparison of R_0^m against the two-power envelope
    p0 = p.with_lam(0.0)
    grid = np.logspace(-3, 2, 120)
    sup = 0.0
    for r in grid:
        env = math.sqrt(r ** (2 * (p.alpha - 3)) +
                        p.m ** (4.0 / p.alpha - 2.0) * r ** (-2.0))
        sup = max(sup, resolvent_value(r, p0, spec) / env)
    return 1.0 / sup


def spectral_report(grid: GridSpec, V: RadialPotential, p: ModelParams,
                    depth: float = 1.0, lambda0_list=(0.0, 0.1),
                    spec: QuadratureSpec = DEFAULT_QUAD) -> SpectralReport:
    """Assemble the full diagnostic report at desk scale."""
    H = build_hamiltonian(grid, V, p, depth)
    vals = np.linalg.eigvalsh(H)
    K = bs_kernel_matrix(grid, V, p, depth, spec=spec)
    hs = hs_norm(K)
    op_est = float(np.max(np.abs(np.linalg.eigvalsh(K))))
    neg = {l0: int(np.sum(vals < -l0)) for l0 in lambda0_list}
    residuals = []
    if V.sign == "nonpos":
        residuals = bs_principle_check(grid, V, p, depth,
                                       grid_tolerance=max(1e-6, 1e-3 * abs(vals[0])),
                                       spec=spec)
    _, trunc = sample_potential(grid, V)
    return SpectralReport(grid=grid, hs_norm=hs, op_norm_estimate=op_est,
                          eigenvalues=[float(v) for v in vals[:64]],
                          neg_counts=neg, bs_residuals=residuals,
                          truncation_radius=trunc)
