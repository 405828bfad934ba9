"""Observables: effective velocity, equation residuals, hybrid energy
functionals, block Lyapunov functionals, and decay-rate fitting.

The effective velocity z = u + (kappa/lam) grad |nabla|^(2 s* - 2) a
mixes the damped velocity with the nonlocal force so that, to leading
order at low frequency, the density satisfies a fractional heat
equation driven by -div z and z itself is damped at rate lam.  The two
residual functions below measure how well a numerically computed
trajectory satisfies those reformulated equations, using a centered
difference in time across three consecutive snapshots.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import (
    FieldState,
    RieszParams,
    SpectralGrid,
    divergence,
    frac_lambda,
    grad_frac_lambda,
    gradient,
    lp_norm,
)
from .littlewood_paley import BesovSpec, LPPartition, besov_norm, dyadic_block, low_pass

__all__ = [
    "FunctionalRecord",
    "DecayFit",
    "effective_velocity",
    "density_equation_residual",
    "z_equation_residual",
    "energy_functionals",
    "lyapunov_block",
    "lyapunov_equivalence",
    "fit_decay",
    "default_fit_window",
]


@dataclass(frozen=True)
class FunctionalRecord:
    """Hybrid energy functional and its dissipation counterpart at one time."""

    t: float
    energy: float
    dissipation: float
    components: dict


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log(norm) against log(1 + t)."""

    window: tuple
    slope: float
    predicted: float
    rel_err: float
    r_squared: float


def effective_velocity(grid: SpectralGrid, state: FieldState, params: RieszParams) -> np.ndarray:
    """z = u + (kappa/lam) grad |nabla|^(2 s* - 2) a (linear in the state)."""
    beta = params.kappa / params.lam
    return np.asarray(state.u, dtype=float) + beta * grad_frac_lambda(
        grid, state.a, 2.0 * params.s_star - 2.0
    )


def _centered_triplet(snapshots) -> tuple[FieldState, FieldState, FieldState]:
    if len(snapshots) != 3:
        raise ValueError("need exactly three consecutive snapshots")
    s0, s1, s2 = snapshots
    if not (s0.t < s1.t < s2.t):
        raise ValueError("snapshot times must be strictly increasing")
    return s0, s1, s2


def _advection(grid: SpectralGrid, u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    for i in range(grid.dim):
        gi = gradient(grid, u[i])
        out[i] = sum(u[jax] * gi[jax] for jax in range(grid.dim))
    return out


def density_equation_residual(
    grid: SpectralGrid, snapshots, params: RieszParams
) -> float:
    """Relative residual of the low-frequency density reformulation.

    Checks  da/dt + (kappa/lam) |nabla|^(2 s*) a + div z + div(a u) = 0
    at the middle snapshot, normalized by the largest constituent term.
    """
    s0, s1, s2 = _centered_triplet(snapshots)
    beta = params.kappa / params.lam
    dadt = (s2.a - s0.a) / (s2.t - s0.t)
    z = effective_velocity(grid, s1, params)
    terms = [
        dadt,
        beta * frac_lambda(grid, s1.a, 2.0 * params.s_star),
        divergence(grid, z),
        divergence(grid, s1.a * s1.u),
    ]
    residual = sum(terms)
    scale = max(lp_norm(grid, t, 2) for t in terms)
    if scale == 0.0:
        return 0.0
    return lp_norm(grid, residual, 2) / scale


def z_equation_residual(grid: SpectralGrid, snapshots, params: RieszParams) -> float:
    """Relative residual of the damped effective-velocity equation.

    Checks  dz/dt + lam z + beta grad |nabla|^(2s*-2) div z
            + beta^2 grad |nabla|^(4s*-2) a
            + beta grad |nabla|^(2s*-2) div(a u) + u . grad u = 0
    with beta = kappa/lam, normalized by ||z|| at the middle snapshot.
    """
    s0, s1, s2 = _centered_triplet(snapshots)
    beta = params.kappa / params.lam
    z0 = effective_velocity(grid, s0, params)
    z1 = effective_velocity(grid, s1, params)
    z2 = effective_velocity(grid, s2, params)
    dzdt = (z2 - z0) / (s2.t - s0.t)
    sigma = 2.0 * params.s_star - 2.0
    residual = (
        dzdt
        + params.lam * z1
        + beta * grad_frac_lambda(grid, divergence(grid, z1), sigma)
        + beta**2 * grad_frac_lambda(grid, s1.a, 4.0 * params.s_star - 2.0)
        + beta * grad_frac_lambda(grid, divergence(grid, s1.a * s1.u), sigma)
        + _advection(grid, s1.u)
    )
    denom = lp_norm(grid, z1, 2)
    if denom == 0.0:
        return 0.0
    return lp_norm(grid, residual, 2) / denom


def _admissible_p(dim: int, p: float) -> bool:
    if p < 2:
        return False
    if dim <= 4:
        return p <= 4
    return p <= 2.0 * dim / (dim - 2.0)


def energy_functionals(
    grid: SpectralGrid,
    state: FieldState,
    partition: LPPartition,
    params: RieszParams,
    p: float = 2.0,
    j1: int = 0,
) -> FunctionalRecord:
    """Hybrid energy functional and its instantaneous dissipation counterpart.

    The energy is the sum of four hybrid norms: low-frequency density at
    regularity d/p - 1 and velocity at d/p (both in the p-based scale),
    high-frequency density at d/2 + 1 and velocity at d/2 + 2 - s* (in
    the 2-based scale).  The dissipation counterpart shifts the
    low-frequency density index up by 2 s* and adds the full-range norm
    of da/dt = -div u - div(a u) at index d/p, evaluated spectrally.
    """
    if not _admissible_p(grid.dim, p):
        warnings.warn(
            f"p={p} is outside the admissible range for d={grid.dim}; "
            "the functionals are still computed",
            stacklevel=2,
        )
    d = grid.dim
    a = np.asarray(state.a, dtype=float)
    u = np.asarray(state.u, dtype=float)
    comp = {
        "a_low": besov_norm(partition, a, BesovSpec(d / p - 1.0, p, 1, "low", j1)),
        "u_low": besov_norm(partition, u, BesovSpec(d / p, p, 1, "low", j1)),
        "a_high": besov_norm(partition, a, BesovSpec(d / 2.0 + 1.0, 2, 1, "high", j1)),
        "u_high": besov_norm(partition, u, BesovSpec(d / 2.0 + 2.0 - params.s_star, 2, 1, "high", j1)),
    }
    energy = sum(comp.values())
    dadt = -divergence(grid, u) - divergence(grid, a * u)
    dissipation = (
        besov_norm(partition, a, BesovSpec(d / p - 1.0 + 2.0 * params.s_star, p, 1, "low", j1))
        + comp["u_low"]
        + comp["a_high"]
        + comp["u_high"]
        + besov_norm(partition, dadt, BesovSpec(d / p, p, 1, "full", j1))
    )
    return FunctionalRecord(t=state.t, energy=energy, dissipation=dissipation, components=comp)


def lyapunov_block(
    grid: SpectralGrid,
    state: FieldState,
    j: int,
    c_tilde: float,
    partition: LPPartition,
    params: RieszParams,
    j1: int = 0,
) -> float:
    """Block Lyapunov functional for a high-frequency shell j >= j1 - 1.

    L_j^2 = || |nabla|^s* a_j ||^2 + || |nabla| u_j ||^2
            + int S_(j-1) a * | |nabla| u_j |^2 dx
            - 2 c_tilde int a_j div u_j dx,

    where a_j, u_j are the shell-j blocks and S_(j-1) is the smooth
    projection onto shells strictly below j - 1.
    """
    if j < j1 - 1:
        raise ValueError(f"block Lyapunov functional requires j >= j1 - 1 = {j1 - 1}, got {j}")
    if not (0 < c_tilde < 0.5):
        raise ValueError(f"c_tilde must lie in (0, 0.5), got {c_tilde}")
    partition.check_j(j)
    a = np.asarray(state.a, dtype=float)
    u = np.asarray(state.u, dtype=float)
    a_j = dyadic_block(partition, a, j)
    u_j = dyadic_block(partition, u, j)
    lam_a = frac_lambda(grid, a_j, params.s_star)
    lam_u = np.stack([frac_lambda(grid, u_j[i], 1.0) for i in range(grid.dim)])
    low_a = low_pass(partition, a, j - 1)
    dv = grid.cell_volume
    quad = dv * float(np.sum(lam_a**2)) + dv * float(np.sum(lam_u**2))
    cubic = dv * float(np.sum(low_a * np.sum(lam_u**2, axis=0)))
    cross = -2.0 * c_tilde * dv * float(np.sum(a_j * divergence(grid, u_j)))
    return quad + cubic + cross


def lyapunov_equivalence(
    grid: SpectralGrid,
    state: FieldState,
    j: int,
    c_tilde: float,
    partition: LPPartition,
    params: RieszParams,
    j1: int = 0,
) -> float:
    """Ratio of L_j^2 to its quadratic part (1 for small data and small c_tilde)."""
    a_j = dyadic_block(partition, np.asarray(state.a, dtype=float), j)
    u_j = dyadic_block(partition, np.asarray(state.u, dtype=float), j)
    lam_a = frac_lambda(grid, a_j, params.s_star)
    lam_u = np.stack([frac_lambda(grid, u_j[i], 1.0) for i in range(grid.dim)])
    dv = grid.cell_volume
    quad = dv * float(np.sum(lam_a**2)) + dv * float(np.sum(lam_u**2))
    if quad == 0.0:
        return 1.0
    return lyapunov_block(grid, state, j, c_tilde, partition, params, j1) / quad


def default_fit_window(t_end: float) -> tuple[float, float]:
    return (max(1.0, t_end / 10.0), t_end)


def fit_decay(
    times,
    norms,
    predicted: float,
    window: tuple | None = None,
) -> DecayFit:
    """Fit log(norm) = slope * log(1 + t) + const over the window.

    Requires at least 8 strictly positive samples inside the window.
    ``rel_err`` compares the fitted slope against ``predicted`` (the
    absolute slope error when predicted == 0).
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if times.shape != norms.shape or times.ndim != 1:
        raise ValueError("times and norms must be 1d arrays of equal length")
    if window is None:
        window = default_fit_window(float(times[-1]))
    lo, hi = float(window[0]), float(window[1])
    sel = (times >= lo) & (times <= hi)
    if int(np.sum(sel)) < 8:
        raise ValueError(f"need at least 8 samples in the window [{lo}, {hi}]")
    t_sel = times[sel]
    n_sel = norms[sel]
    if np.any(n_sel <= 0):
        raise ValueError("norm samples must be positive inside the fit window")
    x = np.log1p(t_sel)
    y = np.log(n_sel)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    rel = abs(slope - predicted) / abs(predicted) if predicted != 0 else abs(slope)
    return DecayFit(window=(lo, hi), slope=float(slope), predicted=float(predicted), rel_err=float(rel), r_squared=float(r2))
