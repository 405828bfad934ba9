"""Pseudospectral time integration of the damped interaction system.

The evolved fields are the density fluctuation ``a`` and velocity ``u``
on a periodic grid:

    da/dt = -div u - div(a u),
    du/dt = -lam u - kappa grad |nabla|^(2 s* - 2) a - u . grad u.

The linear part is advanced exactly: per mode, the density amplitude
and the compressible velocity scalar are propagated with the 2x2 matrix
exponential from :mod:`rieszflow.spectrum`, and the rotational part is
damped by exp(-lam dt).  On the Nyquist region (where the odd coupling
symbols cannot be represented and are dropped) the density mode is
frozen and the velocity purely damped; the zero mode of ``a`` is
therefore conserved exactly.  Nonlinear products are formed in physical
space and dealiased with the configured fraction rule.

Two integrators are available: the integrating-factor RK4 scheme
(default) and a first-order exponential Euler cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import FieldState, RieszParams, SpectralGrid, lp_norm
from .spectrum import propagator

__all__ = [
    "SolverConfig",
    "Trajectory",
    "perturbation_presets",
    "rhs_nonlinear",
    "linear_step",
    "integrate",
]

INTEGRATORS = ("ifrk4", "exp-euler")
PRESETS = ("single-mode", "smooth-bump", "low-frequency-powerlaw")


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step integration settings.

    ``snapshot_times`` defaults to (0, t_end).  Requested times are hit
    exactly by subdividing each segment into an integer number of steps
    of size at most ``dt``.  A guideline for choosing ``dt`` is
    dt <= 0.5 / max(xi_max * ||u||_inf, lam); the linear part imposes no
    constraint since it is integrated exactly.
    """

    dt: float
    t_end: float
    integrator: str = "ifrk4"
    dealias: float = 2.0 / 3.0
    snapshot_times: tuple | None = None
    positivity_floor: float = 0.01
    linear_only: bool = False

    def __post_init__(self) -> None:
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= 0):
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not (0 < self.dealias <= 1):
            raise ValueError(f"dealias fraction must lie in (0, 1], got {self.dealias}")
        if not (0 < self.positivity_floor < 1):
            raise ValueError(f"positivity floor must lie in (0, 1), got {self.positivity_floor}")
        if self.snapshot_times is not None:
            times = tuple(float(t) for t in self.snapshot_times)
            if any(t < 0 or t > self.t_end + 1e-12 for t in times):
                raise ValueError("snapshot times must lie in [0, t_end]")
            if any(b - a <= 0 for a, b in zip(times, times[1:])):
                raise ValueError("snapshot times must be strictly increasing")
            object.__setattr__(self, "snapshot_times", times)


@dataclass
class Trajectory:
    """Recorded snapshots, per-snapshot diagnostics, and termination status."""

    snapshots: list
    diagnostics: list
    status: str = "completed"
    abort_time: float | None = None


class _Scheme:
    """Spectral-side state machine shared by the public entry points."""

    def __init__(self, grid: SpectralGrid, params: RieszParams, config: SolverConfig):
        if params.dim != grid.dim:
            raise ValueError(f"params dim {params.dim} does not match grid dim {grid.dim}")
        self.grid = grid
        self.params = params
        self.config = config
        self.mask = grid.dealias_mask(config.dealias)
        self.units = grid.xi_unit
        self.ik = [1j * grid.xi[i] for i in range(grid.dim)]
        self._factors: dict = {}

    # -- linear part ---------------------------------------------------

    def factors(self, h: float):
        fac = self._factors.get(h)
        if fac is None:
            g, p = self.grid, self.params
            P = propagator(g.xi_norm, p.s_star, h, lam=p.lam, kappa=p.kappa, rho_bar=p.rho_bar)
            rot = math.exp(-p.lam * h)
            ny = g.nyquist_region
            p11 = P[..., 0, 0].copy()
            p12 = P[..., 0, 1].copy()
            p21 = P[..., 1, 0].copy()
            p22 = P[..., 1, 1].copy()
            # the odd coupling symbols vanish on the Nyquist region, so
            # density is frozen and velocity purely damped there (and the
            # zero mode conserves the mean exactly)
            p11[ny] = 1.0
            p12[ny] = 0.0
            p21[ny] = 0.0
            p22[ny] = rot
            fac = (p11, p12, p21, p22, rot)
            self._factors[h] = fac
        return fac

    def apply_linear(self, a_hat, u_hat, h: float):
        p11, p12, p21, p22, rot = self.factors(h)
        m_hat = 1j * sum(self.units[i] * u_hat[i] for i in range(self.grid.dim))
        a_new = p11 * a_hat + p12 * m_hat
        m_new = p21 * a_hat + p22 * m_hat
        u_new = []
        for i in range(self.grid.dim):
            rot_i = u_hat[i] + 1j * self.units[i] * m_hat
            u_new.append(-1j * self.units[i] * m_new + rot * rot_i)
        return a_new, u_new

    # -- nonlinear part ------------------------------------------------

    def rhs(self, a_hat, u_hat):
        g = self.grid
        a = np.fft.ifftn(a_hat * self.mask).real
        u = [np.fft.ifftn(u_hat[i] * self.mask).real for i in range(g.dim)]
        na = np.zeros(g.shape, dtype=complex)
        for i in range(g.dim):
            na -= self.ik[i] * np.fft.fftn(a * u[i])
        na *= self.mask
        nu = []
        for i in range(g.dim):
            conv = np.zeros(g.shape)
            for jax in range(g.dim):
                du_ij = np.fft.ifftn(self.ik[jax] * (u_hat[i] * self.mask)).real
                conv += u[jax] * du_ij
            nu.append(-np.fft.fftn(conv) * self.mask)
        return na, nu

    def step(self, a_hat, u_hat, h: float):
        if self.config.linear_only:
            return self.apply_linear(a_hat, u_hat, h)
        if self.config.integrator == "exp-euler":
            na, nu = self.rhs(a_hat, u_hat)
            return self.apply_linear(
                a_hat + h * na, [u_hat[i] + h * nu[i] for i in range(self.grid.dim)], h
            )
        return self._step_ifrk4(a_hat, u_hat, h)

    def _step_ifrk4(self, a_hat, u_hat, h: float):
        d = self.grid.dim
        half = 0.5 * h
        na1, nu1 = self.rhs(a_hat, u_hat)

        ah_half, uh_half = self.apply_linear(a_hat, u_hat, half)
        sn1a, sn1u = self.apply_linear(na1, nu1, half)
        na2, nu2 = self.rhs(ah_half + half * sn1a, [uh_half[i] + half * sn1u[i] for i in range(d)])

        na3, nu3 = self.rhs(ah_half + half * na2, [uh_half[i] + half * nu2[i] for i in range(d)])

        ah_full, uh_full = self.apply_linear(a_hat, u_hat, h)
        sn3a, sn3u = self.apply_linear(na3, nu3, half)
        na4, nu4 = self.rhs(ah_full + h * sn3a, [uh_full[i] + h * sn3u[i] for i in range(d)])

        s1a, s1u = self.apply_linear(na1, nu1, h)
        s23a, s23u = self.apply_linear(na2 + na3, [nu2[i] + nu3[i] for i in range(d)], half)
        a_new = ah_full + (h / 6.0) * (s1a + 2.0 * s23a + na4)
        u_new = [
            uh_full[i] + (h / 6.0) * (s1u[i] + 2.0 * s23u[i] + nu4[i]) for i in range(d)
        ]
        return a_new, u_new


def rhs_nonlinear(
    grid: SpectralGrid, state: FieldState, params: RieszParams | None = None, dealias: float = 2.0 / 3.0
) -> tuple[np.ndarray, np.ndarray]:
    """Nonlinear tendency (-div(a u), -u . grad u) in physical space.

    The density tendency has exactly zero mean.  ``params`` only supplies
    the dimension check and may be omitted.
    """
    config = SolverConfig(dt=1.0, t_end=1.0, dealias=dealias)
    p = params if params is not None else RieszParams.from_s_star(grid.dim, 0.5)
    scheme = _Scheme(grid, p, config)
    a_hat = np.fft.fftn(np.asarray(state.a, dtype=float))
    u_hat = [np.fft.fftn(np.asarray(state.u[i], dtype=float)) for i in range(grid.dim)]
    na, nu = scheme.rhs(a_hat, u_hat)
    da = np.fft.ifftn(na).real
    du = np.stack([np.fft.ifftn(c).real for c in nu])
    return da, du


def linear_step(grid: SpectralGrid, state: FieldState, params: RieszParams, dt: float) -> FieldState:
    """Advance the state by the exact linear propagator over one step."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    config = SolverConfig(dt=max(dt, 1e-300), t_end=max(dt, 0.0), linear_only=True)
    scheme = _Scheme(grid, params, config)
    a_hat = np.fft.fftn(np.asarray(state.a, dtype=float))
    u_hat = [np.fft.fftn(np.asarray(state.u[i], dtype=float)) for i in range(grid.dim)]
    a_new, u_new = scheme.apply_linear(a_hat, u_hat, dt)
    a = np.fft.ifftn(a_new).real
    u = np.stack([np.fft.ifftn(c).real for c in u_new])
    return FieldState(a=a, u=u, t=state.t + dt)


def _physical_state(grid: SpectralGrid, a_hat, u_hat, t: float) -> FieldState:
    a = np.fft.ifftn(a_hat).real
    u = np.stack([np.fft.ifftn(u_hat[i]).real for i in range(grid.dim)])
    return FieldState(a=a, u=u, t=t)


def _basic_diagnostics(grid: SpectralGrid, state: FieldState) -> dict:
    return {
        "t": state.t,
        "l2_a": lp_norm(grid, state.a, 2),
        "l2_u": lp_norm(grid, state.u, 2),
        "min_density": float(1.0 + np.min(state.a)),
        "mean_a": float(np.mean(state.a)),
    }


def integrate(
    grid: SpectralGrid, initial: FieldState, params: RieszParams, config: SolverConfig
) -> Trajectory:
    """Run the fixed-step scheme, recording snapshots at the requested times.

    On a NaN/Inf or a positivity-floor violation the run stops, the
    trajectory keeps the snapshots recorded so far, and the status
    reports the failure kind together with the abort time.
    """
    a0 = np.asarray(initial.a, dtype=float)
    u0 = np.asarray(initial.u, dtype=float)
    if a0.shape != grid.shape or u0.shape != (grid.dim,) + grid.shape:
        raise ValueError("initial state shapes do not match the grid")
    if float(1.0 + np.min(a0)) < config.positivity_floor:
        raise ValueError("initial density already below the positivity floor")

    scheme = _Scheme(grid, params, config)
    a_hat = np.fft.fftn(a0)
    u_hat = [np.fft.fftn(u0[i]) for i in range(grid.dim)]

    targets = config.snapshot_times
    if targets is None:
        targets = (0.0, config.t_end) if config.t_end > 0 else (0.0,)

    snapshots: list[FieldState] = []
    diagnostics: list[dict] = []
    status = "completed"
    abort_time = None

    t = float(initial.t)
    t0 = t

    def record(time: float) -> None:
        st = _physical_state(grid, a_hat, u_hat, time)
        snapshots.append(st)
        diagnostics.append(_basic_diagnostics(grid, st))

    aborted = False
    for target in targets:
        target = t0 + float(target)
        if aborted:
            break
        if target <= t + 1e-12 * max(1.0, abs(t)):
            record(t)
            continue
        span = target - t
        nsteps = max(1, math.ceil(span / config.dt - 1e-9))
        h = span / nsteps
        for istep in range(nsteps):
            a_hat, u_hat = scheme.step(a_hat, u_hat, h)
            t = target if istep == nsteps - 1 else t + h
            a_phys = np.fft.ifftn(a_hat).real
            peak = float(np.max(np.abs(a_phys)))
            if not np.isfinite(peak) or not all(
                np.isfinite(float(np.max(np.abs(c)))) for c in u_hat
            ):
                status, abort_time, aborted = "blowup", t, True
                break
            if float(1.0 + np.min(a_phys)) < config.positivity_floor:
                status, abort_time, aborted = "positivity_violation", t, True
                break
        if not aborted:
            record(t)
    return Trajectory(snapshots=snapshots, diagnostics=diagnostics, status=status, abort_time=abort_time)


def _hermitian_phases(grid: SpectralGrid, rng: np.random.Generator) -> np.ndarray:
    """Random phase field psi with psi(-xi) = -psi(xi), zero at self-conjugate points."""
    theta = rng.uniform(0.0, 2.0 * np.pi, size=grid.shape)
    flipped = theta
    for ax in range(grid.dim):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    return 0.5 * (theta - flipped)


def perturbation_presets(
    kind: str,
    amplitude: float,
    grid: SpectralGrid,
    *,
    sigma1: float | None = None,
    cutoff: float = 1.0,
    mode: int = 1,
    width: float = 0.25,
    seed: int = 0,
) -> FieldState:
    """Mean-zero initial data families, normalized to ||a||_inf = amplitude.

    "single-mode": a = amplitude cos(k x_1) with k the ``mode``-th
    wavenumber of the first axis.  "smooth-bump": analytic periodic bump
    centered in the box with relative ``width``.
    "low-frequency-powerlaw": random-phase spectrum |a(xi)| proportional
    to |xi|^(-sigma1 - d/2) on 0 < |xi| <= cutoff, a sharp realization
    of a flat low-frequency shell profile at regularity sigma1.

    The velocity starts at zero in all presets.
    """
    if kind not in PRESETS:
        raise ValueError(f"unknown preset {kind!r}; choose from {PRESETS}")
    if not (0 < amplitude < 1):
        raise ValueError(
            f"amplitude must lie in (0, 1) to keep 1 + a positive, got {amplitude}"
        )
    coords = grid.coordinates()
    if kind == "single-mode":
        if not (1 <= mode <= grid.modes[0] // 3):
            raise ValueError(f"mode must stay below the dealias cutoff, got {mode}")
        k = 2.0 * np.pi * mode / grid.lengths[0]
        a = amplitude * np.cos(k * coords[0])
        if grid.dim == 2:
            a = np.broadcast_to(a, grid.shape).copy()
    elif kind == "smooth-bump":
        if not (0 < width <= 1):
            raise ValueError(f"relative width must lie in (0, 1], got {width}")
        g = np.ones(grid.shape)
        for i in range(grid.dim):
            L = grid.lengths[i]
            g = g * np.exp((np.cos(2.0 * np.pi * (coords[i] - L / 2.0) / L) - 1.0) / width**2)
        g = g - float(np.mean(g))
        a = amplitude * g / float(np.max(np.abs(g)))
    else:
        if sigma1 is None:
            raise ValueError("the low-frequency-powerlaw preset requires sigma1")
        if cutoff <= grid.min_nonzero_wavenumber():
            raise ValueError("cutoff excludes every nonzero lattice wavenumber")
        rng = np.random.default_rng(seed)
        psi = _hermitian_phases(grid, rng)
        xi = grid.xi_norm
        with np.errstate(divide="ignore", invalid="ignore"):
            profile = xi ** (-sigma1 - grid.dim / 2.0)
        window = (xi > 0) & (xi <= cutoff)
        a_hat = np.where(window, profile, 0.0) * np.exp(1j * psi)
        a_hat[~window] = 0.0
        a = np.fft.ifftn(a_hat).real
        a = amplitude * a / float(np.max(np.abs(a)))
    u = np.zeros((grid.dim,) + grid.shape)
    return FieldState(a=a, u=u, t=0.0)
