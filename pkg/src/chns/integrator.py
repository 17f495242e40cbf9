"""Semi-implicit Euler-Maruyama time stepping for the coupled system.

One step advances (u, phi) by treating the stiff linear operators implicitly
(they are diagonal in Fourier space, so the solve is a modewise division) and
everything else explicitly at the start-of-step state, with the noise entering
in the Ito convention:

    velocity:   (1 + dt |k|^2) u_hat_{n+1}
                    = u_hat_n + dt (capillary - convection)_hat + noise_hat
    phase:      (1 + dt nu1 nu2 |k|^4 + dt S nu2 |k|^2) phi_hat_{n+1}
                    = phi_hat_n + dt (S nu2 |k|^2 phi_hat_n
                                      - kappa nu2 |k|^2 bulk_hat_n
                                      - advection_hat_n)

The stabilization S >= kappa*c2 compensates the anti-diffusive part of the
double well; S = 0 disables it (useful for convergence studies).  The scheme
preserves the phase mean exactly (the zeroth mode is copied through) and keeps
the velocity divergence-free and mean-free to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .noise import NoiseModel, WienerIncrement, sample_increment
from .spectral import (
    GridSpec,
    PhysicsParams,
    SpectralField,
    VelocityField,
    l2_norm_sq,
    leray_project,
    sobolev_norm,
    tables,
)


class BlowUpError(RuntimeError):
    """Raised when a step produces non-finite values."""

    def __init__(self, step: int, t: float, last_good: "SystemState | None" = None):
        super().__init__(f"non-finite state after step {step} (t = {t:.6g})")
        self.step = step
        self.t = t
        self.last_good = last_good

    def __reduce__(self):
        # picklable across worker processes; the state snapshot stays local
        return (BlowUpError, (self.step, self.t))


@dataclass
class SystemState:
    """Markov state of the flow: velocity, phase field, clock and step count."""

    u: VelocityField
    phi: SpectralField
    t: float = 0.0
    step: int = 0

    @property
    def grid(self) -> GridSpec:
        return self.phi.grid

    def copy(self) -> "SystemState":
        return SystemState(self.u.copy(), self.phi.copy(), self.t, self.step)


@dataclass(frozen=True)
class SchemeConfig:
    """Time step, stabilization coefficient and term switches."""

    dt: float
    stabilization: float = 0.0
    convection: bool = True

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.stabilization < 0.0:
            raise ValueError("stabilization coefficient must be nonnegative")


def default_stabilization(params: PhysicsParams) -> float:
    """2 * kappa * c2: comfortably dominates the anti-diffusive bulk term."""
    return 2.0 * params.kappa * params.c2


@dataclass(frozen=True)
class StepRecord:
    """Per-step energy-ledger entries, all evaluated at the start-of-step state."""

    dt: float
    grad_u_sq: float        # ||grad u_n||^2
    grad_mu_sq: float       # ||grad mu_n||^2
    hs_sq: float            # sum_k ||h e_k||^2 at state n
    martingale: float       # (sum_k h e_k dbeta_k, u_n)


@dataclass
class TrajectoryWindow:
    """A stretch of trajectory with the per-step entries needed to audit the
    energy balance: initial and final states plus the step records."""

    initial: SystemState
    final: SystemState
    records: list[StepRecord]


def step(
    state: SystemState,
    params: PhysicsParams,
    noise_model: NoiseModel | None,
    scheme: SchemeConfig,
    *,
    member: int = 0,
    increment: WienerIncrement | None = None,
    collect: bool = False,
) -> tuple[SystemState, StepRecord | None]:
    """Advance one step; optionally collect the energy-ledger record.

    The Wiener increment defaults to the counter-based draw keyed by
    (noise seed, member, state.step); passing ``increment`` overrides it
    (used for common-path and coarse-graining experiments).
    """
    grid = state.grid
    tab = tables(grid)
    dt = scheme.dt
    ux_hat, uy_hat = state.u.x.coeffs, state.u.y.coeffs
    phi_hat = state.phi.coeffs

    phi_fine = tab.fine_values(phi_hat)
    bulk_hat = tab.coeffs_from_fine(params.c1 * phi_fine**3 - params.c2 * phi_fine)
    mu_hat = params.nu1 * tab.k_sq * phi_hat + params.kappa * bulk_hat

    if scheme.convection:
        ux = tab.fine_values(ux_hat)
        uy = tab.fine_values(uy_hat)
        gpx = tab.fine_values(1j * tab.kx * phi_hat)
        gpy = tab.fine_values(1j * tab.ky * phi_hat)
        dux_dx = tab.fine_values(1j * tab.kx * ux_hat)
        dux_dy = tab.fine_values(1j * tab.ky * ux_hat)
        duy_dx = tab.fine_values(1j * tab.kx * uy_hat)
        duy_dy = tab.fine_values(1j * tab.ky * uy_hat)
        lap_phi = tab.fine_values(tab.k_sq * phi_hat)
        conv = leray_project(
            SpectralField(grid, tab.coeffs_from_fine(ux * dux_dx + uy * dux_dy)),
            SpectralField(grid, tab.coeffs_from_fine(ux * duy_dx + uy * duy_dy)),
        )
        capil = leray_project(
            SpectralField(grid, tab.coeffs_from_fine(params.nu1 * lap_phi * gpx)),
            SpectralField(grid, tab.coeffs_from_fine(params.nu1 * lap_phi * gpy)),
        )
        adv_hat = tab.coeffs_from_fine(ux * gpx + uy * gpy)
        rhs_u_x = dt * (capil.x.coeffs - conv.x.coeffs)
        rhs_u_y = dt * (capil.y.coeffs - conv.y.coeffs)
    else:
        ux = uy = None
        adv_hat = 0.0
        rhs_u_x = 0.0
        rhs_u_y = 0.0

    hs_sq = 0.0
    martingale = 0.0
    if noise_model is not None and noise_model.k_modes > 0:
        if increment is None:
            increment = sample_increment(noise_model, state.step, member, dt)
        weights = noise_model.sigma * increment.dbeta
        gx = np.tensordot(weights, noise_model.shapes_x, axes=(0, 0))
        gy = np.tensordot(weights, noise_model.shapes_y, axes=(0, 0))
        if noise_model.c1 != 0.0:
            if ux is None:
                ux = tab.fine_values(ux_hat)
                uy = tab.fine_values(uy_hat)
            mask = np.tensordot(weights, noise_model.masks, axes=(0, 0))
            mx_hat = tab.coeffs_from_fine(ux * mask)
            my_hat = tab.coeffs_from_fine(uy * mask)
            nz = leray_project(
                SpectralField(grid, noise_model.c0 * gx + noise_model.c1 * mx_hat),
                SpectralField(grid, noise_model.c0 * gy + noise_model.c1 * my_hat),
            )
        else:
            nz = leray_project(
                SpectralField(grid, noise_model.c0 * gx),
                SpectralField(grid, noise_model.c0 * gy),
            )
        rhs_u_x = rhs_u_x + nz.x.coeffs
        rhs_u_y = rhs_u_y + nz.y.coeffs
        if collect:
            hs_sq = _hs_norm_sq_fused(noise_model, tab, ux_hat, uy_hat, ux, uy)
            martingale = grid.length**2 * float(
                (np.sum(np.conj(nz.x.coeffs) * ux_hat) + np.sum(np.conj(nz.y.coeffs) * uy_hat)).real
            )

    u_div = 1.0 + dt * tab.k_sq
    new_ux = (ux_hat + rhs_u_x) / u_div
    new_uy = (uy_hat + rhs_u_y) / u_div

    s_coef = scheme.stabilization * params.nu2
    phi_div = 1.0 + dt * (params.nu1 * params.nu2 * tab.k_sq**2 + s_coef * tab.k_sq)
    phi_rhs = phi_hat + dt * (
        tab.k_sq * (s_coef * phi_hat - params.kappa * params.nu2 * bulk_hat) - adv_hat
    )
    new_phi = phi_rhs / phi_div
    new_phi[0, 0] = phi_hat[0, 0]  # phase mean is conserved exactly

    if not (np.isfinite(new_ux).all() and np.isfinite(new_uy).all() and np.isfinite(new_phi).all()):
        raise BlowUpError(state.step + 1, state.t + dt, last_good=state.copy())

    new_state = SystemState(
        u=VelocityField(SpectralField(grid, new_ux), SpectralField(grid, new_uy)),
        phi=SpectralField(grid, new_phi),
        t=state.t + dt,
        step=state.step + 1,
    )
    record = None
    if collect:
        record = StepRecord(
            dt=dt,
            grad_u_sq=grid.length**2
            * float(np.sum(tab.k_sq * (ux_hat.real**2 + ux_hat.imag**2 + uy_hat.real**2 + uy_hat.imag**2))),
            grad_mu_sq=grid.length**2 * float(np.sum(tab.k_sq * (mu_hat.real**2 + mu_hat.imag**2))),
            hs_sq=hs_sq,
            martingale=martingale,
        )
    return new_state, record


def _hs_norm_sq_fused(
    model: NoiseModel,
    tab,
    ux_hat: np.ndarray,
    uy_hat: np.ndarray,
    ux_fine: np.ndarray | None,
    uy_fine: np.ndarray | None,
) -> float:
    """Per-mode Hilbert-Schmidt sum reusing already-computed fine velocities."""
    length_sq = model.grid.length**2
    total = 0.0
    for k in range(model.k_modes):
        cx = model.c0 * model.shapes_x[k]
        cy = model.c0 * model.shapes_y[k]
        if model.c1 != 0.0:
            if ux_fine is None:
                ux_fine = tab.fine_values(ux_hat)
                uy_fine = tab.fine_values(uy_hat)
            cx = cx + model.c1 * tab.coeffs_from_fine(ux_fine * model.masks[k])
            cy = cy + model.c1 * tab.coeffs_from_fine(uy_fine * model.masks[k])
        proj = leray_project(SpectralField(model.grid, cx), SpectralField(model.grid, cy))
        total += model.sigma[k] ** 2 * length_sq * float(
            np.sum(proj.x.coeffs.real**2 + proj.x.coeffs.imag**2
                   + proj.y.coeffs.real**2 + proj.y.coeffs.imag**2)
        )
    return total


class Observer(Protocol):
    stride: int

    def observe(self, state: SystemState) -> None: ...


@dataclass
class ScalarObserver:
    """Records ``fn(state)`` every ``stride`` steps."""

    name: str
    fn: Callable[[SystemState], float]
    stride: int = 1
    times: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def observe(self, state: SystemState) -> None:
        self.times.append(state.t)
        self.values.append(float(self.fn(state)))


def _copy_state(state: SystemState) -> SystemState:
    return state.copy()


@dataclass
class SnapshotObserver:
    """Stores ``extract(state)`` every ``stride`` steps (states by default)."""

    stride: int = 32
    extract: Callable[[SystemState], object] = _copy_state
    snapshots: list[tuple[float, object]] = field(default_factory=list)

    def observe(self, state: SystemState) -> None:
        self.snapshots.append((state.t, self.extract(state)))


@dataclass
class SimulationResult:
    final: SystemState
    window: TrajectoryWindow | None = None


def simulate(
    initial: SystemState,
    params: PhysicsParams,
    noise_model: NoiseModel | None,
    scheme: SchemeConfig,
    horizon: float,
    observers: Iterable[Observer] = (),
    *,
    member: int = 0,
    collect_balance: bool = False,
    checkpoint_every: int = 0,
    checkpoint_sink: Callable[[SystemState], None] | None = None,
    increment_fn: Callable[[int], WienerIncrement] | None = None,
) -> SimulationResult:
    """Advance ``initial`` by ``horizon``; observers fire after steps at their
    stride (a zero horizon produces no observer output).

    On blow-up the last good state is handed to ``checkpoint_sink`` (when
    configured) before the abort propagates.
    """
    if horizon < 0.0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    n_steps = int(round(horizon / scheme.dt))
    if abs(n_steps * scheme.dt - horizon) > 1e-9 * max(1.0, abs(horizon)):
        raise ValueError(
            f"horizon {horizon} is not an integer number of steps of dt = {scheme.dt}"
        )
    state = initial.copy()
    records: list[StepRecord] = []
    observers = list(observers)
    try:
        for _ in range(n_steps):
            increment = increment_fn(state.step) if increment_fn is not None else None
            state, rec = step(
                state, params, noise_model, scheme,
                member=member, increment=increment, collect=collect_balance,
            )
            if collect_balance:
                records.append(rec)
            for obs in observers:
                if state.step % obs.stride == 0:
                    obs.observe(state)
            if checkpoint_every and checkpoint_sink and state.step % checkpoint_every == 0:
                checkpoint_sink(state)
    except BlowUpError as err:
        if checkpoint_sink is not None and err.last_good is not None:
            checkpoint_sink(err.last_good)
        raise
    window = TrajectoryWindow(initial.copy(), state.copy(), records) if collect_balance else None
    return SimulationResult(final=state, window=window)


@dataclass
class ConvergenceReport:
    """Strong-error refinement study against a common-path fine reference."""

    dts: np.ndarray
    errors: np.ndarray
    slope: float

    def lines(self) -> list[str]:
        rows = [f"  dt = {dt:.6g}   strong error = {e:.6g}" for dt, e in zip(self.dts, self.errors)]
        return rows + [f"  fitted order: {self.slope:.3f}"]


def em_order_probe(
    initial: SystemState,
    params: PhysicsParams,
    noise_model: NoiseModel,
    scheme: SchemeConfig,
    dt_list: Sequence[float],
    *,
    horizon: float = 0.5,
    members: int = 8,
    refine: int = 8,
    mode: tuple[int, int] | None = None,
) -> ConvergenceReport:
    """Strong order of the time discretization by self-convergence.

    Every coarse run consumes the same Brownian path as the fine reference
    (coarse increments are sums of fine ones).  The error is measured at the
    final time, either on one retained Fourier mode of the velocity (``mode``)
    or in the state norm ||u||_L2 + ||phi||_H1 otherwise, root-mean-squared
    over members.
    """
    dts = [float(d) for d in dt_list]
    if len(dts) < 3:
        raise ValueError("order probe needs at least 3 time steps")
    if any(a <= b for a, b in zip(dts, dts[1:])):
        raise ValueError("time steps must be strictly descending")
    dt_fine = dts[-1] / refine
    strides = []
    for d in dts:
        m = int(round(d / dt_fine))
        if abs(m * dt_fine - d) > 1e-12:
            raise ValueError(f"dt = {d} is not a multiple of the fine step {dt_fine}")
        strides.append(m)
    n_fine = int(round(horizon / dt_fine))

    sq_errors = np.zeros(len(dts))
    for member in range(members):
        fine = [sample_increment(noise_model, j, member, dt_fine) for j in range(n_fine)]
        ref = _drive(initial, params, noise_model, scheme, dt_fine, fine)
        for i, (d, m) in enumerate(zip(dts, strides)):
            chunks = [
                WienerIncrement(dt=d, dbeta=sum(inc.dbeta for inc in fine[j : j + m]))
                for j in range(0, n_fine, m)
            ]
            approx = _drive(initial, params, noise_model, scheme, d, chunks)
            sq_errors[i] += _probe_error(approx, ref, mode) ** 2 / members
    errors = np.sqrt(sq_errors)
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    return ConvergenceReport(dts=np.array(dts), errors=errors, slope=slope)


def _drive(
    initial: SystemState,
    params: PhysicsParams,
    noise_model: NoiseModel,
    scheme: SchemeConfig,
    dt: float,
    increments: Sequence[WienerIncrement],
) -> SystemState:
    state = initial.copy()
    sch = replace(scheme, dt=dt)
    for inc in increments:
        state, _ = step(state, params, noise_model, sch, increment=inc)
    return state


def _probe_error(a: SystemState, b: SystemState, mode: tuple[int, int] | None) -> float:
    if mode is not None:
        return abs(a.u.x.mode(*mode) - b.u.x.mode(*mode)) + abs(a.u.y.mode(*mode) - b.u.y.mode(*mode))
    du = VelocityField(
        SpectralField(a.grid, a.u.x.coeffs - b.u.x.coeffs),
        SpectralField(a.grid, a.u.y.coeffs - b.u.y.coeffs),
    )
    dphi = SpectralField(a.grid, a.phi.coeffs - b.phi.coeffs)
    return float(np.sqrt(l2_norm_sq(du) + sobolev_norm(dphi, 1.0) ** 2))
