"""Scalar observables, energy bookkeeping and trajectory seminorms.

The state space norm is ||U||^2 = ||u||_L2^2 + ||phi||_H1^2.  Energies are
stored in the Lyapunov convention

    E = 1/2 ||u||^2 + nu1/2 ||grad phi||^2 + kappa * integral F(phi),

which is half the doubled convention used in the balance audit; the factor 2
is applied only inside :func:`balance_residual`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .integrator import SystemState, TrajectoryWindow
from .spectral import (
    FieldLike,
    PhysicsParams,
    SpectralField,
    VelocityField,
    bulk_energy,
    grad_norm_sq,
    l2_norm_sq,
    sobolev_norm,
)


@dataclass
class ObservableSeries:
    """Scalar diagnostic sampled at strictly increasing times."""

    name: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ValueError(f"series {self.name}: times and values lengths differ")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0.0):
            raise ValueError(f"series {self.name}: times must be strictly increasing")


def write_observables_csv(path: str | Path, series: Sequence[ObservableSeries]) -> None:
    """One row per observation time, one column per observable, 17 significant
    digits so cross-run diffs are exact."""
    if not series:
        raise ValueError("no series to write")
    times = series[0].times
    for s in series[1:]:
        if len(s.times) != len(times) or not np.array_equal(s.times, times):
            raise ValueError("all series in one CSV must share the time grid")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t [time]"] + [f"{s.name} [1]" for s in series])
        for i, t in enumerate(times):
            writer.writerow([f"{t:.17g}"] + [f"{s.values[i]:.17g}" for s in series])


def read_observables_csv(path: str | Path) -> list[ObservableSeries]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"empty observables file {path}")
    names = [cell.split(" [")[0] for cell in rows[0]]
    data = np.array([[float(c) for c in row] for row in rows[1:]], dtype=np.float64)
    if data.size == 0:
        data = np.zeros((0, len(names)))
    return [
        ObservableSeries(name=names[j], times=data[:, 0], values=data[:, j])
        for j in range(1, len(names))
    ]


@dataclass(frozen=True)
class StateNorms:
    u_l2: float
    grad_phi_l2: float
    phi_h1: float
    state: float  # sqrt(||u||_L2^2 + ||phi||_H1^2)


def state_norms(state: SystemState) -> StateNorms:
    u_sq = l2_norm_sq(state.u)
    phi_h1 = sobolev_norm(state.phi, 1.0)
    return StateNorms(
        u_l2=float(np.sqrt(u_sq)),
        grad_phi_l2=float(np.sqrt(grad_norm_sq(state.phi))),
        phi_h1=phi_h1,
        state=float(np.sqrt(u_sq + phi_h1**2)),
    )


def state_norm_sq(state: SystemState) -> float:
    return l2_norm_sq(state.u) + sobolev_norm(state.phi, 1.0) ** 2


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    interfacial: float
    potential: float
    total: float


def energy_report(state: SystemState, params: PhysicsParams) -> EnergyReport:
    """Kinetic, interfacial and bulk contributions to the Lyapunov energy."""
    kinetic = 0.5 * l2_norm_sq(state.u)
    interfacial = 0.5 * params.nu1 * grad_norm_sq(state.phi)
    bulk = bulk_energy(state.phi, params)
    return EnergyReport(
        kinetic=kinetic,
        interfacial=interfacial,
        potential=bulk,
        total=kinetic + interfacial + bulk,
    )


def balance_residual(window: TrajectoryWindow, params: PhysicsParams) -> float:
    """Defect of the discrete energy balance over the window, normalized by the
    initial energy.

    In the doubled convention the balance reads

        2 E(end) + 2 * integral (||grad u||^2 + nu2 ||grad mu||^2)
            = 2 E(start) + 2 * sum (noise, u) + sum dt ||h||_HS^2.

    The martingale and quadratic-variation entries are the per-step records
    (start-of-step states, Ito convention); the dissipation integral is the
    trapezoid over the recorded start-of-step values closed with the final
    state.  The residual vanishes at first order in dt.
    """
    if len(window.records) < 2:
        raise ValueError("balance audit needs a window of at least 2 steps")
    e0 = 2.0 * energy_report(window.initial, params).total
    e1 = 2.0 * energy_report(window.final, params).total
    g = np.array(
        [r.grad_u_sq + params.nu2 * r.grad_mu_sq for r in window.records]
        + [_dissipation_density(window.final, params)]
    )
    dts = np.array([r.dt for r in window.records])
    dissipation = 2.0 * float(np.sum(dts * 0.5 * (g[:-1] + g[1:])))
    martingale = 2.0 * sum(r.martingale for r in window.records)
    ito = sum(r.dt * r.hs_sq for r in window.records)
    scale = abs(e0) if e0 != 0.0 else 1.0
    return ((e1 + dissipation) - (e0 + martingale + ito)) / scale


def _dissipation_density(state: SystemState, params: PhysicsParams) -> float:
    from .spectral import chemical_potential

    mu = chemical_potential(state.phi, params)
    return grad_norm_sq(state.u) + params.nu2 * grad_norm_sq(mu)


def martingale_total(window: TrajectoryWindow) -> float:
    """Accumulated noise work 2 * sum (h dW, u) over the window."""
    return 2.0 * sum(r.martingale for r in window.records)


def holder_seminorm(
    snapshots: Sequence[tuple[float, FieldLike]],
    alpha: float,
    order: float = -1.0,
) -> float:
    """Empirical Holder seminorm max over snapshot pairs of
    ||X(t) - X(t')||_{H^order} / |t - t'|^alpha.

    Snapshots on a stride subgrid give a lower bound of the seminorm of the
    underlying trajectory.
    """
    if len(snapshots) < 2:
        raise ValueError("Holder seminorm needs at least 2 snapshots")
    best = 0.0
    for i in range(len(snapshots)):
        t_i, f_i = snapshots[i]
        for j in range(i + 1, len(snapshots)):
            t_j, f_j = snapshots[j]
            gap = abs(t_j - t_i)
            if gap == 0.0:
                raise ValueError("snapshot times must be distinct")
            best = max(best, _field_diff_norm(f_i, f_j, order) / gap**alpha)
    return best


def _field_diff_norm(a: FieldLike, b: FieldLike, order: float) -> float:
    if isinstance(a, SpectralField):
        return sobolev_norm(SpectralField(a.grid, b.coeffs - a.coeffs), order)
    ax, ay = (a.x, a.y) if isinstance(a, VelocityField) else a
    bx, by = (b.x, b.y) if isinstance(b, VelocityField) else b
    return float(
        np.sqrt(
            _field_diff_norm(ax, bx, order) ** 2 + _field_diff_norm(ay, by, order) ** 2
        )
    )


@dataclass(frozen=True)
class MomentAccumulator:
    """Trapezoidal running integral of ||U(s)||^2 for one trajectory."""

    t: float = 0.0
    integral: float = 0.0
    last_norm_sq: float | None = None

    def current_ratio(self) -> float:
        return self.integral / self.t if self.t > 0.0 else 0.0


def accumulate_moment(acc: MomentAccumulator, state: SystemState, dt: float) -> MomentAccumulator:
    """Advance the running integral by one sample spaced ``dt`` after the last."""
    if dt < 0.0:
        raise ValueError("sample spacing must be nonnegative")
    norm_sq = state_norm_sq(state)
    if acc.last_norm_sq is None or dt == 0.0:
        return MomentAccumulator(t=acc.t, integral=acc.integral, last_norm_sq=norm_sq)
    return MomentAccumulator(
        t=acc.t + dt,
        integral=acc.integral + 0.5 * dt * (acc.last_norm_sq + norm_sq),
        last_norm_sq=norm_sq,
    )


@dataclass(frozen=True)
class EnsembleMoment:
    """Member-mean of running moment integrals, merged in fixed member order."""

    t: float
    mean_integral: float
    member_integrals: tuple[float, ...]


def merge_moment_accumulators(accs: Sequence[MomentAccumulator]) -> EnsembleMoment:
    if not accs:
        raise ValueError("nothing to merge")
    t = accs[0].t
    for a in accs[1:]:
        if abs(a.t - t) > 1e-12 * max(1.0, abs(t)):
            raise ValueError("moment accumulators cover different time spans")
    integrals = tuple(a.integral for a in accs)
    return EnsembleMoment(t=t, mean_integral=float(np.mean(integrals)), member_integrals=integrals)
