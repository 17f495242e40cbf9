"""Time averaging toward candidate invariant measures, plus tightness and
initial-data-continuity probes for the transition semigroup.

Time averages of observables along a trajectory estimate the window-averaged
push-forward laws; agreement of averages across nested windows is the
practical stationarity signal.  Tightness is audited through the empirical
exit fractions of the state norm against their second-moment envelope, an
inequality that holds pathwise on the same samples.  Continuity in the
initial data is probed with common random numbers: perturbed and unperturbed
ensembles share noise paths so the response to the perturbation is visible at
small ensemble sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diagnostics import energy_report, state_norms
from .integrator import SchemeConfig, SystemState, simulate
from .noise import NoiseModel
from .spectral import (
    GridSpec,
    PhysicsParams,
    SpectralField,
    field_from_modes,
    inner,
)

Samples = Sequence[tuple[float, SystemState]]

_NORM_KINDS = ("u_l2_sq", "grad_phi_l2_sq", "phi_h1_sq", "state_sq")
_ENERGY_KINDS = ("kinetic", "interfacial", "potential", "total")


@dataclass(frozen=True)
class ObservableSpec:
    """A scalar observable of the state.

    kind 'state_norm'  : squared norms; ``which`` selects u_l2_sq,
                         grad_phi_l2_sq, phi_h1_sq or state_sq
    kind 'energy'      : kinetic, interfacial, potential or total
                         (needs ``params``)
    kind 'linear'      : scale * <component, unit cosine wave at ``mode``>
    kind 'bounded'     : tanh of the linear functional (bounded by 1)
    """

    kind: str
    name: str = ""
    which: str = "state_sq"
    component: str = "phi"
    mode: tuple[int, int] = (1, 0)
    scale: float = 1.0
    params: PhysicsParams | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("state_norm", "energy", "linear", "bounded"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind == "state_norm" and self.which not in _NORM_KINDS:
            raise ValueError(f"unknown norm observable {self.which!r}")
        if self.kind == "energy":
            if self.which not in _ENERGY_KINDS:
                raise ValueError(f"unknown energy observable {self.which!r}")
            if self.params is None:
                raise ValueError("energy observables need physics parameters")
        if self.component not in ("phi", "u_x", "u_y"):
            raise ValueError(f"unknown state component {self.component!r}")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self) -> str:
        if self.kind in ("state_norm", "energy"):
            return self.which
        mx, my = self.mode
        return f"{self.kind}_{self.component}_{mx}_{my}"

    @property
    def bound(self) -> float | None:
        """Known uniform bound of the observable, if any."""
        return abs(self.scale) if self.kind == "bounded" else None


def _test_field(grid: GridSpec, mode: tuple[int, int]) -> SpectralField:
    # unit-L2 cosine wave at the requested lattice mode
    amp = 1.0 / (np.sqrt(2.0) * grid.length)
    return field_from_modes(grid, {mode: amp})


def evaluate_observable(spec: ObservableSpec, state: SystemState) -> float:
    if spec.kind == "state_norm":
        n = state_norms(state)
        return {
            "u_l2_sq": n.u_l2**2,
            "grad_phi_l2_sq": n.grad_phi_l2**2,
            "phi_h1_sq": n.phi_h1**2,
            "state_sq": n.state**2,
        }[spec.which]
    if spec.kind == "energy":
        rep = energy_report(state, spec.params)
        return getattr(rep, spec.which)
    comp = {"phi": state.phi, "u_x": state.u.x, "u_y": state.u.y}[spec.component]
    value = spec.scale * inner(comp, _test_field(state.grid, spec.mode))
    return float(np.tanh(value)) if spec.kind == "bounded" else value


@dataclass
class EmpiricalMeasure:
    """Window time-average of one observable with its histogram."""

    name: str
    t_start: float
    t_end: float
    mean: float
    variance: float
    n_samples: int
    bin_edges: np.ndarray
    counts: np.ndarray


def _normalize_members(samples) -> list[list[tuple[float, SystemState]]]:
    if not samples:
        return []
    first = samples[0]
    if isinstance(first, tuple) and len(first) == 2 and isinstance(first[1], SystemState):
        return [list(samples)]
    return [list(member) for member in samples]


def _window_values(
    members: list[list[tuple[float, SystemState]]],
    spec: ObservableSpec,
    t_start: float,
    t_end: float,
) -> np.ndarray:
    values = []
    for member in members:
        for t, state in member:
            if t_start <= t < t_end:
                values.append(evaluate_observable(spec, state))
    return np.asarray(values, dtype=np.float64)


def kb_average(
    samples,
    spec: ObservableSpec,
    t_start: float,
    t_end: float,
    bins: int = 32,
) -> EmpiricalMeasure:
    """Time average of the observable over the half-open window [t_start, t_end).

    ``samples`` is a list of (t, state) pairs, or a list of such lists (one per
    ensemble member); members are pooled, which is the member-mean for equal
    sample counts.
    """
    if t_end <= t_start or t_start < 0.0:
        raise ValueError(f"bad averaging window [{t_start}, {t_end})")
    members = _normalize_members(samples)
    values = _window_values(members, spec, t_start, t_end)
    if values.size == 0:
        raise ValueError(f"no samples in window [{t_start}, {t_end})")
    lo, hi = float(np.min(values)), float(np.max(values))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return EmpiricalMeasure(
        name=spec.name,
        t_start=t_start,
        t_end=t_end,
        mean=float(np.mean(values)),
        variance=float(np.var(values)),
        n_samples=int(values.size),
        bin_edges=edges,
        counts=counts,
    )


@dataclass
class WindowComparison:
    """Agreement of window averages across a family of windows."""

    name: str
    windows: list[tuple[float, float]]
    means: np.ndarray
    max_relative_discrepancy: float
    stationary: bool
    threshold: float


def convergence_diagnostic(
    samples,
    spec: ObservableSpec,
    windows: Sequence[tuple[float, float]],
    threshold: float = 0.05,
) -> WindowComparison:
    """Compare kb_average means across windows; flags stationarity when the
    largest pairwise discrepancy, relative to the largest mean magnitude,
    stays below the threshold."""
    if len(windows) < 2:
        raise ValueError("window comparison needs at least 2 windows")
    means = np.array(
        [kb_average(samples, spec, t0, t1).mean for t0, t1 in windows], dtype=np.float64
    )
    scale = float(np.max(np.abs(means)))
    spread = float(np.max(means) - np.min(means))
    rel = spread / scale if scale > 0.0 else 0.0
    return WindowComparison(
        name=spec.name,
        windows=list(windows),
        means=means,
        max_relative_discrepancy=rel,
        stationary=rel <= threshold,
        threshold=threshold,
    )


@dataclass
class TightnessProfile:
    radii: np.ndarray
    exit_fraction: np.ndarray     # fraction of samples with ||U|| > R
    envelope: np.ndarray          # (time-mean ||U||^2) / R^2
    mean_norm_sq: float

    def chebyshev_holds(self) -> bool:
        return bool(np.all(self.exit_fraction <= self.envelope + 1e-15))


def tightness_profile(samples, radii: Sequence[float]) -> TightnessProfile:
    """Empirical exit fractions of the state norm with the Chebyshev envelope
    computed from the same samples."""
    members = _normalize_members(samples)
    norms = np.asarray(
        [state_norms(s).state for member in members for _, s in member], dtype=np.float64
    )
    if norms.size == 0:
        raise ValueError("tightness profile needs at least one sample")
    radii_arr = np.asarray(list(radii), dtype=np.float64)
    if radii_arr.size == 0 or np.any(radii_arr < 0.0):
        raise ValueError("radii must be a nonempty nonnegative sequence")
    mean_sq = float(np.mean(norms**2))
    fractions = np.array([float(np.mean(norms > r)) for r in radii_arr])
    with np.errstate(divide="ignore"):
        envelope = np.where(radii_arr > 0.0, mean_sq / np.where(radii_arr > 0.0, radii_arr, 1.0) ** 2, np.inf)
    return TightnessProfile(
        radii=radii_arr,
        exit_fraction=fractions,
        envelope=envelope,
        mean_norm_sq=mean_sq,
    )


@dataclass
class FellerReport:
    """Response of an ensemble-averaged observable to initial-data wiggles."""

    amplitudes: np.ndarray        # descending perturbation sizes (0 excluded)
    gaps: np.ndarray              # |estimate(eps) - estimate(0)|
    std_errors: np.ndarray        # Monte-Carlo SE of each gap (common paths)
    mode: tuple[int, int]
    base_estimate: float

    def monotone_within(self, n_se: float = 2.0) -> bool:
        """Gaps decrease along decreasing amplitude, within n_se standard errors."""
        for i in range(len(self.gaps) - 1):
            slack = n_se * float(np.hypot(self.std_errors[i], self.std_errors[i + 1]))
            if self.gaps[i + 1] > self.gaps[i] + slack:
                return False
        return True


def perturb_initial(state: SystemState, mode: tuple[int, int], amplitude: float) -> SystemState:
    """Add a phase-field wiggle of unit H1 norm scaled by ``amplitude`` at the
    given lattice mode, leaving the phase mean untouched."""
    grid = state.grid
    k_sq = float(mode[0] ** 2 + mode[1] ** 2) * (2.0 * np.pi / grid.length) ** 2
    if k_sq == 0.0:
        raise ValueError("perturbation mode must be nonzero")
    amp = amplitude / (np.sqrt(2.0 * (1.0 + k_sq)) * grid.length)
    bump = field_from_modes(grid, {mode: amp})
    out = state.copy()
    out.phi.coeffs += bump.coeffs
    return out


def feller_probe(
    initial: SystemState,
    mode: tuple[int, int],
    amplitudes: Sequence[float],
    spec: ObservableSpec,
    t_eval: float,
    members: int,
    params: PhysicsParams,
    noise_model: NoiseModel,
    scheme: SchemeConfig,
) -> FellerReport:
    """Common-random-number estimate of the observable's sensitivity to an
    initial perturbation; amplitude 0 gives an exactly zero gap.

    The observable should be bounded so its expectations are finite for free.
    """
    if members < 2:
        raise ValueError("the probe needs an ensemble of at least 2 members")
    amps = [float(a) for a in amplitudes]
    if any(a < 0.0 for a in amps):
        raise ValueError("amplitudes must be nonnegative")

    base_vals = np.array(
        [_terminal_value(initial, spec, t_eval, m, params, noise_model, scheme) for m in range(members)]
    )
    gaps, ses = [], []
    for a in amps:
        start = perturb_initial(initial, mode, a) if a != 0.0 else initial
        vals = np.array(
            [_terminal_value(start, spec, t_eval, m, params, noise_model, scheme) for m in range(members)]
        )
        diffs = vals - base_vals
        gaps.append(abs(float(np.mean(diffs))))
        ses.append(float(np.std(diffs, ddof=1) / np.sqrt(members)))
    return FellerReport(
        amplitudes=np.asarray(amps),
        gaps=np.asarray(gaps),
        std_errors=np.asarray(ses),
        mode=mode,
        base_estimate=float(np.mean(base_vals)),
    )


def _terminal_value(
    initial: SystemState,
    spec: ObservableSpec,
    t_eval: float,
    member: int,
    params: PhysicsParams,
    noise_model: NoiseModel,
    scheme: SchemeConfig,
) -> float:
    result = simulate(initial, params, noise_model, scheme, t_eval, member=member)
    return evaluate_observable(spec, result.final)
