"""Truncated cylindrical Wiener forcing and its intensity operator.

The driving noise is W = sum_k e_k beta_k truncated to K modes, with
independent scalar Brownian motions beta_k.  The intensity operator maps the
k-th noise direction to a velocity-space field

    h(u, grad_phi) e_k = sigma_k * P( c0 * g_k + c1 * (u * m_k) ),

where P is the Leray projection, g_k are fixed unit-L2, zero-mean,
divergence-free profiles, and m_k are fixed masks with |m_k| <= 1 pointwise
(the product u * m_k is componentwise and dealiased).  The family ignores
grad_phi; the argument is kept so state-dependent alternatives can plug in
behind the same signature.

Growth and Lipschitz constants (closed form).  Since projection and band
truncation are orthogonal projections in L2 and |m_k| <= 1,

    ||h e_k|| <= sigma_k (c0 ||g_k|| + c1 ||u m_k||) <= sigma_k (c0 + c1 ||u||),

so with S2 = sum_k sigma_k^2,

    ||h||_HS^2 <= 2 S2 (c0^2 + c1^2 ||u||^2) <= K0 (1 + ||(u, grad_phi)||^2),
    K0 = 2 S2 max(c0^2, c1^2),

and, because the state enters linearly,

    ||h(u1) - h(u2)||_HS^2 = c1^2 sum_k sigma_k^2 ||P((u1-u2) m_k)||^2
                          <= K1 ||u1 - u2||^2,      K1 = S2 c1^2.

Increments are drawn from counter-based streams keyed by (seed, member,
step index), so ensembles parallelize with bit-reproducible paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox

from .spectral import (
    GridSpec,
    PhysicsParams,
    SpectralField,
    VelocityField,
    field_from_modes,
    grad_norm_sq,
    l2_norm_sq,
    lattice_modes,
    leray_project,
    tables,
)

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(frozen=True)
class NoiseModel:
    """Immutable configuration of the truncated Wiener forcing."""

    grid: GridSpec
    k_modes: int
    sigma: np.ndarray          # (K,) per-mode amplitudes, >= 0
    c0: float                  # additive weight
    c1: float                  # multiplicative weight
    seed: int
    shapes_x: np.ndarray = field(repr=False)  # (K, n, n) spectral profiles g_k
    shapes_y: np.ndarray = field(repr=False)
    masks: np.ndarray = field(repr=False)     # (K, fine, fine) physical masks m_k

    @property
    def sigma_sq_sum(self) -> float:
        return float(np.sum(self.sigma**2))

    @property
    def growth_constant(self) -> float:
        """Closed-form K0 = 2 * sum(sigma^2) * max(c0^2, c1^2)."""
        return 2.0 * self.sigma_sq_sum * max(self.c0**2, self.c1**2)

    @property
    def lipschitz_constant(self) -> float:
        """Closed-form K1 = sum(sigma^2) * c1^2."""
        return self.sigma_sq_sum * self.c1**2

    def shape_field(self, k: int) -> VelocityField:
        """The k-th profile g_k (1-based index)."""
        self._check_mode(k)
        return VelocityField(
            SpectralField(self.grid, self.shapes_x[k - 1].copy()),
            SpectralField(self.grid, self.shapes_y[k - 1].copy()),
        )

    def _check_mode(self, k: int) -> None:
        if not 1 <= k <= self.k_modes:
            raise ValueError(f"noise mode index {k} outside 1..{self.k_modes}")


def make_noise_model(
    grid: GridSpec,
    k_modes: int,
    sigma0: float,
    sigma_decay: float = 2.0,
    c0: float = 1.0,
    c1: float = 0.0,
    seed: int = 0,
) -> NoiseModel:
    """Build the default noise family with sigma_k = sigma0 * k^(-sigma_decay).

    Profiles g_k are unit-L2 transverse waves cos(m_k . x) along m_k-perp for
    the first K lattice wavevectors; masks are m_k(x) = cos(a_k . x + theta_k)
    with staggered wavevectors and golden-angle phases.
    """
    if k_modes < 0:
        raise ValueError("noise mode count must be nonnegative")
    if sigma0 < 0.0 or c0 < 0.0 or c1 < 0.0:
        raise ValueError("noise amplitudes must be nonnegative")
    n = grid.n
    tab = tables(grid)
    sigma = sigma0 * np.arange(1, k_modes + 1, dtype=np.float64) ** (-sigma_decay) \
        if k_modes else np.zeros(0)
    shapes_x = np.zeros((k_modes, n, n), dtype=np.complex128)
    shapes_y = np.zeros((k_modes, n, n), dtype=np.complex128)
    masks = np.zeros((k_modes, tab.fine_n, tab.fine_n), dtype=np.float64)

    modes = lattice_modes(2 * k_modes) if k_modes else []
    xf = np.arange(tab.fine_n) * (grid.length / tab.fine_n)
    xg, yg = xf[:, None], xf[None, :]
    two_pi_over_l = 2.0 * np.pi / grid.length
    for i in range(k_modes):
        mx, my = modes[i]
        norm = np.sqrt(mx * mx + my * my)
        # transverse wave: exactly divergence-free, zero mean, unit L2 norm
        amp = 1.0 / (np.sqrt(2.0) * grid.length)
        profile = field_from_modes(grid, {(mx, my): amp})
        u = leray_project(
            SpectralField(grid, profile.coeffs * (-my / norm)),
            SpectralField(grid, profile.coeffs * (mx / norm)),
        )
        shapes_x[i] = u.x.coeffs
        shapes_y[i] = u.y.coeffs
        ax, ay = modes[(i + k_modes // 2) % (2 * k_modes)]
        theta = (i + 1) * _GOLDEN_ANGLE
        masks[i] = np.cos(two_pi_over_l * (ax * xg + ay * yg) + theta)
    return NoiseModel(
        grid=grid,
        k_modes=k_modes,
        sigma=sigma,
        c0=float(c0),
        c1=float(c1),
        seed=int(seed),
        shapes_x=shapes_x,
        shapes_y=shapes_y,
        masks=masks,
    )


@dataclass(frozen=True)
class WienerIncrement:
    """K independent N(0, dt) draws for one time step."""

    dt: float
    dbeta: np.ndarray

    def __post_init__(self) -> None:
        if self.dt < 0.0:
            raise ValueError(f"time step must be nonnegative, got {self.dt}")


def sample_increment(model: NoiseModel, step_index: int, member: int, dt: float) -> WienerIncrement:
    """Draw the (seed, member, step)-keyed increment; pure in its arguments."""
    if dt < 0.0:
        raise ValueError(f"time step must be nonnegative, got {dt}")
    gen = Generator(Philox(key=_stream_key(model.seed, member), counter=[0, 0, 0, step_index]))
    draws = gen.standard_normal(model.k_modes)
    return WienerIncrement(dt=dt, dbeta=draws * np.sqrt(dt))


def _stream_key(seed: int, member: int) -> list[int]:
    mask = (1 << 64) - 1
    return [seed & mask, member & mask]


def h_apply(
    model: NoiseModel,
    u: VelocityField,
    grad_phi: tuple[SpectralField, SpectralField] | None,
    k: int,
) -> VelocityField:
    """Image of the k-th noise direction, sigma_k * P(c0 g_k + c1 u m_k)."""
    model._check_mode(k)
    tab = tables(model.grid)
    cx = model.c0 * model.shapes_x[k - 1]
    cy = model.c0 * model.shapes_y[k - 1]
    if model.c1 != 0.0:
        mask = model.masks[k - 1]
        cx = cx + model.c1 * tab.coeffs_from_fine(tab.fine_values(u.x.coeffs) * mask)
        cy = cy + model.c1 * tab.coeffs_from_fine(tab.fine_values(u.y.coeffs) * mask)
    proj = leray_project(SpectralField(model.grid, cx), SpectralField(model.grid, cy))
    proj.x.coeffs *= model.sigma[k - 1]
    proj.y.coeffs *= model.sigma[k - 1]
    return proj


def hs_norm_sq(
    model: NoiseModel,
    u: VelocityField,
    grad_phi: tuple[SpectralField, SpectralField] | None = None,
) -> float:
    """Squared Hilbert-Schmidt norm sum_k ||h e_k||_L2^2 at the given state."""
    return sum(
        l2_norm_sq(h_apply(model, u, grad_phi, k)) for k in range(1, model.k_modes + 1)
    )


@dataclass
class ConditionReport:
    """Outcome of the growth/Lipschitz/smallness checks on the noise family."""

    closed_form_k0: float
    empirical_k0: float
    closed_form_k1: float
    empirical_k1: float
    poincare_constant: float
    k0_bound: float
    growth_ok: bool          # empirical K0 within closed form
    lipschitz_ok: bool       # empirical K1 within closed form
    smallness_ok: bool       # C * K0 <= 2
    delta: float             # largest admissible slack in the mobility bound
    nu2_threshold: float     # mobility must exceed this
    nu2: float
    mobility_ok: bool

    @property
    def passed(self) -> bool:
        return self.growth_ok and self.lipschitz_ok and self.smallness_ok and self.mobility_ok

    def lines(self) -> list[str]:
        def mark(ok: bool) -> str:
            return "PASS" if ok else "FAIL"

        return [
            f"[{mark(self.growth_ok)}] growth bound: empirical K0 = {self.empirical_k0:.6g} "
            f"<= closed form {self.closed_form_k0:.6g}",
            f"[{mark(self.lipschitz_ok)}] Lipschitz bound: empirical K1 = {self.empirical_k1:.6g} "
            f"<= closed form {self.closed_form_k1:.6g}",
            f"[{mark(self.smallness_ok)}] noise smallness: C*K0 = "
            f"{self.poincare_constant * self.closed_form_k0:.6g} <= {self.k0_bound:.6g} "
            f"(C = {self.poincare_constant:.6g})",
            f"[{mark(self.mobility_ok)}] mobility margin: nu2 = {self.nu2:.6g} > "
            f"{self.nu2_threshold:.6g} (slack delta = {self.delta:.6g})",
        ]


def _state_norm_sq(u: VelocityField, phi: SpectralField) -> float:
    return l2_norm_sq(u) + grad_norm_sq(phi)


def mobility_margin(model: NoiseModel, nu1: float, nu2: float, kappa: float,
                    c1_pot: float, c2_pot: float, length: float) -> tuple[float, float, bool]:
    """Largest slack delta for the moment-bound budget, and the nu2 threshold.

    delta is the largest positive value with
        C*delta/2 + c2*delta^2/(2 L^2) + K0 <= min(nu1, kappa)   and
        c1*delta/L <= min(nu1, kappa),
    with torus Poincare constant C = 1 (zero-mean fields, smallest nonzero
    |k| = 2*pi/L).  The mobility must then satisfy 2*nu2 > C/(2*delta).
    Returns (delta, threshold, ok); delta = 0 means no admissible slack.
    """
    target = min(nu1, kappa)
    k0 = model.growth_constant
    if k0 >= target:
        return 0.0, np.inf, False
    a = c2_pot / (2.0 * length**2)
    b = 0.5
    c = k0 - target
    delta_quad = (-b + np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    delta_lin = target * length / c1_pot
    delta = min(delta_quad, delta_lin)
    threshold = 1.0 / (4.0 * delta)
    return float(delta), float(threshold), bool(nu2 > threshold)


def check_conditions(
    model: NoiseModel,
    physics: PhysicsParams,
    sample_states: Sequence,
    max_pairs: int = 64,
) -> ConditionReport:
    """Evaluate growth/Lipschitz ratios over sample states and the smallness
    and mobility inequalities with all constants logged in the report.

    ``sample_states`` is a nonempty sequence of objects with ``u`` and ``phi``
    attributes (simulation states).
    """
    if len(sample_states) == 0:
        raise ValueError("condition check needs at least one sample state")
    k0_emp = 0.0
    for s in sample_states:
        hs = hs_norm_sq(model, s.u, None)
        k0_emp = max(k0_emp, hs / (1.0 + _state_norm_sq(s.u, s.phi)))
    k1_emp = 0.0
    pairs = [
        (i, j)
        for i in range(len(sample_states))
        for j in range(i + 1, len(sample_states))
    ][:max_pairs]
    for i, j in pairs:
        a, b = sample_states[i], sample_states[j]
        du = VelocityField(
            SpectralField(model.grid, a.u.x.coeffs - b.u.x.coeffs),
            SpectralField(model.grid, a.u.y.coeffs - b.u.y.coeffs),
        )
        dphi = SpectralField(model.grid, a.phi.coeffs - b.phi.coeffs)
        denom = _state_norm_sq(du, dphi)
        if denom == 0.0:
            continue
        diff = 0.0
        for k in range(1, model.k_modes + 1):
            ha = h_apply(model, a.u, None, k)
            hb = h_apply(model, b.u, None, k)
            diff += l2_norm_sq(
                VelocityField(
                    SpectralField(model.grid, ha.x.coeffs - hb.x.coeffs),
                    SpectralField(model.grid, ha.y.coeffs - hb.y.coeffs),
                )
            )
        k1_emp = max(k1_emp, diff / denom)

    poincare = 1.0
    tol = 1.0 + 1e-12
    delta, threshold, mobility_ok = mobility_margin(
        model, physics.nu1, physics.nu2, physics.kappa,
        physics.c1, physics.c2, model.grid.length,
    )
    return ConditionReport(
        closed_form_k0=model.growth_constant,
        empirical_k0=k0_emp,
        closed_form_k1=model.lipschitz_constant,
        empirical_k1=k1_emp,
        poincare_constant=poincare,
        k0_bound=2.0,
        growth_ok=k0_emp <= model.growth_constant * tol,
        lipschitz_ok=k1_emp <= model.lipschitz_constant * tol + 1e-15,
        smallness_ok=poincare * model.growth_constant <= 2.0,
        delta=delta,
        nu2_threshold=threshold,
        nu2=physics.nu2,
        mobility_ok=mobility_ok,
    )


def path_seminorm_sq(model: NoiseModel, beta: np.ndarray) -> float:
    """Weighted path norm sum_k beta_k^2 / k^2 of a cumulative Wiener vector;
    a sanity diagnostic for path continuity in the auxiliary weighted space."""
    if len(beta) != model.k_modes:
        raise ValueError("cumulative Wiener vector length mismatch")
    k = np.arange(1, model.k_modes + 1, dtype=np.float64)
    return float(np.sum(np.asarray(beta) ** 2 / k**2))
