"""Independent oracles: direct Fourier sums and fine-grid quadrature.

Nothing here touches the package's FFT/padding machinery; fields are
evaluated by explicit exponential sums and integrals by rectangle quadrature
on a grid fine enough to make them exact for the polynomial degrees involved.
"""

from __future__ import annotations

import numpy as np

from chns.spectral import GridSpec, SpectralField, VelocityField


def mode_numbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT storage order, computed by hand."""
    return np.array([m if m <= n // 2 - 1 else m - n for m in range(n)], dtype=np.int64)


def eval_on_grid(field: SpectralField, m_points: int) -> np.ndarray:
    """Evaluate sum_k c_k exp(i k . x) on an m x m grid by direct summation."""
    grid = field.grid
    n = grid.n
    modes = mode_numbers(n)
    x = np.arange(m_points) * (grid.length / m_points)
    scale = 2.0 * np.pi / grid.length
    ex = np.exp(1j * scale * np.outer(x, modes))  # (M, n)
    values = ex @ field.coeffs @ ex.T
    return values.real


def forward_coeffs(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Direct-sum forward transform of fine-grid values, truncated to the band."""
    m_points = values.shape[0]
    modes = mode_numbers(grid.n)
    x = np.arange(m_points) * (grid.length / m_points)
    scale = 2.0 * np.pi / grid.length
    ex = np.exp(-1j * scale * np.outer(modes, x))  # (n, M)
    coeffs = ex @ values @ ex.T / m_points**2
    band = grid.max_mode
    mask = (np.abs(modes)[:, None] <= band) & (np.abs(modes)[None, :] <= band)
    return coeffs * mask


def integrate(values: np.ndarray, length: float) -> float:
    m_points = values.shape[0]
    return float(np.sum(values)) * (length / m_points) ** 2


def gradient_coeffs(field: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """i k_x c_k and i k_y c_k with wavenumbers built by explicit loop."""
    grid = field.grid
    modes = mode_numbers(grid.n)
    scale = 2.0 * np.pi / grid.length
    kx = (modes * scale)[:, None]
    ky = (modes * scale)[None, :]
    return 1j * kx * field.coeffs, 1j * ky * field.coeffs


def laplacian_multiplier(grid: GridSpec) -> np.ndarray:
    modes = mode_numbers(grid.n)
    scale = 2.0 * np.pi / grid.length
    return (modes[:, None] * scale) ** 2 + (modes[None, :] * scale) ** 2


def l2_norm_quadrature(field: SpectralField, m_points: int | None = None) -> float:
    m_points = m_points or 4 * field.grid.n
    v = eval_on_grid(field, m_points)
    return float(np.sqrt(integrate(v * v, field.grid.length)))


def convection_form(u: VelocityField, v: VelocityField, w: VelocityField) -> float:
    """integral ((u . grad) v) . w dx by fine-grid quadrature."""
    grid = u.grid
    m_points = 4 * grid.n
    ux = eval_on_grid(u.x, m_points)
    uy = eval_on_grid(u.y, m_points)
    gvx_x, gvx_y = gradient_coeffs(v.x)
    gvy_x, gvy_y = gradient_coeffs(v.y)
    conv_x = ux * eval_on_grid(SpectralField(grid, gvx_x), m_points) + uy * eval_on_grid(
        SpectralField(grid, gvx_y), m_points
    )
    conv_y = ux * eval_on_grid(SpectralField(grid, gvy_x), m_points) + uy * eval_on_grid(
        SpectralField(grid, gvy_y), m_points
    )
    wx = eval_on_grid(w.x, m_points)
    wy = eval_on_grid(w.y, m_points)
    return integrate(conv_x * wx + conv_y * wy, grid.length)


def scalar_advection_form(u: VelocityField, phi: SpectralField, rho: SpectralField) -> float:
    """integral (u . grad phi) rho dx by fine-grid quadrature."""
    grid = u.grid
    m_points = 4 * grid.n
    gx, gy = gradient_coeffs(phi)
    adv = eval_on_grid(u.x, m_points) * eval_on_grid(SpectralField(grid, gx), m_points) + eval_on_grid(
        u.y, m_points
    ) * eval_on_grid(SpectralField(grid, gy), m_points)
    return integrate(adv * eval_on_grid(rho, m_points), grid.length)


def capillary_form(phi: SpectralField, w: VelocityField, nu1: float) -> float:
    """integral nu1 (-Laplace phi) (grad phi . w) dx by fine-grid quadrature."""
    grid = phi.grid
    m_points = 4 * grid.n
    lap = eval_on_grid(SpectralField(grid, laplacian_multiplier(grid) * phi.coeffs), m_points)
    gx, gy = gradient_coeffs(phi)
    flux = eval_on_grid(SpectralField(grid, gx), m_points) * eval_on_grid(w.x, m_points) + eval_on_grid(
        SpectralField(grid, gy), m_points
    ) * eval_on_grid(w.y, m_points)
    return nu1 * integrate(lap * flux, grid.length)


def random_band_field(
    grid: GridSpec, rng: np.random.Generator, max_mode: int | None = None, amplitude: float = 1.0
) -> SpectralField:
    """Random Hermitian field with flat spectrum up to max_mode."""
    cap = max_mode if max_mode is not None else grid.max_mode
    cap = min(cap, grid.max_mode)
    n = grid.n
    coeffs = np.zeros((n, n), dtype=np.complex128)
    for mx in range(-cap, cap + 1):
        for my in range(0, cap + 1):
            if my == 0 and mx <= 0:
                continue
            z = amplitude * (rng.standard_normal() + 1j * rng.standard_normal())
            coeffs[mx % n, my % n] = z
            coeffs[(-mx) % n, (-my) % n] = np.conj(z)
    return SpectralField(grid, coeffs)


def random_velocity(
    grid: GridSpec, rng: np.random.Generator, max_mode: int | None = None, amplitude: float = 1.0
) -> VelocityField:
    from chns.spectral import leray_project

    return leray_project(
        random_band_field(grid, rng, max_mode, amplitude),
        random_band_field(grid, rng, max_mode, amplitude),
    )
