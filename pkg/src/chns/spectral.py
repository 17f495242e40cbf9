"""Fourier representation of fields on the 2-D torus and the spatial operators.

Fields live on a periodic square [0, L)^2 and are stored as truncated Fourier
coefficients.  The retained band is max(|kx|, |ky|) <= N/2 - 1 in integer mode
units: the Nyquist modes are zeroed so that every retained mode has an exact
conjugate partner and all derivative operators are exactly skew-adjoint.

Coefficients use the mean convention: ``coeffs[0, 0]`` is the spatial mean of
the field.  All pointwise products (convection, the double-well nonlinearity)
are evaluated on a grid zero-padded by ``dealias_pad`` and re-truncated, which
is alias-free for products of up to three band-limited factors when the pad
factor is 2.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Spectral grid: ``n`` modes per dimension on a periodic box of size ``length``.

    ``dealias_pad`` is the zero-padding factor used for pointwise products;
    the default 2 is exact through cubic nonlinearities.  ``dealias_pad=1``
    disables dealiasing (products alias; useful only as a designed failure).
    """

    n: int
    length: float = 2.0 * np.pi
    dealias_pad: int = 2

    def __post_init__(self) -> None:
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")
        if self.length <= 0.0:
            raise ValueError(f"domain period must be positive, got {self.length}")
        if self.dealias_pad < 1:
            raise ValueError(f"dealias_pad must be >= 1, got {self.dealias_pad}")

    @property
    def max_mode(self) -> int:
        """Largest retained integer wavenumber per axis (Nyquist excluded)."""
        return self.n // 2 - 1

    @property
    def fine_n(self) -> int:
        return self.n * self.dealias_pad

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Collocation coordinates (x, y) as (n, 1) and (1, n) arrays."""
        x = np.arange(self.n) * (self.length / self.n)
        return x[:, None], x[None, :]


class _GridTables:
    """Precomputed wavenumber arrays and index maps for one GridSpec."""

    def __init__(self, grid: GridSpec) -> None:
        n = grid.n
        modes = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)  # 0..n/2-1, -n/2..-1
        self.mx = modes[:, None]
        self.my = modes[None, :]
        scale = 2.0 * np.pi / grid.length
        self.kx = self.mx * scale
        self.ky = self.my * scale
        self.k_sq = self.kx**2 + self.ky**2
        with np.errstate(divide="ignore"):
            inv = np.where(self.k_sq > 0.0, 1.0 / np.where(self.k_sq > 0.0, self.k_sq, 1.0), 0.0)
        self.inv_k_sq = inv
        b = grid.max_mode
        self.band = (np.abs(self.mx) <= b) & (np.abs(self.my) <= b)

        # Row/column index maps between the coarse full spectrum and the
        # padded half spectrum (rfft2 layout on the fine grid).
        m = grid.fine_n
        self.fine_n = m
        rows = np.concatenate([np.arange(0, n // 2), np.arange(m - n // 2, m)])
        self.fine_rows = rows  # coarse row i -> fine row fine_rows[i] (Nyquist row lands unused)
        self.half_cols = n // 2 + 1
        # map for rebuilding the negative-ky columns from an rfft2 half spectrum
        self.conj_rows = (-np.arange(n)) % n
        self.cell_area_fine = (grid.length / m) ** 2

        # half-spectrum (rfft2) layout companions, used by the hot loop
        hc = self.half_cols
        self.kx_half = self.kx  # broadcasts over columns
        self.ky_half = self.ky[:, :hc]
        self.k_sq_half = self.k_sq[:, :hc]
        self.band_half = self.band[:, :hc]
        weight = np.full((1, hc), 2.0)
        weight[0, 0] = 1.0
        self.col_weight = weight  # multiplicity of each half column in the full spectrum

    # half-spectrum transforms (hot path) ----------------------------------

    def half_of(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs[:, : self.half_cols].copy()

    def fine_values_half(self, half: np.ndarray) -> np.ndarray:
        """Padded physical values from a coarse half spectrum."""
        m = self.fine_n
        buf = np.zeros((m, m // 2 + 1), dtype=np.complex128)
        buf[self.fine_rows, : self.half_cols] = half
        buf *= m * m
        return np.fft.irfft2(buf, s=(m, m))

    def half_from_fine(self, values: np.ndarray) -> np.ndarray:
        """Truncated coarse half spectrum of padded physical values."""
        m = self.fine_n
        fine_half = np.fft.rfft2(values)
        out = fine_half[self.fine_rows, : self.half_cols]
        out *= self.band_half / (m * m)
        return out

    def sum_sq_half(self, half: np.ndarray, weight: np.ndarray | float = 1.0) -> float:
        """sum over the full spectrum of weight * |c_k|^2, from the half layout."""
        return float(np.sum(self.col_weight * weight * (half.real**2 + half.imag**2)))

    # fine-grid transforms ------------------------------------------------

    def fine_values(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate a coefficient array on the padded physical grid."""
        m = self.fine_n
        half = np.zeros((m, m // 2 + 1), dtype=np.complex128)
        half[self.fine_rows, : self.half_cols] = coeffs[:, : self.half_cols]
        return np.fft.irfft2(half * (m * m), s=(m, m))

    def coeffs_from_fine(self, values: np.ndarray) -> np.ndarray:
        """Transform padded physical values back to truncated coefficients."""
        m = self.fine_n
        half_fine = np.fft.rfft2(values) / (m * m)
        n = len(self.conj_rows)
        half = half_fine[self.fine_rows, : self.half_cols]
        return self.full_from_half(half, n)

    def full_from_half(self, half: np.ndarray, n: int) -> np.ndarray:
        """Expand an rfft2-style half spectrum to the full Hermitian array.

        The ky = 0 column is symmetrized across rows (rfft2 leaves it exact
        only to rounding), so the result is Hermitian to the last bit.
        """
        full = np.zeros((n, n), dtype=np.complex128)
        full[:, : n // 2 + 1] = half
        cols = np.arange(1, n // 2)
        full[:, n - cols] = np.conj(half[self.conj_rows][:, cols])
        col0 = full[:, 0]
        full[:, 0] = 0.5 * (col0 + np.conj(col0[self.conj_rows]))
        full[0, 0] = full[0, 0].real
        full *= self.band
        return full


_TABLE_CACHE: dict[GridSpec, _GridTables] = {}
_TABLE_LOCK = threading.Lock()


def tables(grid: GridSpec) -> _GridTables:
    tab = _TABLE_CACHE.get(grid)
    if tab is None:
        with _TABLE_LOCK:
            tab = _TABLE_CACHE.get(grid)
            if tab is None:
                tab = _GridTables(grid)
                _TABLE_CACHE[grid] = tab
    return tab


@dataclass
class SpectralField:
    """Real scalar field stored as Hermitian-symmetric truncated coefficients."""

    grid: GridSpec
    coeffs: np.ndarray

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def mode(self, mx: int, my: int) -> complex:
        """Coefficient of exp(i*(2*pi/L)*(mx*x + my*y))."""
        return complex(self.coeffs[mx % self.grid.n, my % self.grid.n])


@dataclass
class VelocityField:
    """Divergence-free, zero-mean vector field (a pair of scalar fields)."""

    x: SpectralField
    y: SpectralField

    @property
    def grid(self) -> GridSpec:
        return self.x.grid

    def copy(self) -> "VelocityField":
        return VelocityField(self.x.copy(), self.y.copy())


FieldLike = Union[SpectralField, VelocityField, tuple]


@dataclass(frozen=True)
class PhysicsParams:
    """Interface stiffness nu1, mobility nu2, potential strength kappa and
    double-well coefficients c1, c2 (bulk force c1*phi^3 - c2*phi).

    kappa = 0 switches the bulk force off entirely, exposing the linear
    relaxation regime used by the exact-solution convergence checks.
    """

    nu1: float
    nu2: float
    kappa: float
    c1: float
    c2: float

    def __post_init__(self) -> None:
        for name in ("nu1", "nu2", "c1", "c2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"physics parameter {name} must be positive")
        if self.kappa < 0.0:
            raise ValueError("physics parameter kappa must be nonnegative")


def zero_field(grid: GridSpec) -> SpectralField:
    return SpectralField(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))


def zero_velocity(grid: GridSpec) -> VelocityField:
    return VelocityField(zero_field(grid), zero_field(grid))


def to_spectral(values: np.ndarray, grid: GridSpec) -> SpectralField:
    """Forward transform of collocation values, truncated to the retained band."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.n, grid.n):
        raise ValueError(f"expected {(grid.n, grid.n)} collocation values, got {values.shape}")
    tab = tables(grid)
    half = np.fft.rfft2(values) / (grid.n * grid.n)
    return SpectralField(grid, tab.full_from_half(half, grid.n))


def to_physical(field: SpectralField) -> np.ndarray:
    """Collocation values on the grid's own n x n nodes."""
    n = field.grid.n
    half = field.coeffs[:, : n // 2 + 1] * (n * n)
    return np.fft.irfft2(half, s=(n, n))


def field_from_modes(grid: GridSpec, entries: dict[tuple[int, int], complex]) -> SpectralField:
    """Build a field from ``{(mx, my): coefficient}``; conjugate modes are filled in."""
    f = zero_field(grid)
    n = grid.n
    for (mx, my), c in entries.items():
        if max(abs(mx), abs(my)) > grid.max_mode:
            raise ValueError(f"mode {(mx, my)} outside retained band")
        if (mx, my) == (0, 0):
            f.coeffs[0, 0] += np.real(c)
        else:
            f.coeffs[mx % n, my % n] += c
            f.coeffs[(-mx) % n, (-my) % n] += np.conj(c)
    return f


def spatial_mean(field: SpectralField) -> float:
    return float(field.coeffs[0, 0].real)


# norms and pairings -------------------------------------------------------


def _coeff_sum_sq(coeffs: np.ndarray, weight: np.ndarray | float = 1.0) -> float:
    return float(np.sum(weight * (coeffs.real**2 + coeffs.imag**2)))


def l2_norm_sq(f: FieldLike) -> float:
    """Squared L2 norm; Parseval-exact."""
    if isinstance(f, SpectralField):
        return f.grid.length**2 * _coeff_sum_sq(f.coeffs)
    parts = (f.x, f.y) if isinstance(f, VelocityField) else f
    return sum(l2_norm_sq(p) for p in parts)


def l2_norm(f: FieldLike) -> float:
    return float(np.sqrt(l2_norm_sq(f)))


def sobolev_norm(f: FieldLike, s: float) -> float:
    """Hilbert-scale Sobolev norm (sum_k (1+|k|^2)^s |f_k|^2)^(1/2).

    Quadrature-consistent: s = 0 reproduces the physical L2 norm.  Negative
    orders are allowed.
    """
    if isinstance(f, SpectralField):
        tab = tables(f.grid)
        w = (1.0 + tab.k_sq) ** s
        return float(np.sqrt(f.grid.length**2 * _coeff_sum_sq(f.coeffs, w)))
    parts = (f.x, f.y) if isinstance(f, VelocityField) else f
    return float(np.sqrt(sum(sobolev_norm(p, s) ** 2 for p in parts)))


def grad_norm_sq(f: FieldLike) -> float:
    """Squared L2 norm of the gradient, via the |k|^2 multiplier."""
    if isinstance(f, SpectralField):
        tab = tables(f.grid)
        return f.grid.length**2 * _coeff_sum_sq(f.coeffs, tab.k_sq)
    parts = (f.x, f.y) if isinstance(f, VelocityField) else f
    return sum(grad_norm_sq(p) for p in parts)


def inner(a: FieldLike, b: FieldLike) -> float:
    """L2 inner product, Parseval-exact for band-limited fields."""
    if isinstance(a, SpectralField) and isinstance(b, SpectralField):
        return float(a.grid.length**2 * np.sum(np.conj(a.coeffs) * b.coeffs).real)
    ax, ay = (a.x, a.y) if isinstance(a, VelocityField) else a
    bx, by = (b.x, b.y) if isinstance(b, VelocityField) else b
    return inner(ax, bx) + inner(ay, by)


# linear operators ---------------------------------------------------------


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    tab = tables(f.grid)
    return (
        SpectralField(f.grid, 1j * tab.kx * f.coeffs),
        SpectralField(f.grid, 1j * tab.ky * f.coeffs),
    )


def divergence(x: SpectralField, y: SpectralField) -> SpectralField:
    tab = tables(x.grid)
    return SpectralField(x.grid, 1j * (tab.kx * x.coeffs + tab.ky * y.coeffs))


def max_divergence(u: VelocityField) -> float:
    """max_k |k . u_hat(k)|, the pointwise spectral divergence residual."""
    tab = tables(u.grid)
    d = tab.kx * u.x.coeffs + tab.ky * u.y.coeffs
    return float(np.max(np.abs(d)))


def leray_project(x: SpectralField, y: SpectralField) -> VelocityField:
    """Helmholtz-Leray projection onto divergence-free, zero-mean fields.

    Applies I - k k^T / |k|^2 modewise and zeroes the k = 0 mode; idempotent
    and self-adjoint in L2.
    """
    if x.grid != y.grid:
        raise ValueError("velocity components on different grids")
    tab = tables(x.grid)
    s = (tab.kx * x.coeffs + tab.ky * y.coeffs) * tab.inv_k_sq
    px = x.coeffs - tab.kx * s
    py = y.coeffs - tab.ky * s
    px[0, 0] = 0.0
    py[0, 0] = 0.0
    return VelocityField(SpectralField(x.grid, px), SpectralField(x.grid, py))


def stokes_operator(u: VelocityField) -> VelocityField:
    """Projected negative Laplacian -P(Laplace u); modewise |k|^2 then projection."""
    tab = tables(u.grid)
    return leray_project(
        SpectralField(u.grid, tab.k_sq * u.x.coeffs),
        SpectralField(u.grid, tab.k_sq * u.y.coeffs),
    )


def neg_laplacian(f: SpectralField) -> SpectralField:
    """-Laplace f, the modewise |k|^2 multiplier."""
    tab = tables(f.grid)
    return SpectralField(f.grid, tab.k_sq * f.coeffs)


# nonlinear operators (dealiased) -------------------------------------------


def double_well_derivative(phi: SpectralField, params: PhysicsParams) -> SpectralField:
    """Bulk force c1*phi^3 - c2*phi, evaluated on the padded grid and re-truncated."""
    tab = tables(phi.grid)
    v = tab.fine_values(phi.coeffs)
    return SpectralField(phi.grid, tab.coeffs_from_fine(params.c1 * v**3 - params.c2 * v))


def chemical_potential(phi: SpectralField, params: PhysicsParams) -> SpectralField:
    """nu1 * (-Laplace phi) + kappa * (c1*phi^3 - c2*phi)."""
    f = double_well_derivative(phi, params)
    tab = tables(phi.grid)
    return SpectralField(phi.grid, params.nu1 * tab.k_sq * phi.coeffs + params.kappa * f.coeffs)


def advect(u: VelocityField, v: VelocityField) -> tuple[SpectralField, SpectralField]:
    """Unprojected convective product (u . grad) v, dealiased."""
    tab = tables(u.grid)
    ux = tab.fine_values(u.x.coeffs)
    uy = tab.fine_values(u.y.coeffs)
    gxx = tab.fine_values(1j * tab.kx * v.x.coeffs)
    gxy = tab.fine_values(1j * tab.ky * v.x.coeffs)
    gyx = tab.fine_values(1j * tab.kx * v.y.coeffs)
    gyy = tab.fine_values(1j * tab.ky * v.y.coeffs)
    cx = tab.coeffs_from_fine(ux * gxx + uy * gxy)
    cy = tab.coeffs_from_fine(ux * gyx + uy * gyy)
    return SpectralField(u.grid, cx), SpectralField(u.grid, cy)


def convective_term(u: VelocityField, v: VelocityField) -> VelocityField:
    """Leray-projected (u . grad) v."""
    return leray_project(*advect(u, v))


def capillary_integrand(phi: SpectralField, params: PhysicsParams) -> tuple[SpectralField, SpectralField]:
    """Unprojected capillary stress nu1 * (-Laplace phi) * grad phi, dealiased."""
    tab = tables(phi.grid)
    lap = tab.fine_values(tab.k_sq * phi.coeffs)
    gx = tab.fine_values(1j * tab.kx * phi.coeffs)
    gy = tab.fine_values(1j * tab.ky * phi.coeffs)
    cx = tab.coeffs_from_fine(params.nu1 * lap * gx)
    cy = tab.coeffs_from_fine(params.nu1 * lap * gy)
    return SpectralField(phi.grid, cx), SpectralField(phi.grid, cy)


def capillary_force(phi: SpectralField, params: PhysicsParams) -> VelocityField:
    """Leray projection of the capillary stress; the surface-tension forcing
    on the velocity once the gradient part is absorbed into the pressure."""
    return leray_project(*capillary_integrand(phi, params))


def scalar_advection(u: VelocityField, phi: SpectralField) -> SpectralField:
    """Dealiased u . grad phi."""
    tab = tables(u.grid)
    ux = tab.fine_values(u.x.coeffs)
    uy = tab.fine_values(u.y.coeffs)
    gx = tab.fine_values(1j * tab.kx * phi.coeffs)
    gy = tab.fine_values(1j * tab.ky * phi.coeffs)
    return SpectralField(phi.grid, tab.coeffs_from_fine(ux * gx + uy * gy))


def double_well(values: np.ndarray, params: PhysicsParams) -> np.ndarray:
    """Potential density F(s) = c1*s^4/4 - c2*s^2/2 (antiderivative of the bulk force)."""
    return params.c1 * values**4 / 4.0 - params.c2 * values**2 / 2.0


def bulk_energy(phi: SpectralField, params: PhysicsParams) -> float:
    """kappa * integral of F(phi), by quadrature on the padded grid (exact for
    band-limited phi at pad factor 2)."""
    tab = tables(phi.grid)
    v = tab.fine_values(phi.coeffs)
    return params.kappa * float(np.sum(double_well(v, params))) * tab.cell_area_fine


def free_energy(phi: SpectralField, params: PhysicsParams) -> float:
    """Interfacial plus bulk free energy nu1/2 |grad phi|^2 + kappa F(phi).

    The gradient part is summed in spectral space (Parseval); the quartic part
    is quadrature on the padded grid.
    """
    return 0.5 * params.nu1 * grad_norm_sq(phi) + bulk_energy(phi, params)


def hermitian_defect(field: SpectralField) -> float:
    """max |coeff(-k) - conj(coeff(k))| over the retained band."""
    c = field.coeffs
    n = field.grid.n
    idx = (-np.arange(n)) % n
    return float(np.max(np.abs(c[np.ix_(idx, idx)] - np.conj(c))))


def lattice_modes(count: int) -> list[tuple[int, int]]:
    """First ``count`` nonzero integer wavevectors, one per conjugate pair,
    ordered by |m|^2 then lexicographically."""
    out: list[tuple[int, int]] = []
    radius = 1
    while len(out) < count:
        candidates = []
        for mx in range(-radius, radius + 1):
            for my in range(-radius, radius + 1):
                if (mx, my) == (0, 0) or max(abs(mx), abs(my)) != radius:
                    continue
                if my > 0 or (my == 0 and mx > 0):
                    candidates.append((mx, my))
        candidates.sort(key=lambda m: (m[0] ** 2 + m[1] ** 2, m[0], m[1]))
        out.extend(candidates)
        radius += 1
    return out[:count]
