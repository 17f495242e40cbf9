"""Binary checkpoint files with bit-exact round trip.

Layout (all little-endian):

    magic   5 bytes  b"CHNS1"
    N       uint32   modes per dimension
    K       uint32   noise mode count
    step    uint64   step index
    t       float64  simulation time
    params  6 x float64: L, nu1, nu2, kappa, c1, c2
    arrays  3 x (N * (N/2 + 1)) complex128: u_x, u_y, phi half spectra

Coefficient arrays are Hermitian-packed: only the ky >= 0 half is stored and
the negative-ky columns are rebuilt by conjugation on load.  Fields produced
by this package are exactly Hermitian, so the round trip is bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .integrator import SystemState
from .spectral import GridSpec, PhysicsParams, SpectralField, VelocityField, tables

MAGIC = b"CHNS1"
_HEADER = struct.Struct("<IIQd")
_PARAMS = struct.Struct("<6d")


class CheckpointError(IOError):
    """Raised for malformed or truncated checkpoint files."""


def _pack_half(coeffs: np.ndarray, n: int) -> bytes:
    half = np.ascontiguousarray(coeffs[:, : n // 2 + 1], dtype="<c16")
    return half.tobytes()


def _unpack_half(buf: bytes, n: int, tab) -> np.ndarray:
    half = np.frombuffer(buf, dtype="<c16").reshape(n, n // 2 + 1).astype(np.complex128)
    return tab.full_from_half(half, n)


def write_checkpoint(
    path: str | Path,
    state: SystemState,
    params: PhysicsParams,
    k_modes: int = 0,
) -> None:
    grid = state.grid
    n = grid.n
    blob = bytearray()
    blob += MAGIC
    blob += _HEADER.pack(n, k_modes, state.step, state.t)
    blob += _PARAMS.pack(grid.length, params.nu1, params.nu2, params.kappa, params.c1, params.c2)
    blob += _pack_half(state.u.x.coeffs, n)
    blob += _pack_half(state.u.y.coeffs, n)
    blob += _pack_half(state.phi.coeffs, n)
    Path(path).write_bytes(bytes(blob))


def read_checkpoint(
    path: str | Path,
    dealias_pad: int = 2,
) -> tuple[SystemState, PhysicsParams, int]:
    """Load a checkpoint; returns (state, physics parameters, noise mode count)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint {path}: {err}") from err
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"bad magic in checkpoint {path}")
    off = len(MAGIC)
    try:
        n, k_modes, step_index, t = _HEADER.unpack_from(raw, off)
        off += _HEADER.size
        length, nu1, nu2, kappa, c1, c2 = _PARAMS.unpack_from(raw, off)
        off += _PARAMS.size
    except struct.error as err:
        raise CheckpointError(f"truncated header in checkpoint {path}") from err
    grid = GridSpec(n=n, length=length, dealias_pad=dealias_pad)
    tab = tables(grid)
    arr_bytes = n * (n // 2 + 1) * 16
    if len(raw) != off + 3 * arr_bytes:
        raise CheckpointError(
            f"checkpoint {path} has {len(raw)} bytes, expected {off + 3 * arr_bytes}"
        )
    fields = []
    for _ in range(3):
        fields.append(_unpack_half(raw[off : off + arr_bytes], n, tab))
        off += arr_bytes
    state = SystemState(
        u=VelocityField(SpectralField(grid, fields[0]), SpectralField(grid, fields[1])),
        phi=SpectralField(grid, fields[2]),
        t=t,
        step=step_index,
    )
    params = PhysicsParams(nu1=nu1, nu2=nu2, kappa=kappa, c1=c1, c2=c2)
    return state, params, k_modes
