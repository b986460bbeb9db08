"""Real spherical harmonics to degree 3 and least-squares color fitting.

The basis uses the sign and ordering convention of mainstream Gaussian
splat trainers (l-major, m = -l..l within each band, no Condon-Shortley
phase), so exported coefficient blocks render identically in standard
viewers. The stored DC term follows the same ecosystem's affine map

    color = 0.5 + C0 * f_dc

which `init_splat_sh` inverts when seeding the DC from an observed color.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Band constants of the hard-coded trainer basis (degree 0..3).
C0 = 0.28209479177387814
C1 = 0.4886025119029199
C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)
C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)

NUM_COEFFS = 16


@dataclass(frozen=True)
class ShBasisRow:
    """Basis evaluations for one unit direction, component 0 = C0."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (NUM_COEFFS,):
            raise ValueError(f"expected {NUM_COEFFS} basis values, got {values.shape}")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ShCoefficients:
    """16x3 coefficient matrix, one column per RGB channel."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64)
        if coeffs.shape != (NUM_COEFFS, 3):
            raise ValueError(f"expected ({NUM_COEFFS}, 3) coefficients, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dc_color(self) -> np.ndarray:
        """Color rendered from the DC term alone."""
        return 0.5 + C0 * self.coeffs[0]


def sh_basis_many(directions: np.ndarray) -> np.ndarray:
    """Evaluate all 16 basis functions for (n, 3) unit directions."""
    directions = np.asarray(directions, dtype=np.float64)
    x, y, z = directions[..., 0], directions[..., 1], directions[..., 2]
    xx, yy, zz = x * x, y * y, z * z
    xy, yz, xz = x * y, y * z, x * z
    out = np.empty(directions.shape[:-1] + (NUM_COEFFS,))
    out[..., 0] = C0
    out[..., 1] = -C1 * y
    out[..., 2] = C1 * z
    out[..., 3] = -C1 * x
    out[..., 4] = C2[0] * xy
    out[..., 5] = C2[1] * yz
    out[..., 6] = C2[2] * (2.0 * zz - xx - yy)
    out[..., 7] = C2[3] * xz
    out[..., 8] = C2[4] * (xx - yy)
    out[..., 9] = C3[0] * y * (3.0 * xx - yy)
    out[..., 10] = C3[1] * xy * z
    out[..., 11] = C3[2] * y * (4.0 * zz - xx - yy)
    out[..., 12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
    out[..., 13] = C3[4] * x * (4.0 * zz - xx - yy)
    out[..., 14] = C3[5] * z * (xx - yy)
    out[..., 15] = C3[6] * x * (xx - 3.0 * yy)
    return out


def sh_basis(direction) -> ShBasisRow:
    """Evaluate the 16-function basis at one unit direction."""
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    norm = np.linalg.norm(direction)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"direction must be unit length, got norm {norm:.6g}")
    return ShBasisRow(sh_basis_many(direction))


def fit_sh(observations: np.ndarray, directions: np.ndarray) -> ShCoefficients:
    """Least-squares fit of coefficients H minimizing ||Y H - O||_F.

    For n >= 16 well-spread directions this is the unique least-squares
    solution; for n < 16 the SVD solve returns the minimum-norm H, which
    still reproduces the observations exactly.
    """
    observations = np.asarray(observations, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    if observations.ndim != 2 or observations.shape[1] != 3:
        raise ValueError("observations must have shape (n, 3)")
    if observations.shape[0] == 0:
        raise ValueError("at least one observation is required")
    if directions.shape != observations.shape:
        raise ValueError("directions must pair one-to-one with observations")
    Y = sh_basis_many(directions)
    coeffs, _, _, _ = np.linalg.lstsq(Y, observations, rcond=None)
    return ShCoefficients(coeffs)


def fit_sh_batch(observations: np.ndarray, directions: np.ndarray,
                 dc_rows: np.ndarray | None = None) -> np.ndarray:
    """Min-norm fit for a (B, n, 3) stack of observation groups.

    All groups share the observation count n; the pipeline buckets splats
    by n and calls this once per bucket. Returns (B, 16, 3).

    With `dc_rows` (B, 3) given, the DC column is removed from the basis
    instead: its fixed contribution C0 * dc_row is subtracted from the
    observations and only rows 1..15 are fit (row 0 of the result is set
    to dc_rows). Without it, row 0 carries the unconstrained fit and the
    caller is expected to overwrite it via init_splat_sh.
    """
    observations = np.asarray(observations, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    Y = sh_basis_many(directions)
    if dc_rows is None:
        return np.linalg.pinv(Y) @ observations
    dc_rows = np.asarray(dc_rows, dtype=np.float64)
    residual = observations - C0 * dc_rows[:, None, :]
    out = np.empty(observations.shape[:-2] + (NUM_COEFFS, 3))
    out[..., 0, :] = dc_rows
    out[..., 1:, :] = np.linalg.pinv(Y[..., 1:]) @ residual
    return out


def init_splat_sh(ref_color, fitted: ShCoefficients) -> ShCoefficients:
    """Seed the DC term from the reference-view color, keep higher orders.

    Row 0 becomes (ref_color - 0.5) / C0 so the DC renders back to exactly
    ref_color; rows 1..15 are copied from the fit unchanged.
    """
    ref_color = np.asarray(ref_color, dtype=np.float64)
    if ref_color.shape != (3,) or np.any(ref_color < 0.0) or np.any(ref_color > 1.0):
        raise ValueError("ref_color must be an RGB triple in [0, 1]")
    coeffs = np.array(fitted.coeffs)
    coeffs[0] = (ref_color - 0.5) / C0
    return ShCoefficients(coeffs)


def eval_color(sh: ShCoefficients, direction) -> np.ndarray:
    """Color rendered at one view direction: 0.5 + Y(d) . H, unclamped."""
    return 0.5 + sh_basis(direction).values @ sh.coeffs
