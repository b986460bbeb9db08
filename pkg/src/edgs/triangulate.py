"""Two-view linear triangulation and NDC reprojection errors.

Each pixel observation (u, v) under projection P contributes two linear
constraints on the homogeneous point [g; 1]:

    (P_row0 - u * P_row2) . [g; 1] = 0
    (P_row1 - v * P_row2) . [g; 1] = 0

Stacking both views gives a 4x4 system; fixing the fourth homogeneous
coordinate to 1 leaves the inhomogeneous 4x3 least-squares problem
A g = -b, where b is the stacked fourth column. The minimizer is computed
with an SVD-based solve so rank deficiencies (parallel rays, zero
baseline) are detected rather than amplified.

Reprojection errors are measured in normalized device coordinates,
(u, v) -> (2u/width - 1, 2v/height - 1), so thresholds carry across image
resolutions.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .camera import CameraSet, ProjectionMatrix
from .correspondence import CorrespondenceSet, MatchRecord

# Above this condition number the two viewing rays are treated as parallel.
CONDITION_LIMIT = 1e12
MIN_BASELINE = 1e-9


@dataclass(frozen=True)
class TriangulatedCandidate:
    """One triangulated match with its per-view consistency errors.

    `eps_i` / `eps_j` are NDC reprojection errors in the reference and
    neighbor view; +inf marks behind-camera or degenerate solutions.
    """

    position: np.ndarray
    record: MatchRecord
    eps_i: float
    eps_j: float
    behind_camera: bool

    @property
    def max_eps(self) -> float:
        return max(self.eps_i, self.eps_j)


def _entries(P) -> np.ndarray:
    if isinstance(P, ProjectionMatrix):
        return P.entries
    return np.asarray(P, dtype=np.float64)


def _center(P: np.ndarray) -> np.ndarray:
    return -np.linalg.solve(P[:, :3], P[:, 3])


def ndc(pixel, width: int, height: int) -> np.ndarray:
    """Map pixel coordinates to [-1, 1]^2 normalized device coordinates."""
    pixel = np.asarray(pixel, dtype=np.float64)
    return np.stack([2.0 * pixel[..., 0] / width - 1.0,
                     2.0 * pixel[..., 1] / height - 1.0], axis=-1)


def _dlt_rows(P: np.ndarray, pix: np.ndarray) -> np.ndarray:
    u, v = pix
    return np.stack([P[0] - u * P[2], P[1] - v * P[2]])


def triangulate_pair(P_i, P_j, pix_i, pix_j) -> np.ndarray:
    """Triangulate one match; raises on degenerate camera geometry."""
    P_i, P_j = _entries(P_i), _entries(P_j)
    pix_i = np.asarray(pix_i, dtype=np.float64)
    pix_j = np.asarray(pix_j, dtype=np.float64)
    baseline = np.linalg.norm(_center(P_i) - _center(P_j))
    if baseline < MIN_BASELINE:
        raise ValueError("degenerate: zero baseline")
    rows = np.vstack([_dlt_rows(P_i, pix_i), _dlt_rows(P_j, pix_j)])
    A, b = rows[:, :3], rows[:, 3]
    solution, _, rank, singulars = np.linalg.lstsq(A, -b, rcond=None)
    # Structurally rank-deficient systems (e.g. a point exactly on the
    # baseline) still have a well-defined minimum-norm answer; only a badly
    # conditioned full-rank system means the rays are close to parallel.
    if rank == 3 and singulars[0] / singulars[-1] > CONDITION_LIMIT:
        raise ValueError("degenerate: near-parallel rays")
    return solution


def reprojection_error(P, point, pixel, width: int, height: int) -> float:
    """NDC distance between the point's projection and the observed pixel.

    Behind-camera projections (w <= 0) report +inf instead of raising, so
    callers can filter on the value alone.
    """
    P = _entries(P)
    point = np.asarray(point, dtype=np.float64)
    hom = P @ np.append(point, 1.0)
    w = hom[2]
    if not np.isfinite(w) or w <= 0.0:
        return float("inf")
    projected = hom[:2] / w
    return float(np.linalg.norm(ndc(projected, width, height)
                                - ndc(pixel, width, height)))


def _batch_solve(P_i: np.ndarray, P_j: np.ndarray,
                 pix_i: np.ndarray, pix_j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized DLT over N matches; returns (positions, degenerate mask)."""
    n = len(pix_i)
    rows = np.empty((n, 4, 4))
    rows[:, 0] = P_i[0] - pix_i[:, 0, None] * P_i[2]
    rows[:, 1] = P_i[1] - pix_i[:, 1, None] * P_i[2]
    rows[:, 2] = P_j[0] - pix_j[:, 0, None] * P_j[2]
    rows[:, 3] = P_j[1] - pix_j[:, 1, None] * P_j[2]
    A, b = rows[:, :, :3], rows[:, :, 3]
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    # Same rank rule as lstsq(rcond=None): singulars below eps*max(M,N)*s0
    # are structural zeros handled by the minimum-norm solve; degeneracy is
    # only a badly conditioned full-rank system (near-parallel rays).
    cutoff = s[:, :1] * (4 * np.finfo(np.float64).eps)
    keep = s > cutoff
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = s[:, 0] / s[:, 2]
    degenerate = (keep.sum(axis=1) == 3) & (cond > CONDITION_LIMIT)
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    Ub = np.einsum("nij,ni->nj", U, -b)
    positions = np.einsum("nij,ni->nj", Vt, Ub * s_inv)
    positions[degenerate] = np.nan
    return positions, degenerate


def _batch_ndc_error(P: np.ndarray, width: int, height: int,
                     positions: np.ndarray, observed: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-point NDC error and depth-scale w under one projection."""
    hom = positions @ P[:, :3].T + P[:, 3]
    w = hom[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        projected = hom[:, :2] / w[:, None]
        err = np.linalg.norm(ndc(projected, width, height)
                             - ndc(observed, width, height), axis=1)
        err = np.where(np.isfinite(err) & (w > 0), err, np.inf)
    return err, w


class CandidateSet(Sequence):
    """Triangulated candidates for one correspondence file, array-backed.

    Behaves as an immutable sequence of TriangulatedCandidate; bulk columns
    (positions, eps_i, ...) stay exposed for vectorized filtering.
    """

    def __init__(self, ref_view_id: int, nbr_view_id: int,
                 records: np.ndarray, positions: np.ndarray,
                 eps_i: np.ndarray, eps_j: np.ndarray, behind: np.ndarray):
        self.ref_view_id = ref_view_id
        self.nbr_view_id = nbr_view_id
        self.records = records
        self.positions = positions
        self.eps_i = eps_i
        self.eps_j = eps_j
        self.behind = behind

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        r = self.records[k]
        record = MatchRecord(float(r["u_i"]), float(r["v_i"]),
                             float(r["u_j"]), float(r["v_j"]),
                             float(r["confidence"]))
        return TriangulatedCandidate(self.positions[k], record,
                                     float(self.eps_i[k]), float(self.eps_j[k]),
                                     bool(self.behind[k]))

    @property
    def max_eps(self) -> np.ndarray:
        return np.maximum(self.eps_i, self.eps_j)

    @property
    def confidence(self) -> np.ndarray:
        return self.records["confidence"]


def triangulate_set(cset: CorrespondenceSet, cams: CameraSet) -> CandidateSet:
    """Triangulate every record of a correspondence set, order preserved.

    Degenerate records are kept with eps = +inf (position NaN) so indices
    stay aligned with the file for diagnostics.
    """
    from .camera import projection_matrix

    ref = cams.view(cset.ref_view_id)
    nbr = cams.view(cset.nbr_view_id)
    P_i = projection_matrix(ref).entries
    P_j = projection_matrix(nbr).entries

    pix_i = np.stack([cset.data["u_i"], cset.data["v_i"]], axis=1).astype(np.float64)
    pix_j = np.stack([cset.data["u_j"], cset.data["v_j"]], axis=1).astype(np.float64)
    if len(cset) == 0:
        empty = np.empty(0)
        return CandidateSet(cset.ref_view_id, cset.nbr_view_id, cset.data,
                            np.empty((0, 3)), empty, empty,
                            np.empty(0, dtype=bool))

    if np.linalg.norm(ref.center - nbr.center) < MIN_BASELINE:
        n = len(cset)
        inf = np.full(n, np.inf)
        return CandidateSet(cset.ref_view_id, cset.nbr_view_id, cset.data,
                            np.full((n, 3), np.nan), inf, inf.copy(),
                            np.zeros(n, dtype=bool))

    positions, degenerate = _batch_solve(P_i, P_j, pix_i, pix_j)
    eps_i, w_i = _batch_ndc_error(P_i, ref.width, ref.height, positions, pix_i)
    eps_j, w_j = _batch_ndc_error(P_j, nbr.width, nbr.height, positions, pix_j)
    eps_i = np.where(degenerate, np.inf, eps_i)
    eps_j = np.where(degenerate, np.inf, eps_j)
    with np.errstate(invalid="ignore"):
        behind = (w_i <= 0) | (w_j <= 0)
    return CandidateSet(cset.ref_view_id, cset.nbr_view_id, cset.data,
                        positions, eps_i, eps_j, behind)
