"""Eligibility filtering and seeded uniform sampling of candidates.

A candidate passes iff its confidence exceeds tau_corr AND its worse
reprojection error stays below tau_proj AND it lies in front of both
cameras (strict inequalities on both thresholds). Per reference view the
eligible candidates from all neighbors form one uniform distribution,
deduplicated by source pixel: a pixel eligible under several neighbors
keeps only its highest-confidence triangulation.

Sampling is uniform without replacement and fully determined by
(distribution, n, seed); per-view seeds derive from the global seed so
reference views can be processed concurrently with stable results.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .triangulate import CandidateSet, TriangulatedCandidate

logger = logging.getLogger(__name__)


class NoEligibleCorrespondences(ValueError):
    """No candidate in the whole scene passed the eligibility thresholds."""


@dataclass(frozen=True)
class Thresholds:
    tau_corr: float = 0.05
    tau_proj: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.tau_corr < 1.0:
            raise ValueError("tau_corr must lie in (0, 1)")
        if not self.tau_proj > 0.0:
            raise ValueError("tau_proj must be positive")


def eligible(candidate: TriangulatedCandidate, th: Thresholds) -> bool:
    return (candidate.record.confidence > th.tau_corr
            and candidate.max_eps < th.tau_proj
            and not candidate.behind_camera)


def eligible_mask(candidates: CandidateSet, th: Thresholds) -> np.ndarray:
    """Vectorized eligible() over a candidate set."""
    return ((candidates.confidence > th.tau_corr)
            & (candidates.max_eps < th.tau_proj)
            & ~candidates.behind)


def _pixel_keys(records: np.ndarray) -> np.ndarray:
    """Pack each (u_i, v_i) float32 pair into one uint64 dedup key."""
    uv = np.empty((len(records), 2), dtype="<f4")
    uv[:, 0] = records["u_i"] + np.float32(0.0)  # fold -0.0 into +0.0
    uv[:, 1] = records["v_i"] + np.float32(0.0)
    return uv.view("<u8").ravel()


@dataclass(frozen=True)
class ViewDistribution:
    """Uniform distribution over one reference view's eligible candidates.

    Entries address candidates as (index into `sources`, index within that
    set); `sources` holds one CandidateSet per neighbor in input order.
    """

    ref_view_id: int
    sources: tuple[CandidateSet, ...]
    source_index: np.ndarray = field(repr=False)
    candidate_index: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.source_index)

    @property
    def neighbor_ids(self) -> tuple[int, ...]:
        return tuple(s.nbr_view_id for s in self.sources)

    def eligible_pairs(self) -> list[tuple[int, int]]:
        """Entries as (neighbor view id, candidate index) pairs."""
        ids = self.neighbor_ids
        return [(ids[s], int(k))
                for s, k in zip(self.source_index, self.candidate_index)]

    def candidate(self, entry: int) -> TriangulatedCandidate:
        return self.sources[self.source_index[entry]][int(self.candidate_index[entry])]


def build_view_distribution(ref_view_id: int,
                            per_neighbor: Sequence[CandidateSet],
                            th: Thresholds) -> ViewDistribution:
    """Union the per-neighbor eligible sets into one distribution.

    Deduplication keeps, per source pixel, the candidate with the highest
    confidence; ties fall to the earlier neighbor in `per_neighbor`. The
    entry order (neighbor position, then candidate index) is deterministic.
    """
    keys, confs, srcs, idxs = [], [], [], []
    for pos, cands in enumerate(per_neighbor):
        if cands.ref_view_id != ref_view_id:
            raise ValueError(f"candidate set for reference view {cands.ref_view_id} "
                             f"passed to distribution for view {ref_view_id}")
        idx = np.flatnonzero(eligible_mask(cands, th))
        keys.append(_pixel_keys(cands.records)[idx])
        confs.append(cands.confidence[idx])
        srcs.append(np.full(len(idx), pos, dtype=np.int64))
        idxs.append(idx)
    if not keys or sum(len(k) for k in keys) == 0:
        empty = np.empty(0, dtype=np.int64)
        return ViewDistribution(ref_view_id, tuple(per_neighbor), empty, empty)

    keys = np.concatenate(keys)
    confs = np.concatenate(confs)
    srcs = np.concatenate(srcs)
    idxs = np.concatenate(idxs)
    # Group by pixel key with best confidence first, then keep group heads.
    order = np.lexsort((idxs, srcs, -confs, keys))
    keys = keys[order]
    head = np.ones(len(keys), dtype=bool)
    head[1:] = keys[1:] != keys[:-1]
    winners = order[head]
    srcs, idxs = srcs[winners], idxs[winners]
    entry_order = np.lexsort((idxs, srcs))
    return ViewDistribution(ref_view_id, tuple(per_neighbor),
                            srcs[entry_order], idxs[entry_order])


@dataclass(frozen=True)
class ViewSample:
    """Candidates drawn from one view distribution, in draw order."""

    distribution: ViewDistribution
    selection: np.ndarray = field(repr=False)

    @property
    def ref_view_id(self) -> int:
        return self.distribution.ref_view_id

    def __len__(self) -> int:
        return len(self.selection)

    @property
    def source_index(self) -> np.ndarray:
        return self.distribution.source_index[self.selection]

    @property
    def candidate_index(self) -> np.ndarray:
        return self.distribution.candidate_index[self.selection]

    def candidates(self) -> list[TriangulatedCandidate]:
        return [self.distribution.candidate(k) for k in self.selection]


def view_seed(global_seed: int, ref_view_id: int) -> int:
    return global_seed ^ ref_view_id


def sample(dist: ViewDistribution, n: int, seed: int) -> ViewSample:
    """Draw up to n entries uniformly without replacement.

    Saturates to the whole eligible set when n >= |eligible|; an empty
    distribution yields an empty sample (the caller decides whether that
    warrants a warning or an error).
    """
    if n < 1:
        raise ValueError("sample count must be >= 1")
    total = len(dist)
    if total == 0:
        return ViewSample(dist, np.empty(0, dtype=np.int64))
    if n >= total:
        return ViewSample(dist, np.arange(total, dtype=np.int64))
    rng = np.random.default_rng(seed)
    return ViewSample(dist, rng.choice(total, size=n, replace=False))


def aggregate_global(samples: Iterable[ViewSample]) -> list[TriangulatedCandidate]:
    """Concatenate per-view samples in ascending reference view order.

    Views that contributed nothing are logged; if every view is empty the
    scene has no usable correspondences and the run cannot proceed.
    """
    ordered = sorted(samples, key=lambda s: s.ref_view_id)
    for s in ordered:
        if len(s) == 0:
            logger.warning("reference view %d has no eligible correspondences",
                           s.ref_view_id)
    merged: list[TriangulatedCandidate] = []
    for s in ordered:
        merged.extend(s.candidates())
    if not merged:
        raise NoEligibleCorrespondences("no eligible correspondences in scene")
    return merged
