"""Pairwise pixel-match records and their on-disk binary format (EDGC).

A correspondence file stores flattened match records between one reference
view and one neighbor view: source pixel, matched pixel, and a confidence
in [0, 1]. Coordinates are in original pixel units of each image.

EDGC layout (little-endian):

    magic   "EDGC"          4 bytes
    version u16 = 1
    ref_view_id  u32
    nbr_view_id  u32
    ref_width    u16
    ref_height   u16
    nbr_width    u16
    nbr_height   u16
    record_count u64
    records      record_count x (u_i f32, v_i f32, u_j f32, v_j f32, confidence f32)

Files are named corr_<ref_id>_<nbr_id>.edgc. An optional color sidecar
corr_<ref_id>_<nbr_id>.colors.npy carries per-record RGB samples (see
`write_colors`); the pipeline uses it for splat color initialization since
match records themselves are geometry-only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"EDGC"
VERSION = 1
_HEADER = struct.Struct("<4sHIIHHHHQ")  # 30 bytes

RECORD_DTYPE = np.dtype([
    ("u_i", "<f4"), ("v_i", "<f4"),
    ("u_j", "<f4"), ("v_j", "<f4"),
    ("confidence", "<f4"),
])

HEADER_SIZE = _HEADER.size
RECORD_SIZE = RECORD_DTYPE.itemsize


@dataclass(frozen=True)
class MatchRecord:
    """One pixel match: (u_i, v_i) in the reference, (u_j, v_j) in the neighbor."""

    u_i: float
    v_i: float
    u_j: float
    v_j: float
    confidence: float


class CorrespondenceSet:
    """Match records for one (reference, neighbor) image pair.

    Records are held as a packed float32 array so file round trips are
    bit-exact; `records` materializes MatchRecord objects on demand.
    """

    def __init__(self, ref_view_id: int, nbr_view_id: int,
                 ref_size: tuple[int, int], nbr_size: tuple[int, int],
                 data: np.ndarray):
        if ref_view_id == nbr_view_id:
            raise ValueError("reference and neighbor view ids must differ")
        self.ref_view_id = int(ref_view_id)
        self.nbr_view_id = int(nbr_view_id)
        self.ref_width, self.ref_height = (int(s) for s in ref_size)
        self.nbr_width, self.nbr_height = (int(s) for s in nbr_size)
        data = np.ascontiguousarray(data, dtype=RECORD_DTYPE)
        self._validate(data)
        data.flags.writeable = False
        self.data = data

    def _validate(self, data: np.ndarray) -> None:
        conf = data["confidence"]
        bad = ~((conf >= 0.0) & (conf <= 1.0))
        in_ref = ((data["u_i"] >= 0) & (data["u_i"] < self.ref_width)
                  & (data["v_i"] >= 0) & (data["v_i"] < self.ref_height))
        in_nbr = ((data["u_j"] >= 0) & (data["u_j"] < self.nbr_width)
                  & (data["v_j"] >= 0) & (data["v_j"] < self.nbr_height))
        bad |= ~(in_ref & in_nbr)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise ValueError(f"corrupt record at index {k}")

    @classmethod
    def from_records(cls, ref_view_id: int, nbr_view_id: int,
                     ref_size: tuple[int, int], nbr_size: tuple[int, int],
                     records) -> "CorrespondenceSet":
        data = np.array(
            [(r.u_i, r.v_i, r.u_j, r.v_j, r.confidence) for r in records],
            dtype=RECORD_DTYPE)
        return cls(ref_view_id, nbr_view_id, ref_size, nbr_size, data)

    @classmethod
    def from_arrays(cls, ref_view_id: int, nbr_view_id: int,
                    ref_size: tuple[int, int], nbr_size: tuple[int, int],
                    pix_ref: np.ndarray, pix_nbr: np.ndarray,
                    confidence: np.ndarray) -> "CorrespondenceSet":
        """Build from (N, 2) pixel arrays and an (N,) confidence array."""
        pix_ref = np.asarray(pix_ref, dtype=np.float32)
        pix_nbr = np.asarray(pix_nbr, dtype=np.float32)
        confidence = np.asarray(confidence, dtype=np.float32)
        n = len(confidence)
        data = np.empty(n, dtype=RECORD_DTYPE)
        data["u_i"], data["v_i"] = pix_ref[:, 0], pix_ref[:, 1]
        data["u_j"], data["v_j"] = pix_nbr[:, 0], pix_nbr[:, 1]
        data["confidence"] = confidence
        return cls(ref_view_id, nbr_view_id, ref_size, nbr_size, data)

    def __len__(self) -> int:
        return len(self.data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorrespondenceSet):
            return NotImplemented
        return (self.ref_view_id == other.ref_view_id
                and self.nbr_view_id == other.nbr_view_id
                and (self.ref_width, self.ref_height) == (other.ref_width, other.ref_height)
                and (self.nbr_width, self.nbr_height) == (other.nbr_width, other.nbr_height)
                and self.data.tobytes() == other.data.tobytes())

    @property
    def records(self) -> list[MatchRecord]:
        return [MatchRecord(float(r["u_i"]), float(r["v_i"]),
                            float(r["u_j"]), float(r["v_j"]),
                            float(r["confidence"])) for r in self.data]


def corr_filename(ref_view_id: int, nbr_view_id: int) -> str:
    return f"corr_{ref_view_id}_{nbr_view_id}.edgc"


def colors_filename(ref_view_id: int, nbr_view_id: int) -> str:
    return f"corr_{ref_view_id}_{nbr_view_id}.colors.npy"


def write_corr(cset: CorrespondenceSet, path) -> None:
    """Write a correspondence set in EDGC format (byte-deterministic)."""
    header = _HEADER.pack(
        MAGIC, VERSION, cset.ref_view_id, cset.nbr_view_id,
        cset.ref_width, cset.ref_height, cset.nbr_width, cset.nbr_height,
        len(cset))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(cset.data.tobytes())


def read_corr(path) -> CorrespondenceSet:
    """Read and validate an EDGC file.

    The declared record count is checked against the actual payload length
    before any record-sized allocation, so a corrupt header cannot trigger
    a huge allocation.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(HEADER_SIZE)
        if len(header) < HEADER_SIZE or header[:4] != MAGIC:
            raise ValueError(f"{path.name}: not an EDGC file")
        (_, version, ref_id, nbr_id,
         ref_w, ref_h, nbr_w, nbr_h, count) = _HEADER.unpack(header)
        if version != VERSION:
            raise ValueError(f"{path.name}: unsupported EDGC version {version}")
        payload = fh.read()
    if len(payload) != count * RECORD_SIZE:
        raise ValueError(f"{path.name}: truncated file")
    data = np.frombuffer(payload, dtype=RECORD_DTYPE).copy()
    return CorrespondenceSet(ref_id, nbr_id, (ref_w, ref_h), (nbr_w, nbr_h), data)


def write_colors(ref_colors: np.ndarray, nbr_colors: np.ndarray, path) -> None:
    """Write the per-record RGB sidecar for a correspondence file.

    Shape (N, 2, 3) float32: [:, 0] is the color at (u_i, v_i) in the
    reference image, [:, 1] the color at (u_j, v_j) in the neighbor, both
    in [0, 1].
    """
    ref_colors = np.asarray(ref_colors, dtype=np.float32)
    nbr_colors = np.asarray(nbr_colors, dtype=np.float32)
    if ref_colors.shape != nbr_colors.shape or ref_colors.ndim != 2 or ref_colors.shape[1] != 3:
        raise ValueError("color arrays must both have shape (N, 3)")
    np.save(path, np.stack([ref_colors, nbr_colors], axis=1))


def read_colors(path, expected_count: int) -> np.ndarray:
    """Read a color sidecar and check it pairs with `expected_count` records."""
    colors = np.load(path)
    if colors.shape != (expected_count, 2, 3):
        raise ValueError(f"{Path(path).name}: color sidecar shape {colors.shape} "
                         f"does not match {expected_count} records")
    return colors.astype(np.float32, copy=False)
