"""Writer for the EDGC correspondence container and its color sidecar.

The format is owned by the splat-initialization pipeline; this package
re-implements the writer so the adapter has no runtime dependency on it.

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

Files are named corr_<ref_id>_<nbr_id>.edgc. The optional sidecar
corr_<ref_id>_<nbr_id>.colors.npy holds (N, 2, 3) float32 RGB samples,
reference color first, neighbor color second.

All writes go through a temp file in the target directory followed by an
atomic rename, so a crashed run never leaves a half-written artifact.
"""

from __future__ import annotations

import io
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"EDGC"
VERSION = 1
_HEADER = struct.Struct("<4sHIIHHHHQ")

RECORD_DTYPE = np.dtype([
    ("u_i", "<f4"), ("v_i", "<f4"),
    ("u_j", "<f4"), ("v_j", "<f4"),
    ("confidence", "<f4"),
])


def corr_filename(ref_view_id: int, nbr_view_id: int) -> str:
    return f"corr_{ref_view_id}_{nbr_view_id}.edgc"


def colors_filename(ref_view_id: int, nbr_view_id: int) -> str:
    return f"corr_{ref_view_id}_{nbr_view_id}.colors.npy"


def atomic_write(path, payload: bytes) -> None:
    """Write `payload` to `path` via temp file + rename in one directory."""
    path = Path(path)
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def write_corr(path, ref_view_id: int, nbr_view_id: int,
               ref_size: tuple[int, int], nbr_size: tuple[int, int],
               data: np.ndarray) -> None:
    """Write match records (a RECORD_DTYPE array) as one EDGC file."""
    if ref_view_id == nbr_view_id:
        raise ValueError("reference and neighbor view ids must differ")
    data = np.ascontiguousarray(data, dtype=RECORD_DTYPE)
    header = _HEADER.pack(MAGIC, VERSION, ref_view_id, nbr_view_id,
                          ref_size[0], ref_size[1], nbr_size[0], nbr_size[1],
                          len(data))
    atomic_write(path, header + data.tobytes())


def write_colors(path, ref_colors: np.ndarray, nbr_colors: np.ndarray) -> None:
    """Write the per-record RGB sidecar, shapes (N, 3) each, values in [0, 1]."""
    ref_colors = np.asarray(ref_colors, dtype=np.float32)
    nbr_colors = np.asarray(nbr_colors, dtype=np.float32)
    if ref_colors.shape != nbr_colors.shape or ref_colors.ndim != 2 or ref_colors.shape[1] != 3:
        raise ValueError("color arrays must both have shape (N, 3)")
    buffer = io.BytesIO()
    np.save(buffer, np.stack([ref_colors, nbr_colors], axis=1))
    atomic_write(path, buffer.getvalue())
