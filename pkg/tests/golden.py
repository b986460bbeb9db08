"""Golden COLMAP files and independent reference helpers.

The PLY parser here is deliberately written from scratch against the
format contract (header text plus packed little-endian float32 records) so
round-trip tests do not reuse the writer's code paths.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

GOLDEN_CAMERAS_TXT = """\
# Camera list with one line of data per camera:
#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]
# Number of cameras: 2
1 PINHOLE 1920 1080 1158.03 1155.93 960 540
2 SIMPLE_PINHOLE 640 480 500 320 240
"""

# Image 2 is listed first and carries a populated 2D-point line; image 1
# has an empty one. The loader must sort by id and skip both point lines.
GOLDEN_IMAGES_TXT = """\
# Image list with two lines of data per image:
#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME
# Number of images: 2, mean observations per image: 1
2 0.70710678118654746 0 0.70710678118654757 0 0.5 -0.25 3 1 img_b.png
100.5 200.25 -1 300 400.125 7
1 1 0 0 0 0.1 0.2 1.5 2 img_a.png

"""

GOLDEN_ROT_90Y = np.array([
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0],
])


def read_gaussian_ply(path) -> dict[str, np.ndarray]:
    """Parse a binary splat PLY without touching the package writer.

    Returns the header property names plus one array per logical field.
    """
    data = Path(path).read_bytes()
    header_end = data.index(b"end_header\n") + len(b"end_header\n")
    lines = data[:header_end].decode("ascii").splitlines()
    assert lines[0] == "ply"
    assert lines[1] == "format binary_little_endian 1.0"
    assert lines[2].startswith("element vertex ")
    count = int(lines[2].split()[-1])
    names = []
    for line in lines[3:-1]:
        kind, dtype, name = line.split()
        assert (kind, dtype) == ("property", "float")
        names.append(name)
    assert lines[-1] == "end_header"
    table = np.frombuffer(data[header_end:], dtype="<f4").reshape(count, len(names))
    cols = {name: table[:, k] for k, name in enumerate(names)}
    return {
        "names": names,
        "count": count,
        "xyz": np.stack([cols["x"], cols["y"], cols["z"]], axis=1),
        "normals": np.stack([cols["nx"], cols["ny"], cols["nz"]], axis=1),
        "f_dc": np.stack([cols[f"f_dc_{i}"] for i in range(3)], axis=1),
        "f_rest": np.stack([cols[f"f_rest_{i}"] for i in range(45)], axis=1),
        "opacity": cols["opacity"],
        "scale": np.stack([cols[f"scale_{i}"] for i in range(3)], axis=1),
        "rot": np.stack([cols[f"rot_{i}"] for i in range(4)], axis=1),
    }


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish random rotation from a normalized random quaternion."""
    q = rng.standard_normal(4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y],
        [2 * x * y + 2 * w * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * w * x],
        [2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, 1 - 2 * x * x - 2 * y * y],
    ])
