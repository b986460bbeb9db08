"""Shared fixtures over the golden files and reference parsers in golden.py."""

from __future__ import annotations

from pathlib import Path

import pytest

from golden import GOLDEN_CAMERAS_TXT, GOLDEN_IMAGES_TXT, read_gaussian_ply


@pytest.fixture
def golden_colmap_dir(tmp_path: Path) -> Path:
    (tmp_path / "cameras.txt").write_text(GOLDEN_CAMERAS_TXT)
    (tmp_path / "images.txt").write_text(GOLDEN_IMAGES_TXT)
    return tmp_path


@pytest.fixture
def ply_reader():
    return read_gaussian_ply
