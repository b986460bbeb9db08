"""Dense-matching backends behind one callable signature.

A backend takes two (H, W, 3) float32 RGB images in [0, 1] and returns

    warp:       (H, W, 2) float32, absolute (x, y) neighbor coordinates
                for every reference pixel
    confidence: (H, W) float32 in [0, 1]
    valid:      (H, W) bool, False where the match must not be used
                (out of frame, untracked)

so LoFTR/DKM-class alternatives can be swapped in without touching the
adapter. The bundled default wraps OpenCV's Farneback dense optical
flow; heavier pretrained matchers are declared but raise until their
models are installed.
"""

from __future__ import annotations

import numpy as np


class MatcherUnavailable(RuntimeError):
    """The selected backend's library or pretrained model is not installed."""


_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float32)


def _to_gray_u8(image: np.ndarray) -> np.ndarray:
    gray = np.asarray(image, dtype=np.float32) @ _GRAY_WEIGHTS
    return np.clip(np.rint(gray * 255.0), 0.0, 255.0).astype(np.uint8)


# Gradient energy (blurred squared Sobel response, gray levels) at which
# a pixel counts as textured. Flat regions cycle-check perfectly, zero
# flow forward and back, so the cycle error alone would score them 1.0.
_TEXTURE_SCALE = 100.0


def farneback(ref_image: np.ndarray, nbr_image: np.ndarray):
    """Farneback dense optical flow with a forward-backward cycle check.

    Confidence is exp(-cycle error in pixels) scaled by a local-texture
    term: a match whose backward flow returns exactly to its source
    scores 1 on textured pixels, decays smoothly as the cycle error
    grows, and drops to 0 on uniform regions where the cycle check is
    blind.
    """
    try:
        import cv2
    except ImportError as exc:
        raise MatcherUnavailable(
            "farneback backend needs OpenCV; "
            "pip install opencv-python-headless") from exc

    ref_gray = _to_gray_u8(ref_image)
    nbr_gray = _to_gray_u8(nbr_image)
    if ref_gray.shape != nbr_gray.shape:
        raise ValueError("farneback backend needs equally sized images")

    params = dict(pyr_scale=0.5, levels=5, winsize=21, iterations=3,
                  poly_n=7, poly_sigma=1.5, flags=0)
    forward = cv2.calcOpticalFlowFarneback(ref_gray, nbr_gray, None, **params)
    backward = cv2.calcOpticalFlowFarneback(nbr_gray, ref_gray, None, **params)

    height, width = ref_gray.shape
    xs, ys = np.meshgrid(np.arange(width, dtype=np.float32),
                         np.arange(height, dtype=np.float32))
    warp_x = xs + forward[..., 0]
    warp_y = ys + forward[..., 1]

    # Sample the backward flow where the forward flow lands; the cycle
    # error is how far the round trip misses the source pixel.
    returned = cv2.remap(backward, warp_x, warp_y, cv2.INTER_LINEAR,
                         borderMode=cv2.BORDER_REPLICATE)
    cycle = np.hypot(warp_x + returned[..., 0] - xs,
                     warp_y + returned[..., 1] - ys)

    gx = cv2.Sobel(ref_gray, cv2.CV_32F, 1, 0, ksize=3)
    gy = cv2.Sobel(ref_gray, cv2.CV_32F, 0, 1, ksize=3)
    energy = cv2.GaussianBlur(gx * gx + gy * gy, (0, 0), 3.0)
    texture = -np.expm1(-energy / _TEXTURE_SCALE)
    confidence = (np.exp(-cycle) * texture).astype(np.float32)

    valid = ((warp_x >= 0.0) & (warp_x <= width - 1.0)
             & (warp_y >= 0.0) & (warp_y <= height - 1.0))
    warp = np.stack([warp_x, warp_y], axis=-1).astype(np.float32)
    return warp, confidence, valid


def roma(ref_image: np.ndarray, nbr_image: np.ndarray):
    """RoMa dense matcher; needs the external pretrained model."""
    raise MatcherUnavailable(
        "roma backend needs the pretrained RoMa model: "
        "pip install romatch and download the roma_outdoor checkpoint")


BACKENDS = {"farneback": farneback, "roma": roma}


def get_backend(name: str):
    if name == "auto":
        return farneback
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}, expected one of "
                         f"{sorted(BACKENDS)}") from None
