"""Cartesian magnitude reconstruction and the two quantitative quality metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class MagnitudeImage:
    """Nonnegative pixel magnitudes, same shape as the source k-space."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def shape(self):
        return self.pixels.shape


@dataclass(frozen=True)
class RoiSpec:
    """Inclusive, zero-based pixel ranges of a background (object-free) region.

    The caller is responsible for choosing a region that excludes the object.
    """

    rows: tuple[int, int]
    cols: tuple[int, int]

    def __post_init__(self):
        for name, (a, b) in (("rows", self.rows), ("cols", self.cols)):
            if a < 0 or b < a:
                raise ValueError(f"bad {name} range {a}:{b}")

    def extract(self, img: MagnitudeImage) -> np.ndarray:
        r0, r1 = self.rows
        c0, c1 = self.cols
        n_r, n_c = img.pixels.shape
        if r1 >= n_r or c1 >= n_c:
            raise ValueError(
                f"ROI rows {r0}:{r1}, cols {c0}:{c1} outside image {n_r}×{n_c}"
            )
        return img.pixels[r0:r1 + 1, c0:c1 + 1]

    @classmethod
    def parse(cls, text: str) -> "RoiSpec":
        """Parse 'r0:r1,c0:c1' (inclusive)."""
        try:
            rows_s, cols_s = text.split(",")
            r0, r1 = (int(v) for v in rows_s.split(":"))
            c0, c1 = (int(v) for v in cols_s.split(":"))
        except ValueError as exc:
            raise ValueError(f"ROI must look like 'r0:r1,c0:c1', got {text!r}") from exc
        return cls(rows=(r0, r1), cols=(c0, c1))


def reconstruct(kspace: np.ndarray) -> MagnitudeImage:
    """Centered inverse 2-d DFT magnitude with orthonormal scaling.

    Orthonormal scaling preserves energy, so the image norm equals the
    k-space norm (Parseval) before the magnitude step.
    """
    k = np.asarray(kspace, dtype=np.complex128)
    if k.ndim != 2 or k.size == 0:
        raise ValueError("k-space must be a nonempty 2-d matrix")
    img = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k), norm="ortho"))
    return MagnitudeImage(pixels=np.abs(img))


def nrmse(img: MagnitudeImage, ref: MagnitudeImage) -> float:
    """||img - ref|| / ||ref||."""
    if img.shape != ref.shape:
        raise ValueError(f"shape mismatch {img.shape} vs {ref.shape}")
    denom = float(np.linalg.norm(ref.pixels))
    if denom == 0.0:
        raise ValueError("reference image has zero norm")
    return float(np.linalg.norm(img.pixels - ref.pixels)) / denom


def roi_std(img: MagnitudeImage, roi: RoiSpec) -> float:
    """Population standard deviation over the ROI pixels."""
    block = roi.extract(img)
    if block.size < 2:
        raise ValueError("ROI must contain at least 2 pixels")
    return float(np.std(block))


def percent_emi_removed_from_std(sigma_uncorrected: float, sigma_corrected: float) -> float:
    """|(sigma_un - sigma_c) / sigma_un| * 100."""
    if sigma_uncorrected <= 0.0:
        raise ValueError("uncorrected standard deviation must be > 0")
    return abs((sigma_uncorrected - sigma_corrected) / sigma_uncorrected) * 100.0


def percent_emi_removed(
    uncorrected: MagnitudeImage, corrected: MagnitudeImage, roi: RoiSpec
) -> float:
    """Percent reduction of background-region standard deviation.

    The absolute value also reports over-correction (corrected std above
    uncorrected); callers surface that case separately.
    """
    return percent_emi_removed_from_std(roi_std(uncorrected, roi), roi_std(corrected, roi))


def volume_percent_emi_removed(
    sigmas_uncorrected: Sequence[float], sigmas_corrected: Sequence[float]
) -> float:
    """Volume-level metric: average per-partition stds, then apply the formula."""
    if len(sigmas_uncorrected) != len(sigmas_corrected) or not sigmas_uncorrected:
        raise ValueError("need matching, nonempty std sequences")
    return percent_emi_removed_from_std(
        float(np.mean(sigmas_uncorrected)), float(np.mean(sigmas_corrected))
    )
