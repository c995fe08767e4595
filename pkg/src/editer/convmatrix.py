"""Block-Toeplitz convolution operator relating detector data to primary-coil EMI.

Tap convention (fixed so response vectors are portable across runs and file
dumps): taps are enumerated detector-major, then phase-encode offset t_y, then
readout offset t_x, offsets ascending over [-(w-1)/2, +(w-1)/2]. The column
for (detector i, t_y, t_x) holds the detector samples displaced by the tap,

    column[(kx, line)] = e_i[kx + t_x, line + t_y],

zero wherever the displaced index leaves the acquired grid (zero padding).
Rows are ordered line-major: row r covers sample (kx = r mod n_kx,
line = line_ids[r // n_kx]). Phase-encode displacements may read neighbouring
lines outside the covered set as long as they exist in the full matrix.

Applying a response vector therefore evaluates a zero-padded 2-d FIR of each
detector matrix on the covered lines and sums over detectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .datatypes import ResponseVector


def tap_offsets(window: tuple[int, int]) -> list[tuple[int, int]]:
    """(t_y, t_x) pairs in enumeration order for a (dkx, dky) window."""
    dkx, dky = window
    hx, hy = (dkx - 1) // 2, (dky - 1) // 2
    return [(ty, tx) for ty in range(-hy, hy + 1) for tx in range(-hx, hx + 1)]


def shift_zero_padded(mat: np.ndarray, tx: int, ty: int) -> np.ndarray:
    """out[kx, ky] = mat[kx + tx, ky + ty], zero outside the matrix."""
    n_kx, n_pe = mat.shape
    out = np.zeros_like(mat)
    x0, x1 = max(0, -tx), n_kx + min(0, -tx)
    y0, y1 = max(0, -ty), n_pe + min(0, -ty)
    if x1 > x0 and y1 > y0:
        out[x0:x1, y0:y1] = mat[x0 + tx:x1 + tx, y0 + ty:y1 + ty]
    return out


@dataclass(frozen=True, eq=False)
class ConvOperator:
    """Dense convolution matrix over a set of PE lines.

    ``dense`` has shape (n_kx * len(line_ids), n_detectors * dkx * dky).
    """

    dense: np.ndarray
    line_ids: tuple[int, ...]
    window: tuple[int, int]
    n_kx: int

    @property
    def n_lines(self) -> int:
        return len(self.line_ids)


def tap_stack(detectors: Sequence[np.ndarray], window: tuple[int, int]) -> np.ndarray:
    """Shifted copies of every detector for every tap, shape (n_cols, n_kx, n_pe).

    Slicing this stack along lines yields the operator columns for any line
    set, which keeps repeated window fits cheap.
    """
    dkx, dky = window
    if not detectors:
        raise ValueError("at least one detector matrix is required")
    n_kx, n_pe = detectors[0].shape
    if dkx > n_kx or dky > n_pe:
        raise ValueError(
            f"window ({dkx},{dky}) exceeds data extent ({n_kx},{n_pe})"
        )
    offsets = tap_offsets(window)
    stack = np.empty((len(detectors) * len(offsets), n_kx, n_pe), dtype=np.complex128)
    col = 0
    for det in detectors:
        det = np.asarray(det, dtype=np.complex128)
        if det.shape != (n_kx, n_pe):
            raise ValueError("detector matrices must share one shape")
        for ty, tx in offsets:
            stack[col] = shift_zero_padded(det, tx, ty)
            col += 1
    return stack


def operator_from_stack(
    stack: np.ndarray,
    lines: Sequence[int],
    window: tuple[int, int],
    n_kx: int,
) -> ConvOperator:
    line_ids = tuple(int(l) for l in lines)
    sub = stack[:, :, list(line_ids)]            # (n_cols, n_kx, n_lines)
    dense = sub.transpose(1, 2, 0).reshape(n_kx * len(line_ids), stack.shape[0], order="F")
    return ConvOperator(dense=dense, line_ids=line_ids, window=window, n_kx=n_kx)


def build_operator(
    detectors: Sequence[np.ndarray],
    lines: Iterable[int],
    window: tuple[int, int],
) -> ConvOperator:
    """Build the dense convolution matrix for the given lines and window.

    Parameters
    ----------
    detectors : detector k-space matrices, all (n_kx, n_pe)
    lines : PE-line indices to cover, each in [0, n_pe)
    window : (dkx, dky), odd tap counts along readout and phase encode
    """
    line_ids = [int(l) for l in lines]
    if not line_ids:
        raise ValueError("line set must not be empty")
    n_kx, n_pe = np.asarray(detectors[0]).shape
    for l in line_ids:
        if not (0 <= l < n_pe):
            raise ValueError(f"line {l} outside [0, {n_pe})")
    stack = tap_stack(detectors, window)
    return operator_from_stack(stack, line_ids, window, n_kx)


def predict_emi(op: ConvOperator, response) -> np.ndarray:
    """Predicted interference on the covered lines, shape (n_kx, n_lines)."""
    coeffs = response.coefficients if isinstance(response, ResponseVector) else np.asarray(response)
    coeffs = coeffs.ravel()
    if coeffs.size != op.dense.shape[1]:
        raise ValueError(
            f"response length {coeffs.size} ≠ operator column count {op.dense.shape[1]}"
        )
    flat = op.dense @ coeffs.astype(np.complex128)
    return flat.reshape(op.n_kx, op.n_lines, order="F")
