"""Domain types for simultaneously acquired multi-channel k-space data.

Conventions used throughout the package:

* a k-space matrix is complex128 with shape (n_kx, n_pe); one column is one
  phase-encode line, acquired as a unit in time
* the primary channel carries MR signal plus interference; detector channels
  carry interference only
* all containers are immutable after construction (arrays are marked
  read-only) and safe to share across workers
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


def _frozen_matrix(data) -> np.ndarray:
    arr = np.array(data, dtype=np.complex128)
    if arr.ndim != 2:
        raise TypeError(f"expected a 2-d complex matrix, got ndim={arr.ndim}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AcquisitionDataset:
    """One 2-d acquisition: primary coil plus detector channels.

    ``ground_truth`` holds the interference-free signal when known
    (simulation only). Construction coerces to complex128 and freezes the
    arrays; value-level invariants are checked by :func:`validate_dataset`,
    which reports instead of raising.
    """

    primary: np.ndarray
    detectors: tuple[np.ndarray, ...]
    ground_truth: Optional[np.ndarray] = None
    partition_index: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "primary", _frozen_matrix(self.primary))
        object.__setattr__(
            self, "detectors", tuple(_frozen_matrix(d) for d in self.detectors)
        )
        if self.ground_truth is not None:
            object.__setattr__(self, "ground_truth", _frozen_matrix(self.ground_truth))

    @property
    def n_kx(self) -> int:
        return self.primary.shape[0]

    @property
    def n_pe(self) -> int:
        return self.primary.shape[1]

    @property
    def n_detectors(self) -> int:
        return len(self.detectors)


@dataclass(frozen=True, eq=False)
class VolumeDataset:
    """Ordered 2-d partitions of a 3-d acquisition (post partition transform)."""

    partitions: tuple[AcquisitionDataset, ...]

    def __post_init__(self):
        parts = tuple(self.partitions)
        object.__setattr__(self, "partitions", parts)
        if not parts:
            raise ValueError("volume must contain at least one partition")
        first = parts[0]
        for i, p in enumerate(parts):
            if p.primary.shape != first.primary.shape:
                raise ValueError(
                    f"partition {i} dims {p.primary.shape} differ from {first.primary.shape}"
                )
            if p.n_detectors != first.n_detectors:
                raise ValueError(
                    f"partition {i} has {p.n_detectors} detectors, expected {first.n_detectors}"
                )

    @property
    def n_partitions(self) -> int:
        return len(self.partitions)

    @property
    def n_kx(self) -> int:
        return self.partitions[0].n_kx

    @property
    def n_pe(self) -> int:
        return self.partitions[0].n_pe

    @property
    def n_detectors(self) -> int:
        return self.partitions[0].n_detectors


@dataclass(frozen=True)
class CorrectionConfig:
    """Algorithm configuration.

    ``dkx``/``dky`` are the convolution window sizes along readout and phase
    encode; both must be odd so the window is centered. The first pass always
    runs with an effective dky of 1, the per-group pass uses ``dky``.
    """

    dkx: int = 7
    dky: int = 1
    first_pass_window: int = 1          # PE lines per first-pass window
    cluster_threshold: float = 0.5      # correlation threshold in (0, 1]
    rank_cutoff: float = 1e-12          # relative singular-value cutoff
    max_groups: Optional[int] = None
    cluster_method: str = "greedy"      # "greedy" | "kmeans" (kmeans needs max_groups)

    def __post_init__(self):
        for name in ("dkx", "dky"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1 or v % 2 == 0:
                raise ValueError(f"{name} must be a positive odd integer, got {v!r}")
        if not isinstance(self.first_pass_window, int) or self.first_pass_window < 1:
            raise ValueError(f"first_pass_window must be >= 1, got {self.first_pass_window!r}")
        if not (0.0 < self.cluster_threshold <= 1.0):
            raise ValueError(f"cluster_threshold must be in (0, 1], got {self.cluster_threshold!r}")
        if not (self.rank_cutoff > 0.0):
            raise ValueError(f"rank_cutoff must be > 0, got {self.rank_cutoff!r}")
        if self.max_groups is not None and self.max_groups < 1:
            raise ValueError(f"max_groups must be >= 1 or None, got {self.max_groups!r}")
        if self.cluster_method not in ("greedy", "kmeans"):
            raise ValueError(f"unknown cluster_method {self.cluster_method!r}")
        if self.cluster_method == "kmeans" and self.max_groups is None:
            raise ValueError("cluster_method='kmeans' requires max_groups")


@dataclass(frozen=True, eq=False)
class ResponseVector:
    """Impulse-response taps for one temporal window.

    Coefficients are ordered detector-major, then phase-encode offset, then
    readout offset, offsets ascending (see ``convmatrix`` for the exact
    shift convention). Length is n_detectors * dkx * dky.
    """

    coefficients: np.ndarray
    window_id: int = -1

    def __post_init__(self):
        arr = np.array(self.coefficients, dtype=np.complex128).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "coefficients", arr)

    def __len__(self) -> int:
        return self.coefficients.size


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Per-window impulse responses in acquisition order (columns)."""

    columns: tuple[ResponseVector, ...]

    def __post_init__(self):
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        if not cols:
            raise ValueError("response matrix needs at least one column")
        length = len(cols[0])
        for c in cols:
            if len(c) != length:
                raise ValueError("response columns must all have equal length")

    @property
    def n_windows(self) -> int:
        return len(self.columns)

    def as_array(self) -> np.ndarray:
        """Stack columns into a (length, n_windows) matrix."""
        return np.stack([c.coefficients for c in self.columns], axis=1)


@dataclass(frozen=True)
class ClusterGroup:
    """One temporal group: its first-pass windows and the PE lines they cover."""

    windows: tuple[int, ...]
    lines: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ClusterPlan:
    """Partition of PE lines into temporal groups.

    Groups are disjoint and collectively exhaustive over ``n_lines``; the
    greedy clusterer additionally produces contiguous runs, the k-means
    alternative may not.
    """

    groups: tuple[ClusterGroup, ...]
    n_lines: int

    def __post_init__(self):
        groups = tuple(self.groups)
        object.__setattr__(self, "groups", groups)
        if not groups:
            raise ValueError("cluster plan needs at least one group")
        seen: list[int] = []
        for g in groups:
            seen.extend(g.lines)
        if sorted(seen) != list(range(self.n_lines)):
            raise ValueError("groups must cover every PE line exactly once")

    @property
    def n_groups(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class ValidationReport:
    """Every invariant violation found in a dataset; valid iff empty."""

    violations: tuple[str, ...] = field(default=())

    @property
    def valid(self) -> bool:
        return not self.violations


def _first_nonfinite(arr: np.ndarray):
    bad = ~np.isfinite(arr.real) | ~np.isfinite(arr.imag)
    if bad.any():
        idx = np.argwhere(bad)[0]
        return int(idx[0]), int(idx[1])
    return None


def validate_dataset(ds: AcquisitionDataset) -> ValidationReport:
    """Check every dataset invariant and report all violations.

    Never raises; pure (identical input yields an identical report).
    """
    problems: list[str] = []
    n_kx, n_pe = ds.primary.shape
    if ds.n_detectors < 1:
        problems.append("no detector channels")
    if n_kx < 1 or n_pe < 1:
        problems.append(f"primary dims {n_kx}×{n_pe} must be at least 1×1")
    for i, det in enumerate(ds.detectors):
        if det.shape != ds.primary.shape:
            problems.append(
                f"detector {i} dims {det.shape[0]}×{det.shape[1]} ≠ {n_kx}×{n_pe}"
            )
    if ds.ground_truth is not None and ds.ground_truth.shape != ds.primary.shape:
        gt = ds.ground_truth
        problems.append(
            f"ground_truth dims {gt.shape[0]}×{gt.shape[1]} ≠ {n_kx}×{n_pe}"
        )
    loc = _first_nonfinite(ds.primary)
    if loc is not None:
        problems.append(f"non-finite at ({loc[0]},{loc[1]}) in primary")
    for i, det in enumerate(ds.detectors):
        loc = _first_nonfinite(det)
        if loc is not None:
            problems.append(f"non-finite at ({loc[0]},{loc[1]}) in detector {i}")
    if ds.ground_truth is not None:
        loc = _first_nonfinite(ds.ground_truth)
        if loc is not None:
            problems.append(f"non-finite at ({loc[0]},{loc[1]}) in ground_truth")
    return ValidationReport(tuple(problems))


def pe_windows(n_pe: int, window_size: int) -> list[range]:
    """Split PE lines into consecutive windows; the last may be short."""
    if not (1 <= window_size <= n_pe):
        raise ValueError(f"window size {window_size} must be in [1, {n_pe}]")
    return [range(start, min(start + window_size, n_pe)) for start in range(0, n_pe, window_size)]
