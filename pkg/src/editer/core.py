"""Dynamic interference estimation and removal.

The correction runs in four stages over one 2-d acquisition:

1. fit one impulse response per small temporal window of PE lines (first
   pass, effective dky = 1)
2. correlate the normalized responses across windows
3. group windows whose responses stay consistent (greedy contiguous
   thresholding by default, k-means optionally)
4. refit one response per group over the full configured window and subtract
   the predicted interference from the primary data

Fits are minimum-norm least squares with a relative singular-value cutoff, so
quiet or rank-deficient windows degrade to small (or zero) responses instead
of blowing up.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .convmatrix import ConvOperator, operator_from_stack, tap_stack
from .datatypes import (
    AcquisitionDataset,
    ClusterGroup,
    ClusterPlan,
    CorrectionConfig,
    ResponseMatrix,
    ResponseVector,
    ValidationReport,
    VolumeDataset,
    pe_windows,
    validate_dataset,
)

WORKERS_ENV = "EDITER_WORKERS"


class DatasetValidationError(ValueError):
    """Raised when a correction is attempted on an invalid dataset."""

    def __init__(self, report: ValidationReport, context: str = ""):
        self.report = report
        where = f" ({context})" if context else ""
        super().__init__(
            f"invalid dataset{where}: " + "; ".join(report.violations)
        )


class VolumeError(RuntimeError):
    """One or more partitions of a volume failed; carries partial results."""

    def __init__(self, failures, results):
        self.failures = tuple(failures)      # (partition index, exception)
        self.results = tuple(results)        # Optional[CorrectionResult] per partition
        detail = "; ".join(f"partition {i}: {exc}" for i, exc in self.failures)
        super().__init__(f"{len(self.failures)} partition(s) failed: {detail}")


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Pairwise |<h_i, h_j>| of unit-normalized window responses.

    Symmetric with unit diagonal; an all-zero response correlates 0 with
    everything and 1 with itself. ``zero_columns`` marks those responses so
    the clusterer can apply its degenerate-window rule.
    """

    values: np.ndarray
    zero_columns: np.ndarray

    @property
    def n_windows(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class CorrectionDiagnostics:
    group_residuals: tuple[float, ...]
    group_sizes: tuple[int, ...]
    correlation: CorrelationMatrix
    timings: dict


@dataclass(frozen=True, eq=False)
class CorrectionResult:
    corrected: AcquisitionDataset
    plan: ClusterPlan
    responses: tuple[ResponseVector, ...]
    diagnostics: CorrectionDiagnostics


def estimate_response(
    op: ConvOperator,
    samples: np.ndarray,
    rank_cutoff: float = 1e-12,
    window_id: int = -1,
) -> ResponseVector:
    """Minimum-norm least-squares impulse response for one operator.

    Singular values below rank_cutoff times the largest are treated as zero,
    which makes quiet windows (zero detector data) yield the zero response.
    """
    s = np.asarray(samples, dtype=np.complex128).ravel(order="F")
    if s.size != op.dense.shape[0]:
        raise ValueError(
            f"sample count {s.size} ≠ operator row count {op.dense.shape[0]}"
        )
    coeffs, *_ = np.linalg.lstsq(op.dense, s, rcond=rank_cutoff)
    return ResponseVector(coefficients=coeffs, window_id=window_id)


def first_pass(ds: AcquisitionDataset, cfg: CorrectionConfig) -> ResponseMatrix:
    """One response per window of ``first_pass_window`` consecutive PE lines.

    The first pass always uses an effective dky of 1; the last window may be
    short when the window size does not divide n_pe.
    """
    windows = pe_windows(ds.n_pe, cfg.first_pass_window)
    stack = tap_stack(ds.detectors, (cfg.dkx, 1))
    columns = []
    for w, lines in enumerate(windows):
        op = operator_from_stack(stack, list(lines), (cfg.dkx, 1), ds.n_kx)
        s = ds.primary[:, list(lines)].ravel(order="F")
        columns.append(estimate_response(op, s, cfg.rank_cutoff, window_id=w))
    return ResponseMatrix(columns=tuple(columns))


def correlation_matrix(responses: ResponseMatrix) -> CorrelationMatrix:
    """Magnitude correlation of normalized response columns."""
    a = responses.as_array()
    norms = np.linalg.norm(a, axis=0)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    unit = a / safe
    values = np.abs(unit.conj().T @ unit)
    values = 0.5 * (values + values.T)   # exact symmetry despite BLAS rounding
    np.clip(values, 0.0, 1.0, out=values)
    values[zero, :] = 0.0
    values[:, zero] = 0.0
    np.fill_diagonal(values, 1.0)
    values.setflags(write=False)
    zero.setflags(write=False)
    return CorrelationMatrix(values=values, zero_columns=zero)


def _greedy_groups(corr: CorrelationMatrix, cfg: CorrectionConfig) -> list[list[int]]:
    values, zero = corr.values, corr.zero_columns
    groups: list[list[int]] = []
    seeds: list[int] = []
    for w in range(corr.n_windows):
        if groups:
            at_cap = cfg.max_groups is not None and len(groups) == cfg.max_groups
            zero_pair = bool(zero[w]) and bool(zero[w - 1])
            if at_cap or zero_pair or values[w, seeds[-1]] >= cfg.cluster_threshold:
                groups[-1].append(w)
                continue
        groups.append([w])
        seeds.append(w)
    return groups


def _kmeans_groups(
    responses: ResponseMatrix, corr: CorrelationMatrix, cfg: CorrectionConfig
) -> list[list[int]]:
    """Deterministic Lloyd iterations over normalized response columns.

    k = min(max_groups, n_windows); centroids start at evenly spaced
    windows. May produce non-contiguous groups.
    """
    a = responses.as_array()
    norms = np.linalg.norm(a, axis=0)
    unit = a / np.where(norms == 0.0, 1.0, norms)
    feats = np.concatenate([unit.real, unit.imag], axis=0).T   # (n_w, 2L)
    n_w = feats.shape[0]
    k = min(cfg.max_groups, n_w)
    centers = feats[np.round(np.linspace(0, n_w - 1, k)).astype(int)].copy()
    labels = np.zeros(n_w, dtype=int)
    for _ in range(100):
        dists = ((feats[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dists, axis=1)
        for c in range(k):
            if not np.any(new_labels == c):     # reseed empty cluster
                new_labels[np.argmax(dists.min(axis=1))] = c
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for c in range(k):
            centers[c] = feats[labels == c].mean(axis=0)
    order = sorted(range(k), key=lambda c: int(np.argmax(labels == c)))
    return [[w for w in range(n_w) if labels[w] == c] for c in order]


def cluster_windows(
    corr: CorrelationMatrix,
    cfg: CorrectionConfig,
    window_lines: Optional[Sequence[Sequence[int]]] = None,
    responses: Optional[ResponseMatrix] = None,
) -> ClusterPlan:
    """Group temporal windows by response consistency.

    Greedy mode walks windows in acquisition order; a window joins the
    current group iff its correlation with the group's seed (first member)
    reaches the threshold, otherwise it seeds a new group. Two neighbouring
    all-zero responses always group together. ``window_lines`` maps window
    index to PE lines (default: one line per window); ``responses`` is
    required for the k-means mode.
    """
    if window_lines is None:
        window_lines = [[w] for w in range(corr.n_windows)]
    if len(window_lines) != corr.n_windows:
        raise ValueError("window_lines must map every window")
    if cfg.cluster_method == "kmeans":
        if responses is None:
            raise ValueError("k-means clustering needs the response matrix")
        member_lists = _kmeans_groups(responses, corr, cfg)
    else:
        member_lists = _greedy_groups(corr, cfg)
    groups = []
    for members in member_lists:
        lines: list[int] = []
        for w in members:
            lines.extend(int(l) for l in window_lines[w])
        groups.append(ClusterGroup(windows=tuple(members), lines=tuple(lines)))
    n_lines = sum(len(wl) for wl in window_lines)
    return ClusterPlan(groups=tuple(groups), n_lines=n_lines)


def correct_cluster(
    ds: AcquisitionDataset,
    lines: Sequence[int],
    cfg: CorrectionConfig,
    group_id: int = 0,
    stack: Optional[np.ndarray] = None,
):
    """Fit and subtract one response over a group of PE lines.

    Returns (corrected lines as (n_kx, n_lines), response, residual norm).
    """
    line_ids = [int(l) for l in lines]
    if not line_ids:
        raise ValueError("group must not be empty")
    if stack is None:
        stack = tap_stack(ds.detectors, (cfg.dkx, cfg.dky))
    op = operator_from_stack(stack, line_ids, (cfg.dkx, cfg.dky), ds.n_kx)
    s = ds.primary[:, line_ids].ravel(order="F")
    response = estimate_response(op, s, cfg.rank_cutoff, window_id=group_id)
    residual_flat = s - op.dense @ response.coefficients
    residual = float(np.linalg.norm(residual_flat))
    corrected = residual_flat.reshape(ds.n_kx, len(line_ids), order="F")
    return corrected, response, residual


def run_editer(ds: AcquisitionDataset, cfg: CorrectionConfig) -> CorrectionResult:
    """Full dynamic correction of one 2-d acquisition."""
    report = validate_dataset(ds)
    if not report.valid:
        raise DatasetValidationError(report)
    t0 = time.perf_counter()
    responses = first_pass(ds, cfg)
    t1 = time.perf_counter()
    corr = correlation_matrix(responses)
    windows = pe_windows(ds.n_pe, cfg.first_pass_window)
    plan = cluster_windows(corr, cfg, window_lines=[list(w) for w in windows],
                           responses=responses)
    t2 = time.perf_counter()
    corrected = np.array(ds.primary)
    group_responses = []
    residuals = []
    stack = tap_stack(ds.detectors, (cfg.dkx, cfg.dky))
    for g, group in enumerate(plan.groups):
        fixed, response, residual = correct_cluster(ds, group.lines, cfg, g, stack=stack)
        corrected[:, list(group.lines)] = fixed
        group_responses.append(response)
        residuals.append(residual)
    t3 = time.perf_counter()
    out = AcquisitionDataset(
        primary=corrected,
        detectors=ds.detectors,
        ground_truth=ds.ground_truth,
        partition_index=ds.partition_index,
    )
    diag = CorrectionDiagnostics(
        group_residuals=tuple(residuals),
        group_sizes=tuple(len(g.lines) for g in plan.groups),
        correlation=corr,
        timings={
            "first_pass_s": t1 - t0,
            "clustering_s": t2 - t1,
            "correction_s": t3 - t2,
            "total_s": t3 - t0,
        },
    )
    return CorrectionResult(
        corrected=out, plan=plan, responses=tuple(group_responses), diagnostics=diag
    )


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_editer_volume(
    vol: VolumeDataset,
    cfg: CorrectionConfig,
    workers: Optional[int] = None,
) -> list[CorrectionResult]:
    """Correct every partition independently; output order equals input order.

    Partitions are independent, so they may run on several workers; outputs
    are identical regardless of scheduling. If any partition fails, the rest
    are still processed and a :class:`VolumeError` carrying all failures (and
    the completed results) is raised.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    results: list[Optional[CorrectionResult]] = [None] * vol.n_partitions
    failures: list[tuple[int, Exception]] = []

    def _one(i: int):
        return i, run_editer(vol.partitions[i], cfg)

    if workers == 1:
        for i in range(vol.n_partitions):
            try:
                results[i] = _one(i)[1]
            except Exception as exc:   # noqa: BLE001 - reported per partition
                failures.append((i, exc))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_one, i): i for i in range(vol.n_partitions)}
            for fut, i in futures.items():
                try:
                    results[i] = fut.result()[1]
                except Exception as exc:   # noqa: BLE001
                    failures.append((i, exc))
    if failures:
        failures.sort(key=lambda f: f[0])
        raise VolumeError(failures, results)
    return results  # type: ignore[return-value]


def static_config(cfg: CorrectionConfig) -> CorrectionConfig:
    """Same configuration with grouping disabled (one global response)."""
    return replace(cfg, max_groups=1, cluster_method="greedy")
