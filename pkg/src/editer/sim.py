"""Synthetic scenarios: analytic phantoms plus multi-channel interference.

Interference is synthesized as a time-domain voltage on the continuous
acquisition clock (absolute sample index n = line * line_period + kx), then
indexed as k-space. Channel couplings act as zero-padded FIR kernels over
(readout, phase-encode) offsets with exactly the shift convention of
``convmatrix``, so a scenario whose kernels fit inside the configured
correction window is exactly representable by the correction model.

All randomness comes from the counter-based generator in ``rng``; a fixed
master seed makes a scenario fully deterministic. Stream layout:

    source j waveform:  key = child(stream_key(seed, 0, j), source.seed)
    channel c noise:    key = stream_key(seed, 1, c)        (c = 0 is primary)
    partition p seed:   child(stream_key(seed, 2, p), 0)

Broadband waveforms draw complex normals at counters n + 64 (64 = filter
margin), every other stream draws at the absolute sample index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import j1

from .convmatrix import shift_zero_padded, tap_offsets
from .datatypes import AcquisitionDataset, VolumeDataset
from .rng import child_key, complex_normal, stream_key

_SOURCE_TAG = 0
_NOISE_TAG = 1
_PARTITION_TAG = 2
FILTER_LEN = 65          # broadband low-pass taps; margin = FILTER_LEN - 1

SOURCE_KINDS = ("single_tone", "multi_tone", "broadband")


@dataclass(frozen=True)
class PhantomShape:
    """One analytic shape: 'ellipse' (semi-axes) or 'rect' (full widths).

    Geometry is in pixels relative to the image center; x runs along the
    readout axis (matrix rows), y along phase encode (columns).
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    size: tuple[float, float] = (1.0, 1.0)
    intensity: float = 1.0
    angle_deg: float = 0.0


@dataclass(frozen=True)
class EmiSource:
    """A single interference source.

    Tones are (frequency offset as a fraction of the readout bandwidth in
    [-0.5, 0.5), amplitude, phase). Broadband sources emit seeded complex
    white noise low-pass filtered to ``bandwidth_fraction`` of the readout
    bandwidth with RMS ``amplitude``.
    """

    kind: str
    tones: tuple[tuple[float, float, float], ...] = ()
    amplitude: float = 0.0
    bandwidth_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "single_tone" and len(self.tones) != 1:
            raise ValueError("single_tone needs exactly one tone")
        if self.kind == "multi_tone" and not self.tones:
            raise ValueError("multi_tone needs at least one tone")
        for f, amp, _phase in self.tones:
            if not (-0.5 <= f < 0.5):
                raise ValueError(f"tone offset {f} outside [-0.5, 0.5)")
            if amp < 0:
                raise ValueError("tone amplitudes must be >= 0")
        if self.kind == "broadband":
            if self.amplitude < 0:
                raise ValueError("broadband amplitude must be >= 0")
            if not (0.0 < self.bandwidth_fraction <= 1.0):
                raise ValueError("bandwidth_fraction must be in (0, 1]")


@dataclass(frozen=True)
class SourceSchedule:
    """Per-source on/off intervals over PE lines, ends inclusive.

    A source with no intervals is on for the whole scan; with intervals the
    mask starts all-off and intervals are applied in order.
    """

    per_source: tuple[tuple[tuple[int, int, bool], ...], ...]

    def masks(self, n_sources: int, n_pe: int) -> np.ndarray:
        if len(self.per_source) != n_sources:
            raise ValueError(
                f"schedule covers {len(self.per_source)} sources, scenario has {n_sources}"
            )
        out = np.ones((n_sources, n_pe), dtype=bool)
        for j, intervals in enumerate(self.per_source):
            if not intervals:
                continue
            out[j] = False
            prev_start = -1
            for start, end, on in intervals:
                if not (0 <= start <= end < n_pe):
                    raise ValueError(f"interval ({start},{end}) outside [0, {n_pe})")
                if start < prev_start:
                    raise ValueError("intervals must be ordered by start line")
                prev_start = start
                out[j, start:end + 1] = bool(on)
        return out


def _as_kernel(arr) -> np.ndarray:
    k = np.array(arr, dtype=np.complex128)
    if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise ValueError("coupling kernels must be 2-d with odd dims (dky, dkx)")
    k.setflags(write=False)
    return k


@dataclass(frozen=True, eq=False)
class CouplingModel:
    """Per (source, channel) coupling: finite 2-d kernel plus a scalar gain.

    Channel 0 is the primary coil, channels 1..n_c the detectors. Kernel
    arrays are (dky_true, dkx_true) over (phase-encode, readout) offsets.
    """

    gains: tuple[tuple[complex, ...], ...]
    kernels: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        gains = tuple(tuple(complex(g) for g in row) for row in self.gains)
        kernels = tuple(tuple(_as_kernel(k) for k in row) for row in self.kernels)
        if len(gains) != len(kernels) or any(
            len(gr) != len(kr) for gr, kr in zip(gains, kernels)
        ):
            raise ValueError("gains and kernels must have matching (source, channel) shape")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "kernels", kernels)

    @classmethod
    def scalar(cls, gains: Sequence[Sequence[complex]]) -> "CouplingModel":
        """Pure-gain couplings (every kernel a center impulse)."""
        one = np.ones((1, 1), dtype=np.complex128)
        return cls(
            gains=tuple(tuple(row) for row in gains),
            kernels=tuple(tuple(one for _ in row) for row in gains),
        )

    @property
    def n_sources(self) -> int:
        return len(self.gains)

    @property
    def n_channels(self) -> int:
        return len(self.gains[0]) if self.gains else 0

    def max_support(self) -> tuple[int, int]:
        """(dkx, dky) hull of every kernel."""
        dkx = max((k.shape[1] for row in self.kernels for k in row), default=1)
        dky = max((k.shape[0] for row in self.kernels for k in row), default=1)
        return dkx, dky


@dataclass(frozen=True, eq=False)
class EmiScenario:
    """Everything needed to synthesize one acquisition deterministically."""

    shapes: tuple[PhantomShape, ...]
    dims: tuple[int, int]                      # (n_kx, n_pe)
    n_detectors: int
    sources: tuple[EmiSource, ...]
    coupling: CouplingModel
    noise_sigma: tuple[float, ...]             # per channel, primary first
    seed: int = 0
    schedule: Optional[SourceSchedule] = None
    line_period: Optional[int] = None          # samples between line starts
    decouple_support: Optional[tuple[int, int]] = None
    name: str = "scenario"

    def __post_init__(self):
        n_kx, n_pe = self.dims
        if n_kx < 1 or n_pe < 1:
            raise ValueError(f"dims must be at least 1×1, got {self.dims}")
        if self.n_detectors < 1:
            raise ValueError("need at least one detector channel")
        if len(self.noise_sigma) != self.n_detectors + 1:
            raise ValueError(
                f"noise_sigma needs {self.n_detectors + 1} entries (primary first)"
            )
        if any(s < 0 for s in self.noise_sigma):
            raise ValueError("noise sigmas must be >= 0")
        if self.coupling.n_sources != len(self.sources):
            raise ValueError("coupling rows must match the source list")
        if self.coupling.n_channels != self.n_detectors + 1:
            raise ValueError("coupling columns must cover primary plus detectors")
        dkx, dky = self.coupling.max_support()
        if dkx > n_kx or dky > n_pe:
            raise ValueError("coupling support exceeds the matrix dims")
        if self.line_period is not None and self.line_period < n_kx:
            raise ValueError("line_period must be at least n_kx")

    @property
    def n_kx(self) -> int:
        return self.dims[0]

    @property
    def n_pe(self) -> int:
        return self.dims[1]

    @property
    def period(self) -> int:
        return self.line_period if self.line_period is not None else self.n_kx


# ---------------------------------------------------------------------------
# phantom
# ---------------------------------------------------------------------------

def _k_grid(dims: tuple[int, int]):
    n_kx, n_pe = dims
    kx = (np.arange(n_kx) - n_kx // 2) / n_kx
    ky = (np.arange(n_pe) - n_pe // 2) / n_pe
    return kx[:, None], ky[None, :]


def _jinc(z: np.ndarray) -> np.ndarray:
    out = np.ones_like(z)
    nz = z != 0.0
    out[nz] = 2.0 * j1(z[nz]) / z[nz]
    return out


def phantom_kspace(shapes: Sequence[PhantomShape], dims: tuple[int, int]) -> np.ndarray:
    """Closed-form Fourier transform of a shape sum on the Cartesian grid."""
    if not shapes:
        raise ValueError("need at least one shape")
    kx, ky = _k_grid(dims)
    total = np.zeros(dims, dtype=np.complex128)
    for s in shapes:
        a, b = s.size
        if a * b == 0.0:
            raise ValueError(f"degenerate {s.kind} with zero area")
        theta = np.deg2rad(s.angle_deg)
        kxr = np.cos(theta) * kx + np.sin(theta) * ky
        kyr = -np.sin(theta) * kx + np.cos(theta) * ky
        if s.kind == "ellipse":
            rho = 2.0 * np.pi * np.sqrt((a * kxr) ** 2 + (b * kyr) ** 2)
            ft = s.intensity * np.pi * a * b * _jinc(rho)
        elif s.kind == "rect":
            ft = s.intensity * a * b * np.sinc(a * kxr) * np.sinc(b * kyr)
        else:
            raise ValueError(f"unknown shape kind {s.kind!r}")
        phase = np.exp(-2j * np.pi * (kx * s.center[0] + ky * s.center[1]))
        total += ft * phase
    return total


# ---------------------------------------------------------------------------
# interference synthesis
# ---------------------------------------------------------------------------

def _lowpass_taps(bandwidth_fraction: float) -> np.ndarray:
    cutoff = 0.5 * bandwidth_fraction
    j = np.arange(FILTER_LEN) - (FILTER_LEN - 1) / 2
    taps = 2.0 * cutoff * np.sinc(2.0 * cutoff * j) * np.hamming(FILTER_LEN)
    return taps / np.linalg.norm(taps)   # unit noise-power gain


def _sample_grid(scenario: EmiScenario) -> np.ndarray:
    n_kx, n_pe = scenario.dims
    return np.arange(n_kx)[:, None] + scenario.period * np.arange(n_pe)[None, :]


def _base_waveform(scenario: EmiScenario, source_index: int) -> np.ndarray:
    src = scenario.sources[source_index]
    n = _sample_grid(scenario)
    if src.kind in ("single_tone", "multi_tone"):
        base = np.zeros(scenario.dims, dtype=np.complex128)
        for f, amp, phase in src.tones:
            base += amp * np.exp(1j * (2.0 * np.pi * f * n + phase))
        return base
    key = child_key(stream_key(scenario.seed, _SOURCE_TAG, source_index), src.seed)
    margin = FILTER_LEN - 1
    n_max = int(n.max())
    words = complex_normal(key, np.arange(n_max + margin + 1))
    if src.bandwidth_fraction < 1.0:
        stream = np.convolve(words, _lowpass_taps(src.bandwidth_fraction), mode="valid")
    else:
        stream = words[margin:]
    return src.amplitude * stream[n]


def _apply_kernel(base: np.ndarray, kernel: np.ndarray, gain: complex) -> np.ndarray:
    dky_t, dkx_t = kernel.shape
    out = np.zeros_like(base)
    for ty, tx in tap_offsets((dkx_t, dky_t)):
        w = gain * kernel[ty + (dky_t - 1) // 2, tx + (dkx_t - 1) // 2]
        if w != 0:
            out += w * shift_zero_padded(base, tx, ty)
    return out


def synthesize_emi(scenario: EmiScenario) -> list[np.ndarray]:
    """Per-channel interference matrices (primary first, then detectors).

    Each channel sums, over sources, the schedule-masked coupled waveform,
    plus that channel's thermal noise. Detector channels never contain MR
    signal.
    """
    n_channels = scenario.n_detectors + 1
    schedule = scenario.schedule or SourceSchedule(per_source=((),) * len(scenario.sources))
    masks = schedule.masks(len(scenario.sources), scenario.n_pe)
    channels = [np.zeros(scenario.dims, dtype=np.complex128) for _ in range(n_channels)]
    for j in range(len(scenario.sources)):
        base = _base_waveform(scenario, j)
        for c in range(n_channels):
            gain = scenario.coupling.gains[j][c]
            kernel = scenario.coupling.kernels[j][c]
            if gain == 0 or not kernel.any():
                continue
            channels[c] += masks[j][None, :] * _apply_kernel(base, kernel, gain)
    grid = _sample_grid(scenario)
    for c, sigma in enumerate(scenario.noise_sigma):
        if sigma > 0:
            key = stream_key(scenario.seed, _NOISE_TAG, c)
            channels[c] += sigma * complex_normal(key, grid)
    return channels


def _decouple_clean(
    clean: np.ndarray, detectors: Sequence[np.ndarray], support: tuple[int, int]
) -> np.ndarray:
    """Remove from the clean signal its projection onto the detector-shift span.

    Makes signal and interference exactly uncorrelated over the stated
    window, the regime where the correction removes nothing but
    interference.
    """
    from .convmatrix import build_operator   # local import avoids cycle at import time

    op = build_operator(detectors, range(clean.shape[1]), support)
    vec = clean.ravel(order="F")
    coeffs, *_ = np.linalg.lstsq(op.dense, vec, rcond=1e-12)
    return (vec - op.dense @ coeffs).reshape(clean.shape, order="F")


def assemble_dataset(
    scenario: EmiScenario, partition_index: Optional[int] = None
) -> AcquisitionDataset:
    """Phantom plus interference on the primary, interference-only detectors.

    ``ground_truth`` is the noise-free clean signal (primary thermal noise
    excluded).
    """
    clean = phantom_kspace(scenario.shapes, scenario.dims)
    channels = synthesize_emi(scenario)
    if scenario.decouple_support is not None:
        clean = _decouple_clean(clean, channels[1:], scenario.decouple_support)
    return AcquisitionDataset(
        primary=clean + channels[0],
        detectors=tuple(channels[1:]),
        ground_truth=clean,
        partition_index=partition_index,
    )


def assemble_volume(scenario: EmiScenario, n_partitions: int) -> VolumeDataset:
    """Stack independent partitions; partition p reseeds the scenario."""
    if n_partitions < 1:
        raise ValueError("need at least one partition")
    parts = []
    for p in range(n_partitions):
        seed_p = child_key(stream_key(scenario.seed, _PARTITION_TAG, p), 0)
        parts.append(assemble_dataset(replace(scenario, seed=seed_p), partition_index=p))
    return VolumeDataset(partitions=tuple(parts))


def effective_response(scenario: EmiScenario, window: tuple[int, int]) -> np.ndarray:
    """Ground-truth detector-to-primary response in response-vector layout.

    Defined when detector couplings are pure gains and the source count
    equals the detector count with an invertible gain matrix; then the
    response the correction should recover is unique.
    """
    n_det = scenario.n_detectors
    n_src = len(scenario.sources)
    if n_src != n_det:
        raise ValueError("effective response needs n_sources == n_detectors")
    dkx, dky = window
    offsets = tap_offsets(window)
    gain_mat = np.zeros((n_det, n_src), dtype=np.complex128)
    primary = np.zeros((n_src, len(offsets)), dtype=np.complex128)
    for j in range(n_src):
        for i in range(n_det):
            k = scenario.coupling.kernels[j][i + 1]
            if k.shape != (1, 1):
                raise ValueError("effective response needs scalar detector couplings")
            gain_mat[i, j] = scenario.coupling.gains[j][i + 1] * k[0, 0]
        k0 = scenario.coupling.kernels[j][0] * scenario.coupling.gains[j][0]
        dky_t, dkx_t = k0.shape
        if dkx_t > dkx or dky_t > dky:
            raise ValueError("primary kernel support exceeds the window")
        for t, (ty, tx) in enumerate(offsets):
            if abs(ty) <= (dky_t - 1) // 2 and abs(tx) <= (dkx_t - 1) // 2:
                primary[j, t] = k0[ty + (dky_t - 1) // 2, tx + (dkx_t - 1) // 2]
    responses = np.linalg.solve(gain_mat.T, primary)   # (n_det, n_taps)
    return responses.ravel()


# ---------------------------------------------------------------------------
# JSON scenario files
# ---------------------------------------------------------------------------

def _c2j(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _j2c(v) -> complex:
    return complex(v[0], v[1])


def scenario_to_dict(sc: EmiScenario) -> dict:
    return {
        "name": sc.name,
        "dims": list(sc.dims),
        "n_detectors": sc.n_detectors,
        "seed": sc.seed,
        "line_period": sc.line_period,
        "decouple_support": list(sc.decouple_support) if sc.decouple_support else None,
        "phantom": [
            {
                "kind": s.kind,
                "center": list(s.center),
                "size": list(s.size),
                "intensity": s.intensity,
                "angle_deg": s.angle_deg,
            }
            for s in sc.shapes
        ],
        "sources": [
            {
                "kind": s.kind,
                "tones": [list(t) for t in s.tones],
                "amplitude": s.amplitude,
                "bandwidth_fraction": s.bandwidth_fraction,
                "seed": s.seed,
            }
            for s in sc.sources
        ],
        "schedule": None
        if sc.schedule is None
        else [[list(iv) for iv in per_src] for per_src in sc.schedule.per_source],
        "coupling": {
            "gains": [[_c2j(g) for g in row] for row in sc.coupling.gains],
            "kernels": [
                [[[_c2j(v) for v in kr] for kr in k.tolist()] for k in row]
                for row in sc.coupling.kernels
            ],
        },
        "noise_sigma": list(sc.noise_sigma),
    }


def scenario_from_dict(d: dict) -> EmiScenario:
    shapes = tuple(
        PhantomShape(
            kind=s["kind"],
            center=tuple(s.get("center", (0.0, 0.0))),
            size=tuple(s["size"]),
            intensity=float(s.get("intensity", 1.0)),
            angle_deg=float(s.get("angle_deg", 0.0)),
        )
        for s in d["phantom"]
    )
    sources = tuple(
        EmiSource(
            kind=s["kind"],
            tones=tuple(tuple(t) for t in s.get("tones", ())),
            amplitude=float(s.get("amplitude", 0.0)),
            bandwidth_fraction=float(s.get("bandwidth_fraction", 1.0)),
            seed=int(s.get("seed", 0)),
        )
        for s in d["sources"]
    )
    schedule = None
    if d.get("schedule") is not None:
        schedule = SourceSchedule(
            per_source=tuple(
                tuple((int(a), int(b), bool(on)) for a, b, on in per_src)
                for per_src in d["schedule"]
            )
        )
    c = d["coupling"]
    kernels = tuple(
        tuple(
            np.array([[_j2c(v) for v in kr] for kr in k], dtype=np.complex128)
            for k in row
        )
        for row in c["kernels"]
    )
    coupling = CouplingModel(
        gains=tuple(tuple(_j2c(g) for g in row) for row in c["gains"]),
        kernels=kernels,
    )
    support = d.get("decouple_support")
    return EmiScenario(
        shapes=shapes,
        dims=tuple(d["dims"]),
        n_detectors=int(d["n_detectors"]),
        sources=sources,
        coupling=coupling,
        noise_sigma=tuple(float(s) for s in d["noise_sigma"]),
        seed=int(d.get("seed", 0)),
        schedule=schedule,
        line_period=d.get("line_period"),
        decouple_support=tuple(support) if support else None,
        name=d.get("name", "scenario"),
    )


def save_scenario(sc: EmiScenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2)


def load_scenario(path) -> EmiScenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
