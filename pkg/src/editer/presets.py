"""Ready-made synthetic scenarios with matched correction configs and ROIs.

Amplitude choices are calibration decisions for the synthetic studies, not
measured values: interference strength is expressed relative to the RMS of
the phantom k-space, and where a preset is advertised as "20 dB over noise"
the primary-channel thermal sigma is pinned to one tenth of the calibrated
interference RMS. Detector channels are noiseless idealized references in
all presets; the exactness presets (`exact_recovery`, `window_sweep`) also
zero the primary noise and decouple the clean signal from the detector-shift
span so in-model recovery is exact.

Tone offsets are integer multiples of 1/n_kx with line_period = n_kx, so a
tone lands on a single reconstruction pixel and its response is identical
from line to line.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datatypes import CorrectionConfig
from .metrics import RoiSpec
from .sim import (
    CouplingModel,
    EmiScenario,
    EmiSource,
    PhantomShape,
    SourceSchedule,
    phantom_kspace,
    synthesize_emi,
)

EMI_TO_SIGNAL_RATIO = 10.0       # interference RMS over phantom k-space RMS
EMI_OVER_NOISE_DB = 20.0         # pinned by the quality studies


@dataclass(frozen=True)
class Preset:
    name: str
    scenario: EmiScenario
    config: CorrectionConfig
    roi: RoiSpec


def _standard_shapes() -> tuple[PhantomShape, ...]:
    return (
        PhantomShape("ellipse", center=(0.0, 0.0), size=(120.0, 30.0), intensity=1.0),
        PhantomShape("ellipse", center=(-25.0, -6.0), size=(55.0, 14.0), intensity=-0.4),
        PhantomShape("ellipse", center=(45.0, 8.0), size=(28.0, 9.0), intensity=0.55, angle_deg=20.0),
        PhantomShape("rect", center=(90.0, -10.0), size=(26.0, 8.0), intensity=0.7),
    )


_STANDARD_DIMS = (512, 101)
_STANDARD_ROI = RoiSpec(rows=(24, 96), cols=(10, 90))
_STANDARD_CONFIG = CorrectionConfig(dkx=7, dky=1, first_pass_window=1, cluster_threshold=0.5)


def _unit(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=np.complex128)
    return v / np.linalg.norm(v)


def _kernel_row(vec, scale: float) -> np.ndarray:
    return (scale * _unit(vec)).reshape(1, -1)


_KERNEL_A = _kernel_row([0.10, -0.22j, 0.55, 1.00, 0.48, 0.20j, 0.08], 0.5)
_KERNEL_B = _kernel_row([0.85, 0.30j, -0.45, 0.25, -0.50j, 0.35, -0.15], 0.5)
_KERNEL_C = _kernel_row([-0.20, 0.45, -0.30j, 0.60, 0.25j, -0.40, 0.10], 0.5)

_DETECTOR_GAINS = (
    2.0,
    1.4 * np.exp(0.6j),
    1.1 * np.exp(-1.2j),
    0.9 * np.exp(2.0j),
    0.7 * np.exp(-2.5j),
)


def _orthogonalized(vec, against) -> np.ndarray:
    v = np.asarray(vec, dtype=np.complex128).ravel()
    a = _unit(np.asarray(against).ravel())
    v = v - a * (a.conj() @ v)
    return v


def _signal_rms(scenario: EmiScenario) -> float:
    k = phantom_kspace(scenario.shapes, scenario.dims)
    return float(np.linalg.norm(k)) / np.sqrt(k.size)


def _scaled_source(src: EmiSource, factor: float) -> EmiSource:
    return replace(
        src,
        tones=tuple((f, amp * factor, ph) for f, amp, ph in src.tones),
        amplitude=src.amplitude * factor,
    )


def _calibrate(scenario: EmiScenario, targets: tuple[float, ...]) -> EmiScenario:
    """Scale each source so its primary-channel RMS (over its on-lines) hits target."""
    schedule = scenario.schedule or SourceSchedule(per_source=((),) * len(scenario.sources))
    masks = schedule.masks(len(scenario.sources), scenario.n_pe)
    scaled = []
    for j, src in enumerate(scenario.sources):
        solo = replace(
            scenario,
            sources=(src,),
            schedule=SourceSchedule(per_source=(schedule.per_source[j],)),
            coupling=CouplingModel(
                gains=(scenario.coupling.gains[j],),
                kernels=(scenario.coupling.kernels[j],),
            ),
            noise_sigma=(0.0,) * (scenario.n_detectors + 1),
        )
        primary = synthesize_emi(solo)[0][:, masks[j]]
        rms = float(np.linalg.norm(primary)) / np.sqrt(primary.size)
        scaled.append(_scaled_source(src, targets[j] / rms))
    return replace(scenario, sources=tuple(scaled))


def _coupling(kernels_primary, det_gains) -> CouplingModel:
    """Primary coupled through a kernel per source, detectors through pure gains."""
    one = np.ones((1, 1), dtype=np.complex128)
    gains = tuple((1.0 + 0.0j, *(complex(g) for g in det_gains)) for _ in kernels_primary)
    kernels = tuple((k, *(one,) * len(det_gains)) for k in kernels_primary)
    return CouplingModel(gains=gains, kernels=kernels)


def _noisy_preset(name: str, sources, kernels_primary, seed: int, schedule=None) -> Preset:
    base = EmiScenario(
        shapes=_standard_shapes(),
        dims=_STANDARD_DIMS,
        n_detectors=5,
        sources=tuple(sources),
        coupling=_coupling(kernels_primary, _DETECTOR_GAINS),
        noise_sigma=(0.0,) * 6,
        seed=seed,
        schedule=schedule,
        name=name,
    )
    signal_rms = _signal_rms(base)
    emi_target = EMI_TO_SIGNAL_RATIO * signal_rms
    scaled = _calibrate(base, (emi_target,) * len(base.sources))
    noise = emi_target / (10.0 ** (EMI_OVER_NOISE_DB / 20.0))
    scenario = replace(scaled, noise_sigma=(noise, 0.0, 0.0, 0.0, 0.0, 0.0))
    return Preset(name=name, scenario=scenario, config=_STANDARD_CONFIG, roi=_STANDARD_ROI)


# A tone at offset f reconstructs at readout pixel n_kx//2 - f*n_kx; these
# offsets keep every stripe off the phantom (|pixel - center| > 120) and put
# most of them inside the standard ROI.
_TONE_BINS = (138, 184, 230)      # harmonics 3..5 of 46/512


def single_tone_preset() -> Preset:
    """One coherent tone, stationary; the structured-interference benchmark."""
    src = EmiSource(kind="single_tone", tones=((180 / 512, 1.0, 0.3),))
    return _noisy_preset("single_tone", [src], [_KERNEL_A], seed=101)


def _harmonic_tones():
    amps = (1.0, 0.65, 0.45)
    phases = (0.0, 1.3, 2.6)
    return tuple((m / 512, a, ph) for m, a, ph in zip(_TONE_BINS, amps, phases))


def multi_tone_preset() -> Preset:
    """Several harmonically related tones, stationary (motor-like spectrum)."""
    src = EmiSource(kind="multi_tone", tones=_harmonic_tones())
    return _noisy_preset("multi_tone", [src], [_KERNEL_B], seed=202)


def broadband_preset() -> Preset:
    """Band-limited noise source, stationary."""
    src = EmiSource(kind="broadband", amplitude=1.0, bandwidth_fraction=0.9, seed=7)
    return _noisy_preset("broadband", [src], [_KERNEL_C], seed=303)


SWITCH_SEGMENTS = ((0, 46), (47, 53), (54, 100))   # first source, gap, second source


def switching_preset() -> Preset:
    """Two sources alternating over the scan with a silent gap between them.

    Both sources couple into the detectors with one shared gain pattern but
    reach the primary through orthogonal kernels, so no single static
    response can fit the whole scan while per-segment responses are exact
    and mutually uncorrelated.
    """
    first = EmiSource(kind="multi_tone", tones=_harmonic_tones())
    second = EmiSource(kind="broadband", amplitude=1.0, bandwidth_fraction=0.9, seed=11)
    kern_a = _KERNEL_A
    kern_b = _kernel_row(_orthogonalized(_KERNEL_B.ravel(), kern_a.ravel()), 0.5)
    shared_gains = (2.0, 1.5, 1.0, 0.6, 0.4)
    schedule = SourceSchedule(
        per_source=(
            ((SWITCH_SEGMENTS[0][0], SWITCH_SEGMENTS[0][1], True),),
            ((SWITCH_SEGMENTS[2][0], SWITCH_SEGMENTS[2][1], True),),
        )
    )
    base = EmiScenario(
        shapes=_standard_shapes(),
        dims=_STANDARD_DIMS,
        n_detectors=5,
        sources=(first, second),
        coupling=_coupling([kern_a, kern_b], shared_gains),
        noise_sigma=(0.0,) * 6,
        seed=404,
        schedule=schedule,
        name="switching",
    )
    signal_rms = _signal_rms(base)
    emi_target = EMI_TO_SIGNAL_RATIO * signal_rms
    scaled = _calibrate(base, (emi_target, emi_target))
    noise = emi_target / (10.0 ** (EMI_OVER_NOISE_DB / 20.0))
    scenario = replace(scaled, noise_sigma=(noise, 0.0, 0.0, 0.0, 0.0, 0.0))
    return Preset(name="switching", scenario=scenario, config=_STANDARD_CONFIG, roi=_STANDARD_ROI)


def exact_recovery_preset() -> Preset:
    """Noise-free, in-model scenario where correction must be exact.

    Coupling support fits inside (dkx=7, dky=1), every channel is noiseless
    and the clean signal is decoupled from the detector-shift span, so the
    corrected primary equals the ground truth up to solver round-off.
    """
    tone = EmiSource(kind="single_tone", tones=((-150 / 512, 1.0, 0.9),))
    tones = EmiSource(
        kind="multi_tone",
        tones=((170 / 512, 1.0, 0.2), (-190 / 512, 0.7, 1.7), (230 / 512, 0.5, 2.9)),
    )
    wide = EmiSource(kind="broadband", amplitude=1.0, bandwidth_fraction=1.0, seed=3)
    gains = np.array(
        [
            [1.8, 0.3 - 0.4j, 0.9j],
            [0.5 + 1.1j, 1.6, -0.6],
            [1.0, -0.8j, 1.3],
            [-0.7, 0.9, 0.8 + 0.5j],
            [1.2j, 0.4, -1.0],
        ],
        dtype=np.complex128,
    )   # detectors x sources, full column rank
    one = np.ones((1, 1), dtype=np.complex128)
    kernels_primary = (
        _kernel_row([0.2, -0.4j, 0.8, 1.0, 0.6, 0.3j, 0.1], 1.0),
        _kernel_row([0.9, 0.2, -0.5j, 0.4, 0.7, -0.3, 0.2j], 1.0),
        _kernel_row([-0.3, 0.6j, 0.5, 0.9, -0.4j, 0.5, 0.15], 1.0),
    )
    coupling = CouplingModel(
        gains=tuple(
            (1.0 + 0.0j, *(complex(g) for g in gains[:, j])) for j in range(3)
        ),
        kernels=tuple((k, *(one,) * 5) for k in kernels_primary),
    )
    base = EmiScenario(
        shapes=_standard_shapes(),
        dims=_STANDARD_DIMS,
        n_detectors=5,
        sources=(tone, tones, wide),
        coupling=coupling,
        noise_sigma=(0.0,) * 6,
        seed=505,
        decouple_support=(7, 1),
        name="exact_recovery",
    )
    signal_rms = _signal_rms(base)
    per_source = 25.0 * signal_rms / np.sqrt(3.0)
    scenario = _calibrate(base, (per_source,) * 3)
    return Preset(
        name="exact_recovery", scenario=scenario, config=_STANDARD_CONFIG, roi=_STANDARD_ROI
    )


SWEEP_TRUE_SUPPORT = 5


def window_sweep_preset() -> Preset:
    """True readout support of 5 taps, noise-free, decoupled out to 13 taps.

    Correcting with any window of at least 5 taps (up to 13) recovers the
    ground truth exactly; smaller windows remove only part of the
    interference.
    """
    src = EmiSource(kind="broadband", amplitude=1.0, bandwidth_fraction=1.0, seed=5)
    kernel = _kernel_row([0.04, 0.22, 1.0, 0.18, 0.05], 1.0)
    det_gains = (1.0, 0.8 * np.exp(0.4j), 0.6 * np.exp(-1.1j))
    base = EmiScenario(
        shapes=_standard_shapes(),
        dims=_STANDARD_DIMS,
        n_detectors=3,
        sources=(src,),
        coupling=_coupling([kernel], det_gains),
        noise_sigma=(0.0,) * 4,
        seed=606,
        decouple_support=(13, 1),
        name="window_sweep",
    )
    signal_rms = _signal_rms(base)
    scenario = _calibrate(base, (25.0 * signal_rms,))
    return Preset(
        name="window_sweep", scenario=scenario, config=_STANDARD_CONFIG, roi=_STANDARD_ROI
    )


def mini_single_tone_preset() -> Preset:
    """Small, fast scenario for smoke tests and CLI examples."""
    src = EmiSource(kind="single_tone", tones=((-20 / 64, 1.0, 0.0),))
    shapes = (PhantomShape("ellipse", center=(0.0, 0.0), size=(14.0, 6.0), intensity=1.0),)
    one = np.ones((1, 1), dtype=np.complex128)
    kernel = _kernel_row([0.3, 1.0, 0.4], 0.5)
    base = EmiScenario(
        shapes=shapes,
        dims=(64, 24),
        n_detectors=2,
        sources=(src,),
        coupling=CouplingModel(
            gains=((1.0 + 0.0j, 1.5 + 0.0j, 0.9 - 0.4j),),
            kernels=((kernel, one, one),),
        ),
        noise_sigma=(0.0, 0.0, 0.0),
        seed=909,
        name="mini_single_tone",
    )
    signal_rms = _signal_rms(base)
    scaled = _calibrate(base, (8.0 * signal_rms,))
    scenario = replace(scaled, noise_sigma=(0.8 * signal_rms, 0.0, 0.0))
    return Preset(
        name="mini_single_tone",
        scenario=scenario,
        config=CorrectionConfig(dkx=3, dky=1),
        roi=RoiSpec(rows=(2, 16), cols=(2, 21)),
    )


PRESETS = {
    "single_tone": single_tone_preset,
    "multi_tone": multi_tone_preset,
    "broadband": broadband_preset,
    "switching": switching_preset,
    "exact_recovery": exact_recovery_preset,
    "window_sweep": window_sweep_preset,
    "mini_single_tone": mini_single_tone_preset,
}


def get_preset(name: str) -> Preset:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    return factory()
