"""Retrospective interference removal for multi-detector MR k-space data."""

from .convmatrix import ConvOperator, build_operator, predict_emi, shift_zero_padded, tap_offsets
from .core import (
    CorrectionDiagnostics,
    CorrectionResult,
    CorrelationMatrix,
    DatasetValidationError,
    VolumeError,
    cluster_windows,
    correct_cluster,
    correlation_matrix,
    estimate_response,
    first_pass,
    run_editer,
    run_editer_volume,
    static_config,
)
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
from .fileio import (
    DataFormatError,
    DatasetFileHeader,
    export_pgm,
    read_dataset,
    read_volume,
    write_dataset,
    write_volume,
)
from .metrics import (
    MagnitudeImage,
    RoiSpec,
    nrmse,
    percent_emi_removed,
    percent_emi_removed_from_std,
    reconstruct,
    roi_std,
    volume_percent_emi_removed,
)
from .presets import PRESETS, Preset, get_preset
from .sim import (
    CouplingModel,
    EmiScenario,
    EmiSource,
    PhantomShape,
    SourceSchedule,
    assemble_dataset,
    assemble_volume,
    effective_response,
    load_scenario,
    phantom_kspace,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    synthesize_emi,
)

__version__ = "0.1.0"
