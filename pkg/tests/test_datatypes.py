"""Container invariants and the non-throwing dataset validator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from editer import (
    AcquisitionDataset,
    CorrectionConfig,
    ResponseMatrix,
    ResponseVector,
    ClusterGroup,
    ClusterPlan,
    VolumeDataset,
    pe_windows,
    validate_dataset,
)

from conftest import random_complex


def make_dataset(rng, n_kx=16, n_pe=8, n_det=2, truth=False):
    return AcquisitionDataset(
        primary=random_complex(rng, (n_kx, n_pe)),
        detectors=tuple(random_complex(rng, (n_kx, n_pe)) for _ in range(n_det)),
        ground_truth=random_complex(rng, (n_kx, n_pe)) if truth else None,
    )


def test_well_formed_paper_size_dataset_is_valid(rng):
    ds = make_dataset(rng, n_kx=512, n_pe=101, n_det=5)
    report = validate_dataset(ds)
    assert report.valid
    assert report.violations == ()


def test_detector_dim_mismatch_message(rng):
    detectors = [random_complex(rng, (512, 101)) for _ in range(3)]
    detectors[2] = random_complex(rng, (512, 100))
    ds = AcquisitionDataset(primary=random_complex(rng, (512, 101)), detectors=tuple(detectors))
    report = validate_dataset(ds)
    assert not report.valid
    assert report.violations == ("detector 2 dims 512×100 ≠ 512×101",)


def test_nan_sample_reported_with_location(rng):
    primary = random_complex(rng, (8, 10))
    primary[3, 7] = np.nan
    ds = AcquisitionDataset(primary=primary, detectors=(random_complex(rng, (8, 10)),))
    report = validate_dataset(ds)
    assert "non-finite at (3,7) in primary" in report.violations


def test_no_detectors_reported(rng):
    ds = AcquisitionDataset(primary=random_complex(rng, (4, 4)), detectors=())
    assert "no detector channels" in validate_dataset(ds).violations


def test_ground_truth_dims_checked(rng):
    ds = AcquisitionDataset(
        primary=random_complex(rng, (4, 4)),
        detectors=(random_complex(rng, (4, 4)),),
        ground_truth=random_complex(rng, (4, 5)),
    )
    assert any("ground_truth dims" in v for v in validate_dataset(ds).violations)


def test_validation_is_pure(rng):
    primary = random_complex(rng, (6, 5))
    primary[1, 2] = np.inf
    ds = AcquisitionDataset(primary=primary, detectors=(random_complex(rng, (6, 4)),))
    assert validate_dataset(ds).violations == validate_dataset(ds).violations


def test_arrays_are_frozen(rng):
    ds = make_dataset(rng)
    with pytest.raises(ValueError):
        ds.primary[0, 0] = 1.0
    with pytest.raises(ValueError):
        ds.detectors[0][0, 0] = 1.0


def test_volume_requires_consistent_partitions(rng):
    a = make_dataset(rng, 8, 4, 2)
    b = make_dataset(rng, 8, 5, 2)
    with pytest.raises(ValueError):
        VolumeDataset(partitions=(a, b))
    c = make_dataset(rng, 8, 4, 1)
    with pytest.raises(ValueError):
        VolumeDataset(partitions=(a, c))
    vol = VolumeDataset(partitions=(a, make_dataset(rng, 8, 4, 2)))
    assert vol.n_partitions == 2


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dkx=2),
        dict(dkx=0),
        dict(dky=4),
        dict(first_pass_window=0),
        dict(cluster_threshold=0.0),
        dict(cluster_threshold=1.5),
        dict(rank_cutoff=0.0),
        dict(max_groups=0),
        dict(cluster_method="nope"),
        dict(cluster_method="kmeans"),   # needs max_groups
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        CorrectionConfig(**kwargs)


def test_config_defaults():
    cfg = CorrectionConfig()
    assert (cfg.dkx, cfg.dky) == (7, 1)
    assert cfg.first_pass_window == 1
    assert cfg.cluster_threshold == 0.5
    assert cfg.rank_cutoff == 1e-12
    assert cfg.max_groups is None


def test_response_matrix_checks_lengths():
    good = ResponseVector(np.ones(4), 0)
    bad = ResponseVector(np.ones(3), 1)
    with pytest.raises(ValueError):
        ResponseMatrix(columns=(good, bad))
    rm = ResponseMatrix(columns=(good, ResponseVector(np.zeros(4), 1)))
    assert rm.as_array().shape == (4, 2)


def test_cluster_plan_must_cover_lines():
    g = ClusterGroup(windows=(0,), lines=(0, 1))
    with pytest.raises(ValueError):
        ClusterPlan(groups=(g,), n_lines=3)
    with pytest.raises(ValueError):
        ClusterPlan(groups=(g, ClusterGroup(windows=(1,), lines=(1,))), n_lines=2)
    plan = ClusterPlan(groups=(g, ClusterGroup(windows=(1,), lines=(2,))), n_lines=3)
    assert plan.n_groups == 2


def test_pe_windows_splits():
    assert [list(w) for w in pe_windows(10, 1)] == [[i] for i in range(10)]
    assert [list(w) for w in pe_windows(10, 4)] == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9]]
    with pytest.raises(ValueError):
        pe_windows(5, 6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_kx=st.integers(1, 12), n_pe=st.integers(1, 12))
def test_validator_accepts_consistent_random_datasets(seed, n_kx, n_pe):
    rng = np.random.default_rng(seed)
    ds = AcquisitionDataset(
        primary=random_complex(rng, (n_kx, n_pe)),
        detectors=(random_complex(rng, (n_kx, n_pe)),),
    )
    assert validate_dataset(ds).valid
