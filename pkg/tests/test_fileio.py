"""Binary format: bit-exact roundtrips and error reporting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from editer import (
    AcquisitionDataset,
    DataFormatError,
    VolumeDataset,
    export_pgm,
    read_dataset,
    read_volume,
    write_dataset,
    write_volume,
)
from editer.fileio import HEADER_LEN, MAGIC

from conftest import random_complex


def make_dataset(rng, n_kx=16, n_pe=8, n_det=2, truth=True):
    return AcquisitionDataset(
        primary=random_complex(rng, (n_kx, n_pe)),
        detectors=tuple(random_complex(rng, (n_kx, n_pe)) for _ in range(n_det)),
        ground_truth=random_complex(rng, (n_kx, n_pe)) if truth else None,
    )


def assert_datasets_bit_identical(a, b):
    np.testing.assert_array_equal(a.primary, b.primary)
    assert a.n_detectors == b.n_detectors
    for d1, d2 in zip(a.detectors, b.detectors):
        np.testing.assert_array_equal(d1, d2)
    if a.ground_truth is None:
        assert b.ground_truth is None
    else:
        np.testing.assert_array_equal(a.ground_truth, b.ground_truth)


def test_paper_sized_roundtrip_is_bit_exact(rng, tmp_path):
    ds = make_dataset(rng, n_kx=512, n_pe=101, n_det=5, truth=True)
    path = tmp_path / "full.eds"
    write_dataset(ds, path)
    assert_datasets_bit_identical(ds, read_dataset(path))


def test_roundtrip_without_ground_truth(rng, tmp_path):
    ds = make_dataset(rng, truth=False)
    path = tmp_path / "ds.eds"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert back.ground_truth is None
    assert_datasets_bit_identical(ds, back)


def test_volume_roundtrip(rng, tmp_path):
    vol = VolumeDataset(partitions=tuple(make_dataset(rng, 8, 5, 2) for _ in range(3)))
    path = tmp_path / "vol.eds"
    write_volume(vol, path)
    back = read_volume(path)
    assert back.n_partitions == 3
    assert [p.partition_index for p in back.partitions] == [0, 1, 2]
    for a, b in zip(vol.partitions, back.partitions):
        assert_datasets_bit_identical(a, b)


def test_read_dataset_rejects_multipartition(rng, tmp_path):
    vol = VolumeDataset(partitions=tuple(make_dataset(rng, 4, 3, 1) for _ in range(2)))
    path = tmp_path / "vol.eds"
    write_volume(vol, path)
    with pytest.raises(DataFormatError, match="read_volume"):
        read_dataset(path)


def test_magic_mismatch(rng, tmp_path):
    path = tmp_path / "bad.eds"
    write_dataset(make_dataset(rng), path)
    raw = bytearray(path.read_bytes())
    raw[:8] = b"NOTMAGIC"
    path.write_bytes(raw)
    with pytest.raises(DataFormatError, match="magic mismatch"):
        read_dataset(path)


def test_unsupported_version(rng, tmp_path):
    path = tmp_path / "bad.eds"
    write_dataset(make_dataset(rng), path)
    raw = bytearray(path.read_bytes())
    raw[8] = 9
    path.write_bytes(raw)
    with pytest.raises(DataFormatError, match="version 9 unsupported"):
        read_dataset(path)


def test_truncated_payload_names_byte_counts(rng, tmp_path):
    path = tmp_path / "bad.eds"
    write_dataset(make_dataset(rng, 4, 3, 1, truth=False), path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-16])   # drop exactly one sample
    expected = 4 * 3 * 2 * 16
    with pytest.raises(
        DataFormatError,
        match=rf"truncated payload: expected {expected} bytes, got {expected - 16}",
    ):
        read_dataset(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "tiny.eds"
    path.write_bytes(MAGIC + b"\x00" * 10)
    with pytest.raises(DataFormatError, match="truncated header"):
        read_dataset(path)


def test_zero_dims_rejected(tmp_path):
    import struct

    path = tmp_path / "zero.eds"
    path.write_bytes(struct.pack("<8s6I32x", MAGIC, 1, 0, 5, 1, 1, 0))
    with pytest.raises(DataFormatError, match="dimension overflow"):
        read_dataset(path)


def test_unknown_flags_rejected(tmp_path):
    import struct

    path = tmp_path / "flags.eds"
    path.write_bytes(struct.pack("<8s6I32x", MAGIC, 1, 2, 2, 1, 1, 0x8))
    with pytest.raises(DataFormatError, match="unsupported flag"):
        read_dataset(path)


def test_mixed_ground_truth_volume_rejected(rng, tmp_path):
    vol_parts = (make_dataset(rng, 4, 3, 1, truth=True), make_dataset(rng, 4, 3, 1, truth=False))
    with pytest.raises(ValueError, match="ground truth"):
        write_volume(VolumeDataset(partitions=vol_parts), tmp_path / "mixed.eds")


def test_header_is_64_bytes(rng, tmp_path):
    ds = make_dataset(rng, 4, 3, 1, truth=False)
    path = tmp_path / "h.eds"
    write_dataset(ds, path)
    raw = path.read_bytes()
    assert raw[:8] == b"EDITERDS"
    assert len(raw) == HEADER_LEN + 4 * 3 * 2 * 16
    assert raw[32:64] == b"\x00" * 32   # reserved padding


def test_export_pgm_format_and_determinism(tmp_path, rng):
    img = np.abs(random_complex(rng, (5, 7)))
    p1, p2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
    export_pgm(img, p1)
    export_pgm(img, p2)
    raw = p1.read_bytes()
    assert raw == p2.read_bytes()
    assert raw.startswith(b"P5\n7 5\n255\n")
    body = raw.split(b"255\n", 1)[1]
    assert len(body) == 35
    assert max(body) == 255 and min(body) == 0   # min-max windowed


def test_export_pgm_constant_image(tmp_path):
    path = tmp_path / "c.pgm"
    export_pgm(np.full((3, 3), 2.5), path)
    body = path.read_bytes().split(b"255\n", 1)[1]
    assert body == b"\x00" * 9


@settings(max_examples=20, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n_kx=st.integers(1, 9),
    n_pe=st.integers(1, 9),
    n_det=st.integers(1, 3),
    truth=st.booleans(),
    parts=st.integers(1, 3),
)
def test_roundtrip_property(tmp_path_factory, seed, n_kx, n_pe, n_det, truth, parts):
    rng = np.random.default_rng(seed)
    vol = VolumeDataset(
        partitions=tuple(make_dataset(rng, n_kx, n_pe, n_det, truth) for _ in range(parts))
    )
    path = tmp_path_factory.mktemp("rt") / "v.eds"
    write_volume(vol, path)
    back = read_volume(path)
    for a, b in zip(vol.partitions, back.partitions):
        assert_datasets_bit_identical(a, b)
