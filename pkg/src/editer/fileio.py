"""Binary dataset files and small export helpers.

Layout (all little-endian), fixed 64-byte header:

    offset  size  field
    0       8     magic, ASCII "EDITERDS"
    8       4     u32 version (1)
    12      4     u32 n_kx
    16      4     u32 n_pe
    20      4     u32 n_partitions
    24      4     u32 n_detectors
    28      4     u32 flags (bit 0: ground truth present)
    32      32    reserved, zero

Payload: partitions x channels x column-major complex samples, each sample a
float64 (real, imag) pair. Channel order per partition: primary, detectors in
order, then the optional ground truth. Roundtrips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .datatypes import AcquisitionDataset, VolumeDataset

MAGIC = b"EDITERDS"
VERSION = 1
HEADER_LEN = 64
_HEADER_FMT = "<8s6I32x"
_FLAG_GROUND_TRUTH = 1
_SAMPLE_BYTES = 16
_MAX_DIM = 2**31 - 1


class DataFormatError(IOError):
    """Malformed or unreadable dataset file."""


@dataclass(frozen=True)
class DatasetFileHeader:
    n_kx: int
    n_pe: int
    n_partitions: int
    n_detectors: int
    has_ground_truth: bool

    @property
    def channels_per_partition(self) -> int:
        return 1 + self.n_detectors + (1 if self.has_ground_truth else 0)

    @property
    def payload_bytes(self) -> int:
        return (
            self.n_partitions
            * self.channels_per_partition
            * self.n_kx
            * self.n_pe
            * _SAMPLE_BYTES
        )


def _pack_header(h: DatasetFileHeader) -> bytes:
    flags = _FLAG_GROUND_TRUTH if h.has_ground_truth else 0
    return struct.pack(
        _HEADER_FMT, MAGIC, VERSION, h.n_kx, h.n_pe, h.n_partitions, h.n_detectors, flags
    )


def read_header(raw: bytes) -> DatasetFileHeader:
    if len(raw) < HEADER_LEN:
        raise DataFormatError(
            f"truncated header: expected {HEADER_LEN} bytes, got {len(raw)}"
        )
    magic, version, n_kx, n_pe, n_parts, n_det, flags = struct.unpack(
        _HEADER_FMT, raw[:HEADER_LEN]
    )
    if magic != MAGIC:
        raise DataFormatError(f"magic mismatch: expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"version {version} unsupported (expected {VERSION})")
    if flags & ~_FLAG_GROUND_TRUTH:
        raise DataFormatError(f"unsupported flag bits 0x{flags:x}")
    header = DatasetFileHeader(
        n_kx=n_kx,
        n_pe=n_pe,
        n_partitions=n_parts,
        n_detectors=n_det,
        has_ground_truth=bool(flags & _FLAG_GROUND_TRUTH),
    )
    if min(n_kx, n_pe, n_parts) < 1 or n_det < 0 or max(n_kx, n_pe, n_parts, n_det) > _MAX_DIM:
        raise DataFormatError(
            f"dimension overflow: n_kx={n_kx} n_pe={n_pe} partitions={n_parts} detectors={n_det}"
        )
    return header


def _matrix_bytes(mat: np.ndarray) -> bytes:
    return np.ascontiguousarray(mat.T).astype(np.complex128, copy=False).tobytes()


def write_volume(vol: VolumeDataset, path) -> None:
    first = vol.partitions[0]
    has_truth = all(p.ground_truth is not None for p in vol.partitions)
    if has_truth != any(p.ground_truth is not None for p in vol.partitions):
        raise ValueError("either every partition or none may carry ground truth")
    header = DatasetFileHeader(
        n_kx=first.n_kx,
        n_pe=first.n_pe,
        n_partitions=vol.n_partitions,
        n_detectors=first.n_detectors,
        has_ground_truth=has_truth,
    )
    with open(path, "wb") as fh:
        fh.write(_pack_header(header))
        for part in vol.partitions:
            fh.write(_matrix_bytes(part.primary))
            for det in part.detectors:
                fh.write(_matrix_bytes(det))
            if has_truth:
                fh.write(_matrix_bytes(part.ground_truth))


def write_dataset(ds: AcquisitionDataset, path) -> None:
    write_volume(VolumeDataset(partitions=(ds,)), path)


def read_volume(path) -> VolumeDataset:
    with open(path, "rb") as fh:
        raw = fh.read()
    header = read_header(raw)
    payload = raw[HEADER_LEN:]
    if len(payload) != header.payload_bytes:
        raise DataFormatError(
            f"truncated payload: expected {header.payload_bytes} bytes, got {len(payload)}"
        )
    samples_per_matrix = header.n_kx * header.n_pe
    data = np.frombuffer(payload, dtype="<c16")
    parts = []
    pos = 0

    def next_matrix():
        nonlocal pos
        mat = data[pos:pos + samples_per_matrix].reshape(
            (header.n_kx, header.n_pe), order="F"
        )
        pos += samples_per_matrix
        return mat

    for p in range(header.n_partitions):
        primary = next_matrix()
        detectors = tuple(next_matrix() for _ in range(header.n_detectors))
        truth = next_matrix() if header.has_ground_truth else None
        parts.append(
            AcquisitionDataset(
                primary=primary,
                detectors=detectors,
                ground_truth=truth,
                partition_index=p if header.n_partitions > 1 else None,
            )
        )
    return VolumeDataset(partitions=tuple(parts))


def read_dataset(path) -> AcquisitionDataset:
    vol = read_volume(path)
    if vol.n_partitions != 1:
        raise DataFormatError(
            f"file holds {vol.n_partitions} partitions; use read_volume"
        )
    return vol.partitions[0]


def export_pgm(pixels: np.ndarray, path) -> None:
    """8-bit binary PGM of a magnitude image, min-max windowed.

    Deterministic: identical pixels produce identical bytes.
    """
    img = np.asarray(pixels, dtype=np.float64)
    lo, hi = float(img.min()), float(img.max())
    if hi > lo:
        scaled = np.round((img - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(img)
    body = scaled.astype(np.uint8).tobytes()
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(body)
