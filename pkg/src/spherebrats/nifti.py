"""Minimal NIfTI-1 single-file (.nii / .nii.gz) reader and writer.

Only 3D volumes with datatypes uint8, int16, float32 and float64 are
supported; anything else is rejected instead of being decoded wrongly.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .volume import LABEL_VALUES, LabelVolume, Volume3D

HEADER_SIZE = 348
WRITE_VOX_OFFSET = 352

DT_UINT8, DT_INT16, DT_FLOAT32, DT_FLOAT64 = 2, 4, 16, 64
DATATYPES = {
    DT_UINT8: np.dtype(np.uint8),
    DT_INT16: np.dtype(np.int16),
    DT_FLOAT32: np.dtype(np.float32),
    DT_FLOAT64: np.dtype(np.float64),
}


class NiftiError(Exception):
    """Base class for NIfTI decoding/encoding problems."""


class NiftiFormatError(NiftiError):
    pass


class UnsupportedDatatypeError(NiftiError):
    pass


class UnsupportedShapeError(NiftiError):
    pass


class TruncatedDataError(NiftiError):
    pass


class NiftiRangeError(NiftiError, ValueError):
    pass


@dataclass
class NiftiHeader:
    sizeof_hdr: int = HEADER_SIZE
    dim: tuple = (3, 1, 1, 1, 1, 1, 1, 1)
    datatype_code: int = DT_FLOAT32
    bitpix: int = 32
    pixdim: tuple = (1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    vox_offset: float = float(WRITE_VOX_OFFSET)
    scl_slope: float = 1.0
    scl_inter: float = 0.0
    qform_code: int = 0
    sform_code: int = 0
    srow_x: tuple = (0.0, 0.0, 0.0, 0.0)
    srow_y: tuple = (0.0, 0.0, 0.0, 0.0)
    srow_z: tuple = (0.0, 0.0, 0.0, 0.0)
    magic: bytes = b"n+1\x00"
    endian: str = field(default="<", compare=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.dim[1:4])

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(float(abs(s)) for s in self.pixdim[1:4])


def parse_header(raw: bytes) -> NiftiHeader:
    """Decode the fixed 348-byte header, detecting endianness from ``sizeof_hdr``."""
    if len(raw) < HEADER_SIZE:
        raise TruncatedDataError(f"header needs {HEADER_SIZE} bytes, got {len(raw)}")
    for endian in "<>":
        if struct.unpack_from(endian + "i", raw, 0)[0] == HEADER_SIZE:
            break
    else:
        raise NiftiFormatError("sizeof_hdr is not 348 in either byte order")

    def get(fmt, offset):
        return struct.unpack_from(endian + fmt, raw, offset)

    hdr = NiftiHeader(
        sizeof_hdr=HEADER_SIZE,
        dim=get("8h", 40),
        datatype_code=get("h", 70)[0],
        bitpix=get("h", 72)[0],
        pixdim=get("8f", 76),
        vox_offset=get("f", 108)[0],
        scl_slope=get("f", 112)[0],
        scl_inter=get("f", 116)[0],
        qform_code=get("h", 252)[0],
        sform_code=get("h", 254)[0],
        srow_x=get("4f", 280),
        srow_y=get("4f", 296),
        srow_z=get("4f", 312),
        magic=bytes(raw[344:348]),
        endian=endian,
    )
    if hdr.magic != b"n+1\x00":
        raise NiftiFormatError(f"bad magic {hdr.magic!r}, expected b'n+1\\x00'")
    if hdr.datatype_code not in DATATYPES:
        raise UnsupportedDatatypeError(f"datatype code {hdr.datatype_code} is not supported")
    if hdr.bitpix != DATATYPES[hdr.datatype_code].itemsize * 8:
        raise NiftiFormatError(f"bitpix {hdr.bitpix} inconsistent with datatype {hdr.datatype_code}")
    if hdr.dim[0] != 3:
        raise UnsupportedShapeError(f"only 3D volumes are supported, dim[0] = {hdr.dim[0]}")
    if min(hdr.dim[1:4]) < 1:
        raise UnsupportedShapeError(f"non-positive dimension in {hdr.dim[1:4]}")
    if not hdr.vox_offset >= HEADER_SIZE:
        raise NiftiFormatError(f"vox_offset {hdr.vox_offset} < {HEADER_SIZE}")
    return hdr


def read_nifti(data: bytes, as_labels: bool | None = None):
    """Decode NIfTI-1 bytes, gzip-wrapped or not.

    Args:
        data: file contents.
        as_labels: ``True`` forces a :class:`LabelVolume`, ``False`` a
            :class:`Volume3D`. ``None`` returns a LabelVolume for unscaled
            uint8 files whose values are all BraTS labels.

    Returns:
        ``(header, volume)``.
    """
    data = bytes(data)
    if data[:2] == b"\x1f\x8b":
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise TruncatedDataError(f"corrupt gzip stream: {exc}") from exc
    hdr = parse_header(data)

    dtype = DATATYPES[hdr.datatype_code].newbyteorder(hdr.endian)
    shape = hdr.shape
    count = shape[0] * shape[1] * shape[2]
    start = int(hdr.vox_offset)
    stop = start + count * dtype.itemsize
    if len(data) < stop:
        raise TruncatedDataError(f"voxel data needs {stop} bytes, file has {len(data)}")
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=start)
    arr = arr.reshape(shape, order="F").astype(dtype.newbyteorder("="))

    scaled = hdr.scl_slope != 0 and not (hdr.scl_slope == 1 and hdr.scl_inter == 0)
    if scaled:
        arr = arr.astype(np.float64) * float(hdr.scl_slope) + float(hdr.scl_inter)

    spacing = hdr.spacing
    if as_labels is None:
        as_labels = (
            not scaled
            and hdr.datatype_code == DT_UINT8
            and bool(np.isin(arr, LABEL_VALUES).all())
        )
    if as_labels:
        return hdr, LabelVolume(arr, spacing)
    return hdr, Volume3D(arr, spacing)


def write_nifti(vol, datatype_code: int | None = None, gzip_output: bool = False) -> bytes:
    """Encode a volume as little-endian NIfTI-1 bytes.

    Label volumes default to uint8, scalar volumes to float32. Values that the
    chosen datatype cannot hold exactly (out of range, or fractional for an
    integer type) raise :class:`NiftiRangeError`.
    """
    if isinstance(vol, LabelVolume):
        arr = vol.labels
        if datatype_code is None:
            datatype_code = DT_UINT8
    elif isinstance(vol, Volume3D):
        arr = vol.data
        if datatype_code is None:
            datatype_code = DT_FLOAT32
    else:
        raise TypeError(f"expected Volume3D or LabelVolume, got {type(vol).__name__}")
    if datatype_code not in DATATYPES:
        raise UnsupportedDatatypeError(f"datatype code {datatype_code} is not supported")
    dtype = DATATYPES[datatype_code]

    if dtype.kind in "iu":
        info = np.iinfo(dtype)
        if arr.size and (arr.min() < info.min or arr.max() > info.max):
            raise NiftiRangeError(f"values outside [{info.min}, {info.max}] for {dtype}")
        if arr.dtype.kind == "f" and not np.all(arr == np.round(arr)):
            raise NiftiRangeError(f"non-integer values cannot be stored as {dtype}")
    elif dtype == np.float32 and arr.dtype.kind == "f":
        if np.any(np.abs(arr) > np.finfo(np.float32).max):
            raise NiftiRangeError("values overflow float32")
    out = arr.astype(dtype.newbyteorder("<"))

    sx, sy, sz = vol.spacing
    nx, ny, nz = arr.shape
    raw = bytearray(WRITE_VOX_OFFSET)
    struct.pack_into("<i", raw, 0, HEADER_SIZE)
    struct.pack_into("<8h", raw, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<h", raw, 70, datatype_code)
    struct.pack_into("<h", raw, 72, dtype.itemsize * 8)
    struct.pack_into("<8f", raw, 76, 1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", raw, 108, float(WRITE_VOX_OFFSET))
    struct.pack_into("<ff", raw, 112, 1.0, 0.0)
    struct.pack_into("<B", raw, 123, 10)  # xyzt_units: mm, seconds
    struct.pack_into("<hh", raw, 252, 0, 1)
    struct.pack_into("<4f", raw, 280, sx, 0.0, 0.0, 0.0)
    struct.pack_into("<4f", raw, 296, 0.0, sy, 0.0, 0.0)
    struct.pack_into("<4f", raw, 312, 0.0, 0.0, sz, 0.0)
    raw[344:348] = b"n+1\x00"
    payload = bytes(raw) + out.tobytes(order="F")
    if gzip_output:
        # mtime=0 keeps the compressed bytes reproducible
        return gzip.compress(payload, compresslevel=6, mtime=0)
    return payload


def load(path, as_labels: bool | None = None):
    """Read a NIfTI file from disk and return only the volume."""
    return read_nifti(Path(path).read_bytes(), as_labels=as_labels)[1]


def save(vol, path, datatype_code: int | None = None) -> None:
    """Write ``vol`` to ``path``; a ``.gz`` suffix selects gzip wrapping."""
    path = Path(path)
    path.write_bytes(write_nifti(vol, datatype_code, gzip_output=path.suffix == ".gz"))
