"""File formats: PGM images, CFLD1 fields, KRN1 kernels, CSV kernels, JSON reports."""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from fourfold.correlator import Kernel
from fourfold.errors import InvalidInputError
from fourfold.field import ComplexField, GridSpec

CFLD_MAGIC = b"CFLD1\n"
KRN_MAGIC = b"KRN1\n"


class FormatError(InvalidInputError):
    pass


# --- PGM -------------------------------------------------------------------


def _pgm_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Binary PGM (P5) as float64 in [0, 1], normalized by the file's maxval."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    if magic != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {magic!r})")
    w, h, maxval = int(w), int(h), int(maxval)
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: bad PGM header")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    need = w * h * dtype.itemsize
    if len(data) - pos < need:
        raise FormatError(f"{path}: truncated PGM data")
    img = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return np.clip(img.astype(np.float64) / maxval, 0.0, 1.0)


def write_pgm(path, image, bits: int = 16) -> None:
    """Write a [0, 1] image as P5; values are clipped and rounded."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if img.ndim != 2:
        raise InvalidInputError("PGM images are 2D")
    maxval = 65535 if bits == 16 else 255
    q = np.rint(img * maxval)
    raw = q.astype(">u2").tobytes() if bits == 16 else q.astype(np.uint8).tobytes()
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode()
    Path(path).write_bytes(header + raw)


# --- CFLD1 -----------------------------------------------------------------


def write_cfld(path, field_or_array, grid: GridSpec | None = None) -> None:
    """Serialize a complex array (field amplitudes or mask transmittance)."""
    if isinstance(field_or_array, ComplexField):
        grid = field_or_array.grid
        a = field_or_array.amplitudes
    else:
        a = np.asarray(field_or_array, dtype=np.complex128)
        if grid is None:
            grid = getattr(field_or_array, "grid", None)
            a = np.asarray(getattr(field_or_array, "transmittance", a), dtype=np.complex128)
        if grid is None:
            raise InvalidInputError("a grid is needed to serialize a bare array")
    header = CFLD_MAGIC + struct.pack("<IIdd", grid.nx, grid.ny, grid.pitch, grid.wavelength)
    body = np.ascontiguousarray(a, dtype="<c16").tobytes()
    Path(path).write_bytes(header + body)


def read_cfld(path) -> ComplexField:
    data = Path(path).read_bytes()
    if not data.startswith(CFLD_MAGIC):
        raise FormatError(f"{path}: missing CFLD1 magic")
    off = len(CFLD_MAGIC)
    if len(data) < off + 24:
        raise FormatError(f"{path}: truncated CFLD1 header")
    nx, ny, pitch, lam = struct.unpack_from("<IIdd", data, off)
    off += 24
    if len(data) - off != nx * ny * 16:
        raise FormatError(f"{path}: expected {nx * ny * 16} data bytes, found {len(data) - off}")
    a = np.frombuffer(data, dtype="<c16", offset=off).reshape(ny, nx)
    return ComplexField(GridSpec(nx, ny, pitch, lam), a.astype(np.complex128))


# --- kernels ---------------------------------------------------------------


def write_krn1(path, kernels) -> None:
    parts = [KRN_MAGIC, struct.pack("<I", len(kernels))]
    for k in kernels:
        w = k.weights if isinstance(k, Kernel) else np.asarray(k, dtype=np.float64)
        parts.append(struct.pack("<II", *w.shape))
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_krn1(path) -> list[Kernel]:
    data = Path(path).read_bytes()
    if not data.startswith(KRN_MAGIC):
        raise FormatError(f"{path}: missing KRN1 magic")
    off = len(KRN_MAGIC)
    try:
        (count,) = struct.unpack_from("<I", data, off)
        off += 4
        out = []
        for _ in range(count):
            r, c = struct.unpack_from("<II", data, off)
            off += 8
            n = r * c
            if off + 8 * n > len(data):
                raise FormatError(f"{path}: truncated kernel data")
            w = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(r, c)
            off += 8 * n
            out.append(Kernel(w))
    except struct.error:
        raise FormatError(f"{path}: truncated KRN1 file") from None
    if off != len(data):
        raise FormatError(f"{path}: {len(data) - off} trailing bytes")
    return out


def read_kernel_csv(path) -> Kernel:
    try:
        w = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return Kernel(w)


def read_kernels(path) -> list[Kernel]:
    """Load kernels from KRN1, or a single kernel from CSV (by content sniffing)."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(KRN_MAGIC))
    if head == KRN_MAGIC:
        return read_krn1(path)
    return [read_kernel_csv(path)]


# --- JSON ------------------------------------------------------------------


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise InvalidInputError("refusing to serialize a non-finite number")
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not seq:
            return "[]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_layer_output(directory, layer, grid_size: int | None = None) -> Path:
    """One 16-bit peak-normalized PGM per map plus ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for j, m in enumerate(layer.maps):
        peak = float(np.max(m)) if np.size(m) else 0.0
        name = f"map_{j:03d}.pgm"
        write_pgm(d / name, m / peak if peak > 0 else m, bits=16)
        entries.append({"kernel_index": j, "file": name, "peak": peak})
    manifest = {
        "channel_policy": layer.channel_policy,
        "maps": entries,
        "scale_factors": layer.scale_factors,
        "grid": {
            "size": grid_size if grid_size is not None else layer.grid_size,
            "pitch_m": layer.specs[0].pitch if layer.specs else None,
            "wavelengths_m": [s.wavelength for s in layer.specs],
        },
    }
    (d / "manifest.json").write_text(dumps_report(manifest))
    return d
