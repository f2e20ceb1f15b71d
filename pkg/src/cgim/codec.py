"""Quantized pixel arrays for V-matrices, the on-disk container and toy lossy codecs.

A CGIM array stores, for every cell of a V-matrix, the coordinates of the
vertex in that cell mapped linearly onto ``[0, 2^b - 1]`` with one global
range shared by all three axes.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .isomatrix import VMatrix, connectivity_diff
from .mesh import Mesh

BIT_DEPTHS = (8, 16)
PIXELS_NAME = "pixels.ppm"
HEADER_NAME = "header.json"


class CgimFormatError(ValueError):
    """Malformed container, header or array."""


@dataclass(frozen=True)
class CgimHeader:
    """Side information needed to turn pixels back into a mesh.

    ``row_runs[i] + 1`` is the number of runs of equal ids in row ``i`` of
    the V-matrix, ``col_runs[j] + 1`` the same for column ``j``.
    """

    b: int
    coord_min: float
    coord_max: float
    r1: int
    r2: int
    row_runs: tuple
    col_runs: tuple

    def validate(self) -> None:
        if self.b not in BIT_DEPTHS:
            raise CgimFormatError("bit depth must be 8 or 16, got %r" % (self.b,))
        if not self.coord_min < self.coord_max:
            raise CgimFormatError("coordMin must be below coordMax")
        if self.r1 < 1 or self.r2 < 1:
            raise CgimFormatError("resolutions must be positive")
        if len(self.row_runs) != self.r1 or len(self.col_runs) != self.r2:
            raise CgimFormatError("run counts do not match the array dimensions")
        if any(not 0 <= x <= self.r2 - 1 for x in self.row_runs):
            raise CgimFormatError("row run count outside [0, r2 - 1]")
        if any(not 0 <= y <= self.r1 - 1 for y in self.col_runs):
            raise CgimFormatError("column run count outside [0, r1 - 1]")

    @property
    def maxval(self) -> int:
        return (1 << self.b) - 1

    @property
    def step(self) -> float:
        """Coordinate distance between two consecutive pixel levels."""
        return (self.coord_max - self.coord_min) / self.maxval

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "coordMin": self.coord_min,
            "coordMax": self.coord_max,
            "r1": self.r1,
            "r2": self.r2,
            "rowRuns": list(self.row_runs),
            "colRuns": list(self.col_runs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CgimHeader":
        try:
            h = cls(
                b=int(d["b"]),
                coord_min=float(d["coordMin"]),
                coord_max=float(d["coordMax"]),
                r1=int(d["r1"]),
                r2=int(d["r2"]),
                row_runs=tuple(int(x) for x in d["rowRuns"]),
                col_runs=tuple(int(y) for y in d["colRuns"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CgimFormatError("malformed header: %s" % exc) from exc
        h.validate()
        return h


@dataclass(frozen=True)
class CgimArray:
    """``(r1, r2, 3)`` unsigned pixels of bit depth ``b``."""

    pixels: np.ndarray
    b: int

    def __post_init__(self):
        if self.b not in BIT_DEPTHS:
            raise CgimFormatError("bit depth must be 8 or 16, got %r" % (self.b,))
        px = np.array(self.pixels, dtype=np.int64)
        if px.ndim != 3 or px.shape[2] != 3:
            raise CgimFormatError("pixel array must have shape (r1, r2, 3), got %s" % (px.shape,))
        if px.size and (px.min() < 0 or px.max() > (1 << self.b) - 1):
            raise CgimFormatError("pixel value outside [0, 2^b - 1]")
        px = px.astype(np.uint8 if self.b == 8 else np.uint16)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self) -> tuple:
        return self.pixels.shape[:2]

    def __eq__(self, other):
        return (isinstance(other, CgimArray) and self.b == other.b
                and np.array_equal(self.pixels, other.pixels))

    __hash__ = None


def run_counts(grid: np.ndarray) -> tuple[tuple, tuple]:
    """``(row_runs, col_runs)``: runs of equal ids minus one, per row and column."""
    grid = np.asarray(grid)
    rows = (grid[:, 1:] != grid[:, :-1]).sum(axis=1)
    cols = (grid[1:, :] != grid[:-1, :]).sum(axis=0)
    return tuple(int(x) for x in rows), tuple(int(y) for y in cols)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def error_bound(coord_range: float, b: int) -> float:
    """Worst-case distance between a vertex and its dequantized position."""
    return math.sqrt(3.0) * coord_range / (2.0 * ((1 << b) - 1))


def quantize(coords: np.ndarray, coord_min: float, coord_max: float, b: int) -> np.ndarray:
    scale = ((1 << b) - 1) / (coord_max - coord_min)
    return _round_half_away((np.asarray(coords, dtype=np.float64) - coord_min) * scale).astype(np.int64)


def encode_cgim(V: VMatrix, mesh: Mesh, b: int = 8) -> tuple[CgimArray, CgimHeader]:
    """Quantize the vertex coordinates behind every cell of ``V``.

    Raises
    ------
    ValueError
        If ``b`` is not 8 or 16, ``V`` does not preserve the connectivity
        of ``mesh``, or all coordinates coincide.
    """
    if b not in BIT_DEPTHS:
        raise ValueError("bit depth must be 8 or 16, got %r" % (b,))
    grid = np.asarray(V.grid if isinstance(V, VMatrix) else V, dtype=np.int64)
    if any(connectivity_diff(grid, mesh)):
        raise ValueError("V-matrix does not preserve the mesh connectivity")
    lo = float(mesh.vertices.min())
    hi = float(mesh.vertices.max())
    if not lo < hi:
        raise ValueError("degenerate coordinate range: all coordinates equal %r" % lo)
    q = quantize(mesh.vertices, lo, hi, b)
    rows, cols = run_counts(grid)
    header = CgimHeader(b=b, coord_min=lo, coord_max=hi, r1=grid.shape[0], r2=grid.shape[1],
                        row_runs=rows, col_runs=cols)
    return CgimArray(q[grid], b), header


def decode_vertex(pixel, header: CgimHeader) -> np.ndarray:
    """Coordinates of a pixel triple (or an array of them, last axis 3)."""
    px = np.asarray(pixel, dtype=np.float64)
    return header.coord_min + px * ((header.coord_max - header.coord_min) / header.maxval)


def reconstruct_lossless(A: CgimArray, H: CgimHeader) -> Mesh:
    """Mesh from an untouched array.

    Equal colors of adjacent vertices are split using the run counts, which is
    exact only when the split position is unambiguous.
    """
    from .cluster import reconstruct_lossy

    H.validate()
    if A.shape != (H.r1, H.r2) or A.b != H.b:
        raise CgimFormatError("array %s/%d-bit does not match header %dx%d/%d-bit"
                              % (A.shape, A.b, H.r1, H.r2, H.b))
    return reconstruct_lossy(A, H)


# ---------------------------------------------------------------- lossy codecs

@dataclass(frozen=True)
class LossyCodec:
    """A named pixel-domain codec with one integer rate parameter."""

    name: str
    param: int = 0

    def __str__(self):
        return "%s:%d" % (self.name, self.param)

    @classmethod
    def parse(cls, text: str) -> "LossyCodec":
        """Parse ``name`` or ``name:param``, e.g. ``quantize:2``."""
        name, _, param = text.partition(":")
        name = name.strip()
        if name not in CODECS:
            raise ValueError("unknown codec %r (choose from %s)" % (name, ", ".join(CODECS)))
        try:
            value = int(param) if param else 0
        except ValueError as exc:
            raise ValueError("codec parameter must be an integer: %r" % param) from exc
        return cls(name, value)


def _identity(px: np.ndarray, b: int, param: int) -> np.ndarray:
    return px.copy()


def _quantize(px: np.ndarray, b: int, k: int) -> np.ndarray:
    if not 0 <= k < b:
        raise ValueError("quantize needs 0 <= k < b (k=%d, b=%d)" % (k, b))
    return px & ~((1 << k) - 1)


def _boxblur(px: np.ndarray, b: int, w: int) -> np.ndarray:
    if w < 1:
        raise ValueError("boxblur width must be positive")
    lo, hi = (w - 1) // 2, w // 2
    padded = np.pad(px, ((lo, hi), (lo, hi), (0, 0)), mode="edge")
    sums = sliding_window_view(padded, (w, w), axis=(0, 1)).sum(axis=(-2, -1))
    n = w * w
    # integer round-half-up of sums / n (all values are nonnegative)
    return (2 * sums + n) // (2 * n)


CODECS = {"identity": _identity, "quantize": _quantize, "boxblur": _boxblur}


def apply_codec(A: CgimArray, codec) -> CgimArray:
    """Run a built-in codec; ``codec`` is a :class:`LossyCodec` or its text form."""
    if isinstance(codec, str):
        codec = LossyCodec.parse(codec)
    if codec.name not in CODECS:
        raise ValueError("unknown codec %r" % codec.name)
    out = CODECS[codec.name](A.pixels.astype(np.int64), A.b, codec.param)
    return CgimArray(out, A.b)


# ---------------------------------------------------------------- container

def ppm_bytes(A: CgimArray) -> bytes:
    """Binary PPM; 16-bit samples are written most significant byte first."""
    r1, r2 = A.shape
    maxval = (1 << A.b) - 1
    head = b"P6\n%d %d\n%d\n" % (r2, r1, maxval)
    body = A.pixels.astype(">u2" if A.b == 16 else "u1").tobytes()
    return head + body


def _parse_ppm(data: bytes) -> tuple[int, int, int, bytes]:
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CgimFormatError("truncated PPM header")
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise CgimFormatError("not a binary PPM (P6) file")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise CgimFormatError("malformed PPM header") from exc
    return width, height, maxval, data[pos + 1:]


def write_cgim(path, A: CgimArray, H: CgimHeader) -> Path:
    """Write ``path/pixels.ppm`` and ``path/header.json``; returns the directory."""
    H.validate()
    if A.shape != (H.r1, H.r2) or A.b != H.b:
        raise CgimFormatError("array does not match header")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    ppm = ppm_bytes(A)
    meta = H.to_dict()
    meta["payloadChecksum"] = "%08x" % zlib.crc32(ppm)
    (path / PIXELS_NAME).write_bytes(ppm)
    (path / HEADER_NAME).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return path


def read_cgim(path) -> tuple[CgimArray, CgimHeader]:
    """Read a container written by :func:`write_cgim`, verifying the checksum."""
    path = Path(path)
    try:
        meta = json.loads((path / HEADER_NAME).read_text(encoding="utf-8"))
        ppm = (path / PIXELS_NAME).read_bytes()
    except json.JSONDecodeError as exc:
        raise CgimFormatError("header is not valid JSON: %s" % exc) from exc
    if not isinstance(meta, dict):
        raise CgimFormatError("header must be a JSON object")
    header = CgimHeader.from_dict(meta)
    expected = str(meta.get("payloadChecksum", "")).lower()
    if "%08x" % zlib.crc32(ppm) != expected:
        raise CgimFormatError("payload checksum mismatch")
    width, height, maxval, body = _parse_ppm(ppm)
    if (height, width) != (header.r1, header.r2):
        raise CgimFormatError("PPM is %dx%d but header says %dx%d" % (height, width, header.r1, header.r2))
    if maxval != header.maxval:
        raise CgimFormatError("PPM maxval %d does not match %d-bit header" % (maxval, header.b))
    dtype = np.dtype(">u2" if header.b == 16 else "u1")
    need = height * width * 3 * dtype.itemsize
    if len(body) != need:
        raise CgimFormatError("PPM payload has %d bytes, expected %d" % (len(body), need))
    px = np.frombuffer(body, dtype=dtype).reshape(height, width, 3)
    return CgimArray(px, header.b), header
