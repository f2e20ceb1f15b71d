"""End-to-end helpers shared by the command line and the evaluation suite."""

from __future__ import annotations

import csv
import gzip
import io
from dataclasses import dataclass, field, fields

from .codec import CgimArray, CgimHeader, LossyCodec, apply_codec, encode_cgim, ppm_bytes
from .cluster import reconstruct_lossy
from .isomatrix import DEFAULT_ALPHA, VMatrix, isomatrix_baseline, isomatrix_modified
from .mesh import Mesh
from .metrics import DEFAULT_SAMPLES_PER_FACE, evaluate
from .parametrize import tutte_parametrize

VARIANTS = ("baseline", "modified")
DEFAULT_SWEEP = ("quantize:6", "quantize:4", "quantize:2", "quantize:0")
CSV_COLUMNS = ("codecName", "rateParam", "fileBytes", "psnrDb", "hausMax", "hausRms",
               "missingEdges", "extraEdges")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    """Settings of one pipeline run; JSON keys use the camelCase field aliases."""

    input: str | None = None
    output: str | None = None
    bits: int = 8
    variant: str = "modified"
    alpha: int = DEFAULT_ALPHA
    codec: list = field(default_factory=lambda: list(DEFAULT_SWEEP))
    lossy: bool = False
    seed: int = 0
    samples_per_face: int = DEFAULT_SAMPLES_PER_FACE

    _aliases = {"samplesPerFace": "samples_per_face"}

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = cls._aliases.get(key, key)
            if name not in known:
                raise ConfigError("unknown config key %r" % key)
            kwargs[name] = value
        cfg = cls(**kwargs)
        if isinstance(cfg.codec, str):
            cfg.codec = [cfg.codec]
        return cfg

    def validate(self) -> "PipelineConfig":
        if self.bits not in (8, 16):
            raise ConfigError("bits must be 8 or 16")
        if self.variant not in VARIANTS:
            raise ConfigError("variant must be one of %s" % ", ".join(VARIANTS))
        if int(self.alpha) < 2:
            raise ConfigError("alpha must be at least 2")
        if int(self.samples_per_face) < 1:
            raise ConfigError("samples per face must be positive")
        if not self.codec:
            raise ConfigError("codec sweep is empty")
        for spec in self.codec:
            try:
                LossyCodec.parse(spec)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return self


def build_vmatrix(mesh: Mesh, variant: str = "modified", alpha: int = DEFAULT_ALPHA) -> VMatrix:
    param = tutte_parametrize(mesh)
    if variant == "baseline":
        return isomatrix_baseline(mesh, param)[0]
    if variant == "modified":
        return isomatrix_modified(mesh, param, alpha)[0]
    raise ValueError("unknown variant %r" % variant)


def encode_mesh(mesh: Mesh, b: int = 8, variant: str = "modified",
                alpha: int = DEFAULT_ALPHA) -> tuple[VMatrix, CgimArray, CgimHeader]:
    V = build_vmatrix(mesh, variant, alpha)
    A, H = encode_cgim(V, mesh, b)
    return V, A, H


def compressed_size(A: CgimArray) -> int:
    """Bytes of the gzip-compressed PPM payload (fixed timestamp, level 9)."""
    return len(gzip.compress(ppm_bytes(A), compresslevel=9, mtime=0))


def rate_distortion(mesh: Mesh, codecs=DEFAULT_SWEEP, b: int = 8, variant: str = "modified",
                    alpha: int = DEFAULT_ALPHA,
                    samples_per_face: int = DEFAULT_SAMPLES_PER_FACE) -> list[dict]:
    """Encode once, then degrade, reconstruct and measure for every codec."""
    _, A, H = encode_mesh(mesh, b, variant, alpha)
    rows = []
    for spec in codecs:
        codec = LossyCodec.parse(spec) if isinstance(spec, str) else spec
        degraded = apply_codec(A, codec)
        recon = reconstruct_lossy(degraded, H)
        report = evaluate(mesh, recon, samples_per_face=samples_per_face)
        rows.append({
            "codecName": codec.name,
            "rateParam": codec.param,
            "fileBytes": compressed_size(degraded),
            "psnrDb": report.psnr,
            "hausMax": report.hausdorff_max,
            "hausRms": report.hausdorff_rms,
            "missingEdges": report.missing_edges,
            "extraEdges": report.extra_edges,
        })
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
