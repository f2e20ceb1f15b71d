"""``cgimc``: command line driver for the geometry-image pipeline.

Exit codes: 0 success, 2 invalid mesh or configuration, 3 file I/O
failure, 4 malformed container.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .codec import CgimFormatError, apply_codec, read_cgim, reconstruct_lossless, write_cgim
from .cluster import reconstruct_lossy
from .corpus import KINDS, gen_corpus, standard_corpus
from .mesh import MeshFormatError, load_mesh, save_mesh, validate_topology
from .parametrize import ParametrizationError, tutte_parametrize
from .pipeline import (
    ConfigError,
    PipelineConfig,
    encode_mesh,
    rate_distortion,
    rows_to_csv,
)

logger = logging.getLogger("cgim")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_CONTAINER = 4


class CliError(Exception):
    def __init__(self, code: int, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload


def _emit(obj: dict) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False))


def _need(cfg: PipelineConfig, name: str) -> str:
    value = getattr(cfg, name)
    if not value:
        raise CliError(EXIT_INVALID, "--%s is required" % name)
    return value


def _load_valid_mesh(path: str):
    try:
        mesh = load_mesh(path)
    except MeshFormatError as exc:
        raise CliError(EXIT_INVALID, "cannot parse %s: %s" % (path, exc))
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot read %s: %s" % (path, exc))
    report = validate_topology(mesh)
    if not report.ok:
        raise CliError(EXIT_INVALID, "mesh is not an open genus-zero triangulation",
                       {"valid": False, **report.to_dict()})
    return mesh


def _read_container(path: str):
    try:
        return read_cgim(path)
    except CgimFormatError as exc:
        raise CliError(EXIT_CONTAINER, "malformed container %s: %s" % (path, exc))
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot read container %s: %s" % (path, exc))


def _dir_bytes(path: Path) -> int:
    return sum(p.stat().st_size for p in sorted(path.iterdir()) if p.is_file())


# ---------------------------------------------------------------- commands

def cmd_validate(cfg: PipelineConfig) -> int:
    path = _need(cfg, "input")
    try:
        mesh = load_mesh(path)
    except MeshFormatError as exc:
        raise CliError(EXIT_INVALID, "cannot parse %s: %s" % (path, exc))
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot read %s: %s" % (path, exc))
    report = validate_topology(mesh)
    _emit({"valid": report.ok, "vertices": mesh.n_vertices, "edges": len(mesh.edges),
           "faces": mesh.n_faces, **report.to_dict()})
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_parametrize(cfg: PipelineConfig) -> int:
    mesh = _load_valid_mesh(_need(cfg, "input"))
    try:
        param = tutte_parametrize(mesh)
    except ParametrizationError as exc:
        raise CliError(EXIT_INVALID, str(exc))
    out = _need(cfg, "output")
    try:
        save_mesh(mesh, out, uv=param.uv)
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot write %s: %s" % (out, exc))
    _emit({"output": out, "residual": param.residual(mesh), "corners": list(param.corners)})
    return EXIT_OK


def cmd_encode(cfg: PipelineConfig) -> int:
    mesh = _load_valid_mesh(_need(cfg, "input"))
    out = Path(_need(cfg, "output"))
    t0 = time.perf_counter()
    V, A, H = encode_mesh(mesh, cfg.bits, cfg.variant, cfg.alpha)
    try:
        write_cgim(out, A, H)
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot write container %s: %s" % (out, exc))
    elapsed = (time.perf_counter() - t0) * 1000.0
    _emit({"r1": V.r1, "r2": V.r2, "variant": cfg.variant, "bits": cfg.bits,
           "containerBytes": _dir_bytes(out), "elapsedMs": round(elapsed, 3)})
    return EXIT_OK


def cmd_decode(cfg: PipelineConfig) -> int:
    A, H = _read_container(_need(cfg, "input"))
    mesh = reconstruct_lossy(A, H) if cfg.lossy else reconstruct_lossless(A, H)
    out = _need(cfg, "output")
    try:
        save_mesh(mesh, out)
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot write %s: %s" % (out, exc))
    _emit({"output": out, "lossy": cfg.lossy, "vertices": mesh.n_vertices,
           "edges": len(mesh.edges), "faces": mesh.n_faces})
    return EXIT_OK


def cmd_compress(cfg: PipelineConfig) -> int:
    A, H = _read_container(_need(cfg, "input"))
    if len(cfg.codec) != 1:
        raise CliError(EXIT_INVALID, "compress takes exactly one --codec")
    try:
        degraded = apply_codec(A, cfg.codec[0])
    except ValueError as exc:
        raise CliError(EXIT_INVALID, str(exc))
    out = Path(_need(cfg, "output"))
    try:
        write_cgim(out, degraded, H)
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot write container %s: %s" % (out, exc))
    _emit({"output": str(out), "codec": cfg.codec[0], "containerBytes": _dir_bytes(out)})
    return EXIT_OK


def cmd_evaluate(cfg: PipelineConfig) -> int:
    path = _need(cfg, "input")
    mesh = _load_valid_mesh(path)
    out = Path(_need(cfg, "output"))
    rows = rate_distortion(mesh, cfg.codec, cfg.bits, cfg.variant, cfg.alpha, cfg.samples_per_face)
    figure = out.with_suffix(".png")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(rows_to_csv(rows), encoding="utf-8")
        from .plotting import plot_rate_distortion

        plot_rate_distortion(rows, figure, title=Path(path).name)
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot write %s: %s" % (out, exc))
    _emit({"csv": str(out), "figure": str(figure), "rows": len(rows), "bits": cfg.bits,
           "variant": cfg.variant, "alpha": cfg.alpha, "samplesPerFace": cfg.samples_per_face})
    return EXIT_OK


def cmd_gen_corpus(cfg: PipelineConfig, kind: str | None, size: int | None, standard: bool) -> int:
    out = Path(_need(cfg, "output"))
    written = []
    try:
        if standard:
            out.mkdir(parents=True, exist_ok=True)
            for name, mesh in standard_corpus():
                save_mesh(mesh, out / (name + ".obj"))
                written.append(name + ".obj")
        else:
            if kind is None or size is None:
                raise CliError(EXIT_INVALID, "gen-corpus needs --kind and --size (or --standard)")
            try:
                mesh = gen_corpus(kind, size, cfg.seed)
            except ValueError as exc:
                raise CliError(EXIT_INVALID, str(exc))
            out.parent.mkdir(parents=True, exist_ok=True)
            save_mesh(mesh, out)
            written.append(out.name)
    except OSError as exc:
        raise CliError(EXIT_IO, "cannot write %s: %s" % (out, exc))
    _emit({"output": str(out), "files": written, "seed": cfg.seed})
    return EXIT_OK


# ---------------------------------------------------------------- parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="input mesh or container")
    common.add_argument("--output", "-o", help="output path")
    common.add_argument("--config", help="JSON file with pipeline settings; flags override it")
    common.add_argument("--bits", type=int, choices=(8, 16), help="bits per channel (default 8)")
    common.add_argument("--variant", choices=("baseline", "modified"),
                        help="V-matrix construction (default modified)")
    common.add_argument("--alpha", type=int, help="degree threshold of the modified variant (default 5)")
    common.add_argument("--codec", action="append",
                        help="codec as name:param (identity, quantize:k, boxblur:w); repeatable")
    common.add_argument("--lossy", action="store_true", default=None,
                        help="decode with category clustering")
    common.add_argument("--seed", type=int, help="corpus seed")
    common.add_argument("--samples-per-face", type=int, dest="samples_per_face",
                        help="surface samples per face for distance metrics (default 16)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="cgimc",
                                     description="Command line driver for the geometry-image pipeline.")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check disk topology")
    sub.add_parser("parametrize", parents=[common], help="write the Tutte embedding as OBJ texture coordinates")
    sub.add_parser("encode", parents=[common], help="mesh to CGIM container")
    sub.add_parser("decode", parents=[common], help="CGIM container to mesh")
    sub.add_parser("compress", parents=[common], help="apply a lossy codec to a container")
    sub.add_parser("evaluate", parents=[common], help="rate-distortion sweep to CSV and PNG")
    gen = sub.add_parser("gen-corpus", parents=[common], help="write synthetic disk meshes")
    gen.add_argument("--kind", choices=KINDS)
    gen.add_argument("--size", type=int)
    gen.add_argument("--standard", action="store_true", help="write the whole standard corpus")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(EXIT_IO, "cannot read config %s: %s" % (args.config, exc))
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_INVALID, "config is not valid JSON: %s" % exc)
        if not isinstance(data, dict):
            raise CliError(EXIT_INVALID, "config must be a JSON object")
    try:
        cfg = PipelineConfig.from_mapping(data)
    except (ConfigError, TypeError) as exc:
        raise CliError(EXIT_INVALID, str(exc))
    for name in ("input", "output", "bits", "variant", "alpha", "codec", "lossy", "seed",
                 "samples_per_face"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise CliError(EXIT_INVALID, str(exc))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "gen-corpus":
            return cmd_gen_corpus(cfg, args.kind, args.size, args.standard)
        handler = {
            "validate": cmd_validate,
            "parametrize": cmd_parametrize,
            "encode": cmd_encode,
            "decode": cmd_decode,
            "compress": cmd_compress,
            "evaluate": cmd_evaluate,
        }[args.command]
        return handler(cfg)
    except CliError as exc:
        if exc.payload is not None:
            _emit(exc.payload)
        print("cgimc: error: %s" % exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
