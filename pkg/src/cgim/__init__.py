"""Connectivity-preserving geometry images for triangulated disks."""

__version__ = "0.1.0"

from .codec import (  # noqa: E402
    CgimArray,
    CgimHeader,
    LossyCodec,
    apply_codec,
    decode_vertex,
    encode_cgim,
    read_cgim,
    reconstruct_lossless,
    write_cgim,
)
from .cluster import reconstruct_lossy  # noqa: E402
from .isomatrix import VMatrix, isomatrix_baseline, isomatrix_modified  # noqa: E402
from .mesh import Mesh, load_mesh, save_mesh, validate_topology  # noqa: E402
from .metrics import edge_set_diff, error_bound, hausdorff, psnr  # noqa: E402
from .parametrize import tutte_parametrize  # noqa: E402

__all__ = [
    "CgimArray", "CgimHeader", "LossyCodec", "Mesh", "VMatrix",
    "apply_codec", "decode_vertex", "edge_set_diff", "encode_cgim", "error_bound",
    "hausdorff", "isomatrix_baseline", "isomatrix_modified", "load_mesh", "psnr",
    "read_cgim", "reconstruct_lossless", "reconstruct_lossy", "save_mesh",
    "tutte_parametrize", "validate_topology", "write_cgim",
]
