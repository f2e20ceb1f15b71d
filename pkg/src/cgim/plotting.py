"""Rate-distortion figures written straight to image files."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_rate_distortion(rows: list[dict], path, title: str | None = None) -> None:
    """PSNR and RMS distance against compressed size, one line per codec."""
    by_codec = defaultdict(list)
    for r in rows:
        by_codec[r["codecName"]].append(r)

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for name in sorted(by_codec):
        pts = sorted(by_codec[name], key=lambda r: r["fileBytes"])
        x = [r["fileBytes"] for r in pts]
        ax0.plot(x, [r["psnrDb"] for r in pts], "o-", label=name)
        ax1.plot(x, [max(r["hausRms"], 1e-300) for r in pts], "o-", label=name)
        for r in pts:
            ax0.annotate(str(r["rateParam"]), (r["fileBytes"], r["psnrDb"]),
                         textcoords="offset points", xytext=(3, 3), fontsize=7)
    ax0.set_xlabel("compressed size [bytes]")
    ax0.set_ylabel("PSNR [dB]")
    ax1.set_xlabel("compressed size [bytes]")
    ax1.set_ylabel("RMS Hausdorff")
    ax1.set_yscale("log")
    for ax in (ax0, ax1):
        ax.grid(True, alpha=0.3)
    ax0.legend(frameon=False, fontsize=8)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    # no timestamp or version metadata, so reruns produce identical files
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
