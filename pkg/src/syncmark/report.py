"""Render evaluation figures from a results CSV, next to the CSV itself.

Three figures are produced when their data is present:

* ``bar_by_distortion.png`` -- mean bit accuracy per distortion kind.
* ``capacity_sweep.png`` -- bit accuracy and embedding PSNR against the
  object-occupancy buckets, annotated with mean bits-per-pixel.
* ``ablation.png`` -- mean bit accuracy per ablation variant (only when
  the CSV mixes several variants).

The CSV remains the canonical machine-readable artifact; figures are
derived views and never feed back into any metric.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _read_rows(csv_path) -> list[dict]:
    with open(csv_path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def render_report(csv_path, out_dir=None) -> list[str]:
    """Write the available figures; returns the paths written."""
    rows = _read_rows(csv_path)
    out_dir = out_dir or os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    ok_rows = [r for r in rows if r["status"] == "ok"]
    if ok_rows:
        written.append(_bar_by_distortion(ok_rows, out_dir))
        capacity = _capacity_sweep(rows, out_dir)
        if capacity:
            written.append(capacity)
    ablation = _ablation_figure(ok_rows, out_dir)
    if ablation:
        written.append(ablation)
    return written


def _group_mean(rows: list[dict], key: str, value: str) -> dict[str, float]:
    groups: dict[str, list[float]] = {}
    for r in rows:
        groups.setdefault(r[key], []).append(float(r[value]))
    return {k: sum(v) / len(v) for k, v in groups.items()}


def _bar_by_distortion(ok_rows: list[dict], out_dir: str) -> str:
    kinds = []
    for r in ok_rows:
        kind = r["distortion"].split("=")[0]
        if kind not in kinds:
            kinds.append(kind)
    means = _group_mean(
        [dict(r, distortion=r["distortion"].split("=")[0]) for r in ok_rows],
        "distortion",
        "bar",
    )
    values = [means[k] for k in kinds]

    fig, ax = plt.subplots(figsize=(7.5, 4.0))
    ax.bar(range(len(kinds)), values, color="#4878a8")
    ax.set_xticks(range(len(kinds)))
    ax.set_xticklabels(kinds, rotation=30, ha="right")
    ax.set_ylabel("mean bit accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.axhline(1.0, color="0.7", linewidth=0.8, linestyle="--")
    ax.set_title("Bit accuracy by distortion")
    fig.tight_layout()
    path = os.path.join(out_dir, "bar_by_distortion.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _capacity_sweep(rows: list[dict], out_dir: str) -> str | None:
    buckets = [r for r in rows if r["image_id"].startswith("bucket:")]
    if not buckets:
        return None
    labels = [r["image_id"].removeprefix("bucket:") for r in buckets]
    bars = [float(r["bar"]) for r in buckets]
    psnrs = [float(r["psnr"]) for r in buckets]
    bpps = [float(r["bpp"]) for r in buckets]

    fig, ax1 = plt.subplots(figsize=(7.0, 4.2))
    xs = range(len(labels))
    ax1.plot(xs, bars, "o-", color="#4878a8", label="bit accuracy")
    ax1.set_ylabel("mean bit accuracy", color="#4878a8")
    ax1.set_ylim(0.0, 1.05)
    ax1.set_xticks(list(xs))
    ax1.set_xticklabels(labels)
    ax1.set_xlabel("object occupancy bucket")
    ax2 = ax1.twinx()
    ax2.plot(xs, psnrs, "s--", color="#b0563b", label="PSNR (dB)")
    ax2.set_ylabel("embedding PSNR (dB)", color="#b0563b")
    for x, bpp in zip(xs, bpps):
        ax1.annotate(f"{bpp * 1e3:.2f}e-3 bpp", (x, bars[x]),
                     textcoords="offset points", xytext=(0, -16), ha="center", fontsize=7)
    ax1.set_title("Capacity sweep: accuracy and quality vs occupancy")
    fig.tight_layout()
    path = os.path.join(out_dir, "capacity_sweep.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _ablation_figure(ok_rows: list[dict], out_dir: str) -> str | None:
    means = _group_mean(ok_rows, "ablation_id", "bar")
    if len(means) < 2:
        return None
    names = sorted(means, key=means.get, reverse=True)
    values = [means[k] for k in names]

    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.bar(range(len(names)), values, color="#6a9a58")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("mean bit accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Synchronization ablation")
    fig.tight_layout()
    path = os.path.join(out_dir, "ablation.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
