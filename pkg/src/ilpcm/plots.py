"""Static SVG figures: latent-space views, sampled-G frequencies, and metric
box summaries for simulation runs."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# Keep text as text so legends stay machine-checkable.
plt.rcParams["svg.fonttype"] = "none"

_MARKERS = ["o", "s", "^", "D", "v", "P", "X", "*", "<", ">"]


def plot_latent_views(mx, coords, partition, out_dir, covariates=None, view_names=None):
    """One SVG per view: posterior-mean coordinates colored by estimated
    cluster, observed edges drawn as segments, optional covariate-driven
    point shapes. Returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    coords = np.asarray(coords, dtype=float)
    partition = np.asarray(partition)
    n = coords.shape[0]
    cmap = plt.get_cmap("tab10")
    colors = [cmap(g % 10) for g in partition]
    if covariates is not None:
        cats = sorted(set(covariates))
        marker_of = {c: _MARKERS[i % len(_MARKERS)] for i, c in enumerate(cats)}
    paths = []
    for k in range(1, mx.K + 1):
        name = view_names[k - 1] if view_names else f"view_{k}"
        fig, ax = plt.subplots(figsize=(6, 6))
        A = mx.view(k)
        src, dst = np.nonzero(A)
        for i, j in zip(src, dst):
            ax.plot(coords[[i, j], 0], coords[[i, j], 1], color="0.8", lw=0.5, zorder=1)
        if covariates is None:
            ax.scatter(coords[:, 0], coords[:, 1], c=colors, s=45, zorder=2, edgecolors="k", linewidths=0.4)
        else:
            for cat in cats:
                idx = [i for i in range(n) if covariates[i] == cat]
                ax.scatter(
                    coords[idx, 0], coords[idx, 1],
                    c=[colors[i] for i in idx], marker=marker_of[cat],
                    s=45, zorder=2, edgecolors="k", linewidths=0.4, label=str(cat),
                )
            ax.legend(title="covariate", loc="best", fontsize=8)
        ax.set_title(f"latent space: {name}")
        ax.set_xlabel("dim 1")
        ax.set_ylabel("dim 2")
        path = out_dir / f"latent_{name}.svg"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths


def plot_g_frequencies(g_trace, out_path):
    """Bar chart of the sampled number of components."""
    g_trace = np.asarray(g_trace)
    values, counts = np.unique(g_trace, return_counts=True)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(values, counts / counts.sum(), color="steelblue", edgecolor="k")
    ax.set_xlabel("number of components")
    ax.set_ylabel("relative frequency")
    ax.set_xticks(values)
    ax.set_title("sampled G")
    fig.savefig(out_path)
    plt.close(fig)
    return Path(out_path)


def plot_metric_boxes(metric_series, out_path):
    """Box summaries of per-draw metrics (simulation mode)."""
    names = list(metric_series)
    data = [np.asarray(metric_series[k], dtype=float) for k in names]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.boxplot(data, tick_labels=names)
    ax.set_ylabel("value")
    ax.set_title("recovery metrics vs truth")
    fig.savefig(out_path)
    plt.close(fig)
    return Path(out_path)
