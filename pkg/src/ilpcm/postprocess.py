"""Posterior post-processing: similarity matrix, VI-loss partition estimate,
k-means relabeling of component draws, coordinate alignment, and metrics."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform
from sklearn.cluster import KMeans

from .sampler import align_to_reference, procrustes_correlation


@dataclass
class PosteriorSimilarity:
    """Pairwise co-clustering frequencies across posterior draws."""

    matrix: np.ndarray
    draws_used: int


@dataclass
class ClusterSummary:
    """Point estimates of the clustering: the partition, the number of
    clusters, and Monte-Carlo averages of the relabeled component draws.
    ``retained_draws`` counts iterations surviving the permutation filter."""

    partition: np.ndarray
    G_hat: int
    mu_hat: np.ndarray
    sigma2_hat: np.ndarray
    pi_hat: np.ndarray
    retained_draws: int


def posterior_similarity(label_trace):
    """Entry (i, j) is the fraction of kept draws allocating i and j together."""
    L = np.asarray(label_trace)
    if L.ndim != 2 or L.shape[0] == 0:
        raise ValueError("label trace must be a non-empty (draws, nodes) array")
    T, n = L.shape
    M = np.zeros((n, n))
    for t in range(T):
        eq = L[t][:, None] == L[t][None, :]
        M += eq
    M /= T
    return PosteriorSimilarity(matrix=M, draws_used=T)


def vi_lower_bound(partition, psm):
    """Jensen lower bound of the expected Variation of Information of a
    candidate partition against the posterior, computed from the posterior
    similarity matrix (log base 2)."""
    c = np.asarray(partition)
    P = psm.matrix if isinstance(psm, PosteriorSimilarity) else np.asarray(psm)
    n = c.size
    same = c[:, None] == c[None, :]
    a = same.sum(axis=1)
    b = P.sum(axis=1)
    cross = (same * P).sum(axis=1)
    return float(np.mean(np.log2(a) + np.log2(b) - 2.0 * np.log2(cross)))


def _canon(partition):
    out = np.empty(len(partition), dtype=int)
    mapping = {}
    for i, g in enumerate(partition):
        if g not in mapping:
            mapping[g] = len(mapping)
        out[i] = mapping[g]
    return out


def default_vi_candidates(psm, label_trace=None):
    """Candidate partitions: every sampled partition plus average-linkage cuts
    of 1 - psm at every height."""
    P = psm.matrix if isinstance(psm, PosteriorSimilarity) else np.asarray(psm)
    n = P.shape[0]
    seen = {}
    cands = []

    def add(part):
        key = tuple(_canon(part))
        if key not in seen:
            seen[key] = True
            cands.append(np.asarray(key))

    if label_trace is not None:
        for row in np.asarray(label_trace):
            add(row)
    dist = 1.0 - P
    np.fill_diagonal(dist, 0.0)
    link = linkage(squareform(dist, checks=False), method="average")
    cuts = cut_tree(link)
    for j in range(cuts.shape[1]):
        add(cuts[:, j])
    return cands


def estimate_partition_vi(psm, candidates=None, label_trace=None):
    """Partition minimizing the VI lower bound over the candidate set.

    Ties (within 1e-12) are broken by the smaller number of blocks, then by
    first occurrence. Returns (partition, G_hat).
    """
    if candidates is None:
        candidates = default_vi_candidates(psm, label_trace=label_trace)
    if len(candidates) == 0:
        raise ValueError("candidate set is empty")
    best = None
    for idx, cand in enumerate(candidates):
        cand = _canon(np.asarray(cand))
        loss = vi_lower_bound(cand, psm)
        g = cand.max() + 1
        if best is None:
            best = (loss, g, idx, cand)
            continue
        if loss < best[0] - 1e-12:
            best = (loss, g, idx, cand)
        elif abs(loss - best[0]) <= 1e-12 and g < best[1]:
            best = (loss, g, idx, cand)
    partition = best[3]
    return partition, int(best[1])


def _pool_component_means(trace):
    rows = []
    draw_of = []
    for t, comp in enumerate(trace.components):
        for g in range(comp["mu"].shape[0]):
            rows.append(comp["mu"][g])
            draw_of.append(t)
    return np.asarray(rows), np.asarray(draw_of)


def relabel_and_estimate(trace, g_hat, partition=None):
    """K-means relabeling of the pooled component-mean draws.

    All post-burn-in component means are pooled and clustered into ``g_hat``
    cells; an iteration contributes to the parameter averages only when its
    components map bijectively onto the cells (the permutation check), which
    also requires its component count to equal ``g_hat``. Covariance and
    weight draws are reordered by the same assignment. Cells are reported in
    lexicographic order of their centers so the output is invariant to the
    iteration order of the trace.
    """
    if g_hat < 1:
        raise ValueError("g_hat must be >= 1")
    if len(trace.components) == 0:
        raise ValueError("empty trace")
    g_counts = np.array([c["mu"].shape[0] for c in trace.components])
    if (g_counts < g_hat).all():
        raise ValueError("no identifiable draws: g_hat exceeds every sampled component count")

    pooled, draw_of = _pool_component_means(trace)
    order = np.lexsort(pooled.T[::-1])
    km = KMeans(n_clusters=g_hat, n_init=50, random_state=0)
    km.fit(pooled[order])
    centers = km.cluster_centers_
    rank = np.lexsort(centers.T[::-1])
    remap = np.empty(g_hat, dtype=int)
    remap[rank] = np.arange(g_hat)
    cells = remap[km.predict(pooled)]

    p = pooled.shape[1]
    mu_sum = np.zeros((g_hat, p))
    s2_sum = np.zeros((g_hat, p))
    pi_sum = np.zeros(g_hat)
    retained = 0
    pos = 0
    for t, comp in enumerate(trace.components):
        G_t = comp["mu"].shape[0]
        cell_t = cells[pos:pos + G_t]
        pos += G_t
        if G_t != g_hat or len(set(cell_t)) != g_hat:
            continue
        mu_sum[cell_t] += comp["mu"]
        s2_sum[cell_t] += comp["sigma2"]
        pi_sum[cell_t] += comp["pi"]
        retained += 1
    if retained == 0:
        raise ValueError("no identifiable draws: no iteration passed the permutation check")

    mu_hat = mu_sum / retained
    sigma2_hat = s2_sum / retained
    pi_hat = pi_sum / retained
    pi_hat = pi_hat / pi_hat.sum()

    if partition is None:
        psm = posterior_similarity(trace.labels)
        partition, _ = estimate_partition_vi(psm, label_trace=trace.labels)
    return ClusterSummary(
        partition=np.asarray(partition),
        G_hat=int(g_hat),
        mu_hat=mu_hat,
        sigma2_hat=sigma2_hat,
        pi_hat=pi_hat,
        retained_draws=int(retained),
    )


def procrustes_align_trace(coord_trace, reference):
    """Align every coordinate draw onto the reference configuration.

    Returns the elementwise mean of the aligned draws and the per-draw
    Procrustes correlations with the reference.
    """
    draws = np.asarray(coord_trace, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if draws.ndim != 3 or draws.shape[1:] != reference.shape:
        raise ValueError("coordinate trace and reference shapes disagree")
    aligned = np.empty_like(draws)
    corrs = np.empty(draws.shape[0])
    for t in range(draws.shape[0]):
        aligned[t] = align_to_reference(draws[t], reference)
        corrs[t] = procrustes_correlation(draws[t], reference)
    return aligned.mean(axis=0), corrs


def adjusted_rand_index(p1, p2):
    """Chance-corrected agreement between two partitions of the same items."""
    a1 = np.asarray(p1)
    a2 = np.asarray(p2)
    if a1.shape != a2.shape or a1.ndim != 1:
        raise ValueError("partitions must be 1-d sequences of equal length")
    n = a1.size
    _, i1 = np.unique(a1, return_inverse=True)
    _, i2 = np.unique(a2, return_inverse=True)
    C = np.zeros((i1.max() + 1, i2.max() + 1))
    np.add.at(C, (i1, i2), 1.0)

    def comb2(x):
        return x * (x - 1.0) / 2.0

    sum_cells = comb2(C).sum()
    sum_rows = comb2(C.sum(axis=1)).sum()
    sum_cols = comb2(C.sum(axis=0)).sum()
    total = comb2(float(n))
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def map_reference(trace):
    """Maximum-posterior-likelihood draw, the default alignment reference when
    no ground truth is available."""
    return trace.Z[int(np.argmax(trace.loglik))]


def summarize_trace(trace, truth=None):
    """Full post-processing pipeline over a completed trace.

    Returns a JSON-ready summary dict: the VI partition and G_hat, relabeled
    component estimates, the aligned posterior-mean coordinates, and
    ARI/Procrustes-vs-truth metrics when ground truth is supplied. The
    alignment reference is the ground-truth configuration in simulation mode,
    otherwise the maximum-likelihood draw.
    """
    psm = posterior_similarity(trace.labels)
    partition, g_hat = estimate_partition_vi(psm, label_trace=trace.labels)
    summary_cs = relabel_and_estimate(trace, g_hat, partition=partition)

    if truth is not None:
        reference = np.asarray(truth["Z_true"], dtype=float)
    else:
        reference = map_reference(trace)
    z_hat, corrs = procrustes_align_trace(trace.Z, reference)

    out = {
        "G_hat": summary_cs.G_hat,
        "partition": (summary_cs.partition + 1).tolist(),
        "mu_hat": summary_cs.mu_hat.tolist(),
        "sigma2_hat": summary_cs.sigma2_hat.tolist(),
        "pi_hat": summary_cs.pi_hat.tolist(),
        "retained_draws": summary_cs.retained_draws,
        "draws_used": psm.draws_used,
        "mean_coordinates": z_hat.tolist(),
        "alignment_correlation_mean": float(corrs.mean()),
        "g_frequencies": {int(g): int(c) for g, c in zip(*np.unique(trace.G, return_counts=True))},
    }
    if truth is not None:
        labels_true = np.asarray(truth["labels_true"])
        out["ari_vs_truth"] = adjusted_rand_index(summary_cs.partition, labels_true)
        out["procrustes_vs_truth"] = procrustes_correlation(z_hat, reference)
        out["ari_draws_vs_truth"] = [
            adjusted_rand_index(trace.labels[t], labels_true) for t in range(len(trace))
        ]
        out["procrustes_draws_vs_truth"] = corrs.tolist()
    return out, psm
