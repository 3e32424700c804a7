"""Metropolis-within-Gibbs orchestration: initialization, latent-coordinate
proposals, Procrustes guard, logit-parameter updates, and chain recording."""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import ndtr, ndtri
from sklearn.linear_model import LogisticRegression
from sklearn.mixture import GaussianMixture

from .dpmix import (
    MixtureState,
    canonical_labels,
    resample_labels,
    update_base_mean,
    update_component_params,
    update_concentration,
)
from .model import (
    LogitParams,
    alpha_lower_bound,
    alpha_ref_min,
    squared_distances,
    view_log_likelihood,
)
from .multiplex import average_geodesic, density

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class MCMCConfig:
    """Sampler settings: sweep counts, random-walk scales, and the Procrustes
    guard threshold. ``alpha_ref_override`` replaces the density-derived
    reference intercept. ``likelihood_enabled=False`` is a diagnostic hook
    that drops the edge likelihood from every update (prior-preservation
    checks)."""

    iterations: int = 60000
    burn_in: int = 10000
    thin: int = 10
    seed: int = 0
    procrustes_threshold: float = 0.9
    procrustes_mode: str = "reject_below"
    rw_step_alpha: float = 0.5
    rw_step_beta: float = 0.25
    rw_step_coord: float = 0.2
    informed_proposal_prob: float = 0.5
    p: int = 2
    alpha_ref_override: float | None = None
    likelihood_enabled: bool = True
    adapt_during_burnin: bool = True

    def __post_init__(self):
        if not self.burn_in < self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0.0 < self.procrustes_threshold <= 1.0:
            raise ValueError("procrustes_threshold must lie in (0, 1]")
        if self.procrustes_mode not in ("reject_below", "reject_above"):
            raise ValueError("procrustes_mode must be 'reject_below' or 'reject_above'")
        if not 0.0 <= self.informed_proposal_prob <= 1.0:
            raise ValueError("informed_proposal_prob must lie in [0, 1]")
        if self.p < 1:
            raise ValueError("latent dimension p must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class ChainTrace:
    """Thinned post-burn-in draws of all unknowns plus diagnostic counters.

    ``components[t]`` holds the ragged per-iteration component block, with
    entries ordered consistently with the canonical labels stored in
    ``labels[t]``.
    """

    kept_iterations: np.ndarray
    Z: np.ndarray
    labels: np.ndarray
    G: np.ndarray
    psi: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    hypers: np.ndarray
    loglik: np.ndarray
    components: list
    counters: dict
    meta: dict

    def __len__(self):
        return self.kept_iterations.size


class AdaptiveScales:
    """Per-parameter random-walk scales with Robbins-Monro adaptation toward a
    0.44 univariate acceptance rate; adaptation only runs during burn-in so
    the post-burn-in kernel is fixed."""

    target = 0.44

    def __init__(self, step_alpha, step_beta, K):
        self.alpha = np.full(K, float(step_alpha))
        self.beta = np.full(K, float(step_beta))
        self._t = {"alpha": np.ones(K), "beta": np.ones(K)}
        self.accept_sum = {"alpha": np.zeros(K), "beta": np.zeros(K)}
        self.count = {"alpha": np.zeros(K), "beta": np.zeros(K)}

    def step(self, which, k):
        return (self.alpha if which == "alpha" else self.beta)[k]

    def record(self, which, k, acc_prob, adapt):
        self.accept_sum[which][k] += acc_prob
        self.count[which][k] += 1
        if adapt:
            t = self._t[which][k]
            arr = self.alpha if which == "alpha" else self.beta
            arr[k] *= math.exp((acc_prob - self.target) / t**0.6)
            arr[k] = min(max(arr[k], 1e-4), 50.0)
            self._t[which][k] = t + 1.0

    def rates(self, which):
        with np.errstate(invalid="ignore"):
            return np.where(self.count[which] > 0, self.accept_sum[which] / np.maximum(self.count[which], 1), np.nan)


def classical_mds(D, p, rng):
    """Classical multidimensional scaling: double centering of the squared
    distances, top-p eigenvectors scaled by root eigenvalues. Degenerate
    inputs (no positive spread) fall back to a small Gaussian jitter."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D * D) @ J
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:p]
    lam = np.clip(evals[order], 0.0, None)
    if lam.max(initial=0.0) <= 1e-12:
        return rng.normal(0.0, 1e-3, size=(n, p))
    Z = evecs[:, order] * np.sqrt(lam)
    if Z.shape[1] < p:
        Z = np.hstack([Z, np.zeros((n, p - Z.shape[1]))])
    return Z


def procrustes_correlation(X, Y):
    """Procrustes correlation between two configurations after optimal
    translation, rotation, reflection, and scaling: the square root of one
    minus the minimized residual over the total centered sum of squares."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError("configurations must share a shape")
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    nx = np.linalg.norm(Xc)
    ny = np.linalg.norm(Yc)
    if nx < 1e-300 or ny < 1e-300:
        return 1.0 if nx < 1e-300 and ny < 1e-300 else 0.0
    sv = np.linalg.svd(Xc.T @ Yc, compute_uv=False)
    return float(min(1.0, sv.sum() / (nx * ny)))


def procrustes_guard(Z_prev, Z_new, threshold, mode="reject_below"):
    """Whether to keep the updated coordinate set for this sweep.

    The default mode discards the sweep when the correlation with the previous
    configuration falls BELOW the threshold. ``reject_above`` implements the
    opposite (literal) reading for comparison.
    """
    corr = procrustes_correlation(Z_prev, Z_new)
    if mode == "reject_below":
        return corr >= threshold
    return corr <= threshold


def align_to_reference(X, ref):
    """Optimal translation/rotation/reflection/scaling of X onto ref."""
    X = np.asarray(X, dtype=float)
    ref = np.asarray(ref, dtype=float)
    Xc = X - X.mean(axis=0)
    refc = ref - ref.mean(axis=0)
    U, S, Vt = np.linalg.svd(Xc.T @ refc)
    R = U @ Vt
    denom = (Xc * Xc).sum()
    scale = S.sum() / denom if denom > 0 else 1.0
    return scale * Xc @ R + ref.mean(axis=0)


def _effective_adjacency(mx):
    """Per-view dyad multiplicities for the node-conditional likelihood.

    For a directed view both ordered pairs (i, j) and (j, i) involve node i
    and share the same distance, so the row weights add and the normalizer
    counts twice; an undirected view contributes each unordered pair once.
    """
    Yeff = np.empty(mx.views.shape, dtype=float)
    cvec = np.empty(mx.K)
    for k in range(mx.K):
        Y = mx.views[k].astype(float)
        if mx.directed[k]:
            Yeff[k] = Y + Y.T
            cvec[k] = 2.0
        else:
            Yeff[k] = Y
            cvec[k] = 1.0
    return Yeff, cvec


def _node_loglik(i, d_i, Yeff_row, cvec, alpha, beta):
    eta = alpha[:, None] - beta[:, None] * d_i[None, :]
    lae = np.logaddexp(0.0, eta)
    return float((Yeff_row * eta).sum() - (cvec * (lae.sum(axis=1) - lae[:, i])).sum())


def _proposal_params(i, d_i, Yeff_row, cvec, alpha, beta, mu_g, sig2_g, Z, likelihood_on):
    if likelihood_on:
        eta = alpha[:, None] - beta[:, None] * d_i[None, :]
        w = eta > 0
        delta = Yeff_row - cvec[:, None] * w
        delta[:, i] = 0.0
        curv = 2.0 * (beta @ np.abs(delta).sum(axis=1))
        lin = 2.0 * (beta @ (delta @ Z))
    else:
        curv = 0.0
        lin = 0.0
    var = 1.0 / (1.0 / sig2_g + curv)
    mean = var * (lin + mu_g / sig2_g)
    return mean, var


def _normal_logpdf(x, mean, var):
    d = x - mean
    return float(-0.5 * (np.log(var) + d * d / var + _LOG_2PI).sum())


def propose_latent_coordinate(i, Z, st, lp, mx, rng, likelihood_on=True):
    """Gaussian proposal for node i's coordinate plus its Metropolis-Hastings
    log acceptance ratio against the exact full conditional (edge
    log-likelihood plus the allocated component's log prior density), with
    the asymmetric-proposal correction.

    Returns (proposed coordinate, log ratio). The caller decides acceptance.
    """
    Z = np.asarray(Z, dtype=float)
    D2 = squared_distances(Z)
    Yeff, cvec = _effective_adjacency(mx)
    return _propose_coordinate(i, Z, D2, st, lp.alpha, lp.beta, Yeff, cvec, rng, likelihood_on)[:2]


def _propose_coordinate(i, Z, D2, st, alpha, beta, Yeff, cvec, rng, likelihood_on):
    g = st.labels[i]
    mu_g = st.mu[g]
    sig2_g = st.sigma2[g]
    d_i = D2[i]
    Yrow = Yeff[:, i, :]

    mean_f, var_f = _proposal_params(i, d_i, Yrow, cvec, alpha, beta, mu_g, sig2_g, Z, likelihood_on)
    z_new = mean_f + np.sqrt(var_f) * rng.standard_normal(Z.shape[1])

    diff = Z - z_new
    d_new = np.einsum("ij,ij->i", diff, diff)
    d_new[i] = 0.0
    mean_r, var_r = _proposal_params(i, d_new, Yrow, cvec, alpha, beta, mu_g, sig2_g, Z, likelihood_on)

    if likelihood_on:
        ll_cur = _node_loglik(i, d_i, Yrow, cvec, alpha, beta)
        ll_new = _node_loglik(i, d_new, Yrow, cvec, alpha, beta)
    else:
        ll_cur = ll_new = 0.0
    pr_cur = _normal_logpdf(Z[i], mu_g, sig2_g)
    pr_new = _normal_logpdf(z_new, mu_g, sig2_g)

    log_ratio = (ll_new + pr_new) - (ll_cur + pr_cur)
    log_ratio += _normal_logpdf(Z[i], mean_r, var_r) - _normal_logpdf(z_new, mean_f, var_f)
    return z_new, log_ratio, d_new


class CoordScales:
    """Per-node random-walk scales for the symmetric half of the coordinate
    kernel, Robbins-Monro adapted during burn-in toward 0.35 acceptance."""

    target = 0.35

    def __init__(self, step, n):
        self.step = np.full(n, float(step))
        self._t = np.ones(n)

    def record(self, i, acc_prob, adapt):
        if adapt:
            self.step[i] *= math.exp((acc_prob - self.target) / self._t[i] ** 0.6)
            self.step[i] = min(max(self.step[i], 1e-5), 20.0)
            self._t[i] += 1.0


def _coord_target(i, z, d_vec, Yrow, cvec, alpha, beta, mu_g, sig2_g, likelihood_on):
    ll = _node_loglik(i, d_vec, Yrow, cvec, alpha, beta) if likelihood_on else 0.0
    return ll + _normal_logpdf(z, mu_g, sig2_g)


def _coordinate_sweep(Z, D2, st, lp, Yeff, cvec, rng, likelihood_on,
                      coord_scales=None, informed_prob=0.5, adapt=False):
    """One pass of per-node coordinate updates.

    Each node update draws either the informed Gaussian proposal (with its
    asymmetric-proposal correction) or a symmetric random-walk step; both are
    exact Metropolis-Hastings kernels for the same full conditional, so the
    mixture leaves it invariant. The random-walk half keeps the chain mobile
    where the informed proposal is too coarse to be accepted.
    """
    n, p = Z.shape
    accepted = 0
    for i in range(n):
        if rng.random() < informed_prob:
            z_new, log_ratio, d_new = _propose_coordinate(
                i, Z, D2, st, lp.alpha, lp.beta, Yeff, cvec, rng, likelihood_on
            )
            acc = min(1.0, math.exp(min(log_ratio, 0.0)))
        else:
            step = coord_scales.step[i] if coord_scales is not None else 0.2
            z_new = Z[i] + step * rng.standard_normal(p)
            diff = Z - z_new
            d_new = np.einsum("ij,ij->i", diff, diff)
            d_new[i] = 0.0
            Yrow = Yeff[:, i, :]
            g = st.labels[i]
            log_ratio = _coord_target(i, z_new, d_new, Yrow, cvec, lp.alpha, lp.beta,
                                      st.mu[g], st.sigma2[g], likelihood_on) \
                - _coord_target(i, Z[i], D2[i], Yrow, cvec, lp.alpha, lp.beta,
                                st.mu[g], st.sigma2[g], likelihood_on)
            acc = min(1.0, math.exp(min(log_ratio, 0.0)))
            if coord_scales is not None:
                coord_scales.record(i, acc, adapt)
        if rng.random() < acc:
            Z[i] = z_new
            D2[i, :] = d_new
            D2[:, i] = d_new
            accepted += 1
    return accepted


def _truncnorm_draw(loc, scale, lower, rng):
    # Inverse-CDF sampling; much cheaper than scipy's rv machinery and exact
    # for the mild truncations used here.
    a = (lower - loc) / scale
    ua = ndtr(a)
    u = ua + (1.0 - ua) * rng.random()
    u = min(u, 1.0 - 1e-16)
    return loc + scale * float(ndtri(u))


def metropolis_logit_view(Y, directed, alpha, beta, D2, which, step, prior_mean,
                          prior_var, lower, rng, likelihood_on=True):
    """One reflected Gaussian random-walk Metropolis step for one view's
    intercept ("alpha") or scale ("beta"), against the view likelihood times
    the truncated-normal prior kernel. Returns (new value, acceptance
    probability)."""
    cur = alpha if which == "alpha" else beta
    prop = cur + step * rng.standard_normal()
    if prop < lower:
        prop = 2.0 * lower - prop
    if likelihood_on:
        ll_cur = view_log_likelihood(Y, directed, alpha, beta, D2)
        if which == "alpha":
            ll_prop = view_log_likelihood(Y, directed, prop, beta, D2)
        else:
            ll_prop = view_log_likelihood(Y, directed, alpha, prop, D2)
    else:
        ll_cur = ll_prop = 0.0
    dk = ((cur - prior_mean) ** 2 - (prop - prior_mean) ** 2) / (2.0 * prior_var)
    log_r = ll_prop - ll_cur + dk
    acc = min(1.0, math.exp(min(log_r, 0.0)))
    new = prop if rng.random() < acc else cur
    return new, acc


def update_logit_params(mx, lp, Z, cfg, rng, *, D2=None, scales=None, adapt=False, likelihood_on=True):
    """One update cycle of the non-reference logit parameters and their
    hyperparameters.

    Each free alpha and beta takes a reflected Gaussian random-walk Metropolis
    step against its view's likelihood times a truncated-normal prior; the
    hyperparameters are then refreshed from their conjugate conditionals
    (truncated normal for the means, inverse gamma for the variances).
    """
    lp = lp.copy()
    K = lp.K
    if D2 is None:
        D2 = squared_distances(np.asarray(Z, dtype=float))
    if scales is None:
        scales = AdaptiveScales(0.5, 0.25, K)
    lb = lp.lb_alpha

    for k in range(K):
        if k == lp.ref_view - 1:
            continue
        Y = mx.views[k]
        directed = mx.directed[k]
        lp.alpha[k], acc = metropolis_logit_view(
            Y, directed, lp.alpha[k], lp.beta[k], D2, "alpha", scales.step("alpha", k),
            lp.mu_alpha, lp.sigma2_alpha, lb, rng, likelihood_on,
        )
        scales.record("alpha", k, acc, adapt)
        lp.beta[k], acc = metropolis_logit_view(
            Y, directed, lp.alpha[k], lp.beta[k], D2, "beta", scales.step("beta", k),
            lp.mu_beta, lp.sigma2_beta, 0.0, rng, likelihood_on,
        )
        scales.record("beta", k, acc, adapt)

    # Conjugate hyperparameter refresh; all K values (the fixed reference pair
    # included) count as draws from the population level.
    ta, tb = cfg.tau_alpha, cfg.tau_beta
    loc = (cfg.m_alpha + ta * lp.alpha.sum()) / (1.0 + K * ta)
    var = ta * lp.sigma2_alpha / (1.0 + K * ta)
    lp.mu_alpha = _truncnorm_draw(loc, math.sqrt(var), lb, rng)
    shape = (cfg.nu_alpha + K + 1.0) / 2.0
    rate = (1.0 + (lp.mu_alpha - cfg.m_alpha) ** 2 / ta + ((lp.alpha - lp.mu_alpha) ** 2).sum()) / 2.0
    lp.sigma2_alpha = rate / rng.gamma(shape)

    loc = (cfg.m_beta + tb * lp.beta.sum()) / (1.0 + K * tb)
    var = tb * lp.sigma2_beta / (1.0 + K * tb)
    lp.mu_beta = _truncnorm_draw(loc, math.sqrt(var), 0.0, rng)
    shape = (cfg.nu_beta + K + 1.0) / 2.0
    rate = (1.0 + (lp.mu_beta - cfg.m_beta) ** 2 / tb + ((lp.beta - lp.mu_beta) ** 2).sum()) / 2.0
    lp.sigma2_beta = rate / rng.gamma(shape)
    return lp


def _vectorize_view(Y, directed, D2):
    n = Y.shape[0]
    if directed:
        mask = ~np.eye(n, dtype=bool)
    else:
        mask = np.triu(np.ones((n, n), dtype=bool), k=1)
    return Y[mask].astype(float), D2[mask]


def initialize(mx, cfg, mc, rng):
    """Starting state: multidimensional scaling of the average geodesic
    distances, a BIC-selected diagonal Gaussian mixture for the initial
    partition, per-view logistic regressions for the logit parameters, and
    hyperparameters from the moments of those estimates. The reference-view
    parameters are then overwritten with the identifiability constraints."""
    if cfg.p != mc.p:
        raise ValueError("prior and sampler latent dimensions disagree")
    n, K, p = mx.n, mx.K, mc.p

    Z0 = classical_mds(average_geodesic(mx), p, rng)

    gmm_seed = int(rng.integers(2**31 - 1))
    best = None
    g_max = max(1, min(9, n // 3))
    # Geodesic embeddings clump nodes onto near-identical coordinates; fits
    # that collapse a component onto such a clump (variance at the floor) are
    # discarded from the BIC race rather than rewarded for it.
    scale = max(float(Z0.var(axis=0).mean()), 1e-12)
    reg = 1e-6 * scale
    for g in range(1, g_max + 1):
        gm = GaussianMixture(
            n_components=g, covariance_type="diag", reg_covar=reg,
            max_iter=200, n_init=1, random_state=gmm_seed,
        )
        try:
            gm.fit(Z0)
        except ValueError:
            continue
        if not gm.converged_ or gm.covariances_.min() <= 10 * reg:
            continue
        bic = gm.bic(Z0)
        if best is None or bic < best[0]:
            best = (bic, gm)
    if best is None:
        labels0 = np.zeros(n, dtype=int)
        mu0 = Z0.mean(axis=0, keepdims=True)
        sig0 = np.maximum(Z0.var(axis=0, keepdims=True), 1e-4 * scale)
    else:
        gm = best[1]
        raw = gm.predict(Z0)
        labels0, order = canonical_labels(raw)
        mu0 = gm.means_[order]
        sig0 = np.maximum(gm.covariances_[order], 1e-4 * scale)
    st0 = MixtureState(labels=labels0, mu=mu0, sigma2=sig0, psi=cfg.xi1 / cfg.xi2, base_mean=cfg.m)

    D2 = squared_distances(Z0)
    lb = alpha_lower_bound(n)
    alpha0 = np.empty(K)
    beta0 = np.empty(K)
    for k in range(K):
        y, d2 = _vectorize_view(mx.views[k], mx.directed[k], D2)
        ybar = y.mean()
        if ybar in (0.0, 1.0) or d2.std() == 0:
            ybar = min(max(ybar, 1.0 / y.size), 1.0 - 1.0 / y.size)
            alpha0[k] = max(math.log(ybar / (1 - ybar)), lb)
            beta0[k] = 0.0
            continue
        lr = LogisticRegression(penalty=None, max_iter=1000).fit(d2[:, None], y.astype(int))
        alpha0[k] = max(float(lr.intercept_[0]), lb)
        beta0[k] = max(0.0, -float(lr.coef_[0, 0]))

    mu_alpha0 = float(alpha0.mean())
    sigma2_alpha0 = max(float(alpha0.var()), 1e-2)
    mu_beta0 = float(beta0.mean())
    sigma2_beta0 = max(float(beta0.var()), 1e-2)

    ref = mx.ref_view
    beta0[ref - 1] = 1.0
    if mc.alpha_ref_override is not None:
        alpha0[ref - 1] = float(mc.alpha_ref_override)
    else:
        p_bar = density(mx, ref)
        if not 0.0 < p_bar < 1.0:
            raise ValueError(
                "reference view is empty or complete; its intercept is undefined "
                "(supply alpha_ref_override)"
            )
        alpha0[ref - 1] = alpha_ref_min(p_bar)

    lp0 = LogitParams(
        alpha=alpha0, beta=beta0, ref_view=ref,
        mu_alpha=mu_alpha0, sigma2_alpha=sigma2_alpha0,
        mu_beta=mu_beta0, sigma2_beta=sigma2_beta0,
        lb_alpha=lb,
    )
    return Z0, st0, lp0


def run_chain(mx, cfg, mc, writer=None):
    """Run one chain: per sweep, (a) sequential coordinate updates followed by
    the Procrustes guard on the full configuration, (b) label resampling,
    (c) component and base-mean updates, (d) the concentration step, and
    (e) the logit-parameter cycle. Thinned post-burn-in states are recorded;
    the run is fully deterministic given the seed."""
    rng = np.random.default_rng(mc.seed)
    Z, st, lp = initialize(mx, cfg, mc, rng)
    Z = np.asarray(Z, dtype=float)
    D2 = squared_distances(Z)
    Yeff, cvec = _effective_adjacency(mx)
    scales = AdaptiveScales(mc.rw_step_alpha, mc.rw_step_beta, mx.K)
    coord_scales = CoordScales(mc.rw_step_coord, mx.n)

    n = mx.n
    coord_accepts = 0
    procrustes_rejects = 0
    records = []

    for t in range(1, mc.iterations + 1):
        Z_prev = Z.copy()
        D2_prev = D2.copy()
        coord_accepts += _coordinate_sweep(
            Z, D2, st, lp, Yeff, cvec, rng, mc.likelihood_enabled,
            coord_scales=coord_scales, informed_prob=mc.informed_proposal_prob,
            adapt=(mc.adapt_during_burnin and t <= mc.burn_in),
        )
        if not procrustes_guard(Z_prev, Z, mc.procrustes_threshold, mc.procrustes_mode):
            Z = Z_prev
            D2 = D2_prev
            procrustes_rejects += 1

        st = resample_labels(Z, st, cfg, rng)
        st = update_component_params(Z, st, cfg, rng)
        if cfg.update_base_mean:
            st = update_base_mean(st, cfg, rng)
        st = update_concentration(st, n, cfg, rng)
        lp = update_logit_params(
            mx, lp, Z, cfg, rng, D2=D2, scales=scales,
            adapt=(mc.adapt_during_burnin and t <= mc.burn_in),
            likelihood_on=mc.likelihood_enabled,
        )

        if t > mc.burn_in and (t - mc.burn_in) % mc.thin == 0:
            canon, order = canonical_labels(st.labels)
            counts = st.counts[order]
            ll = sum(
                view_log_likelihood(mx.views[k], mx.directed[k], lp.alpha[k], lp.beta[k], D2)
                for k in range(mx.K)
            )
            rec = {
                "iteration": t,
                "Z": Z.copy(),
                "labels": canon,
                "G": st.G,
                "psi": st.psi,
                "alpha": lp.alpha.copy(),
                "beta": lp.beta.copy(),
                "hypers": np.array([lp.mu_alpha, lp.sigma2_alpha, lp.mu_beta, lp.sigma2_beta]),
                "loglik": ll,
                "mu": st.mu[order].copy(),
                "sigma2": st.sigma2[order].copy(),
                "pi": counts / n,
                "m": st.base_mean.copy(),
            }
            records.append(rec)
            if writer is not None:
                writer.append(rec)

    counters = {
        "coordinate_acceptance": coord_accepts / (mc.iterations * n),
        "alpha_acceptance": [None if math.isnan(v) else v for v in scales.rates("alpha")],
        "beta_acceptance": [None if math.isnan(v) else v for v in scales.rates("beta")],
        "procrustes_rejects": procrustes_rejects,
        "sweeps": mc.iterations,
    }
    meta = {
        "n": n,
        "K": mx.K,
        "p": mc.p,
        "seed": mc.seed,
        "node_names": mx.names(),
        "mcmc": mc.to_dict(),
        "prior": cfg.to_dict(),
    }
    trace = ChainTrace(
        kept_iterations=np.array([r["iteration"] for r in records], dtype=int),
        Z=np.array([r["Z"] for r in records]),
        labels=np.array([r["labels"] for r in records], dtype=int),
        G=np.array([r["G"] for r in records], dtype=int),
        psi=np.array([r["psi"] for r in records]),
        alpha=np.array([r["alpha"] for r in records]),
        beta=np.array([r["beta"] for r in records]),
        hypers=np.array([r["hypers"] for r in records]),
        loglik=np.array([r["loglik"] for r in records]),
        components=[
            {"mu": r["mu"], "sigma2": r["sigma2"], "pi": r["pi"], "m": r["m"]} for r in records
        ],
        counters=counters,
        meta=meta,
    )
    if writer is not None:
        writer.finalize(counters, meta)
    return trace
