"""Dirichlet-process mixture machinery: label resampling, component updates,
base-mean update, and the concentration-parameter step."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class MixtureState:
    """Current mixture configuration of the latent coordinates.

    ``labels`` is a dense 0-based allocation vector; component g has mean
    ``mu[g]`` and diagonal variances ``sigma2[g]``. ``base_mean`` is the
    current value of the base-distribution location vector.
    """

    labels: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    psi: float
    base_mean: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64).copy()
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=float)).copy()
        self.sigma2 = np.atleast_2d(np.asarray(self.sigma2, dtype=float)).copy()
        self.base_mean = np.asarray(self.base_mean, dtype=float).copy()
        self.validate()

    def validate(self):
        G, p = self.mu.shape
        if self.sigma2.shape != (G, p):
            raise ValueError("mu and sigma2 must have identical shapes")
        if self.base_mean.shape != (p,):
            raise ValueError("base_mean must have one entry per latent dimension")
        if (self.sigma2 <= 0).any():
            raise ValueError("component variances must be strictly positive")
        if self.psi < 0:
            raise ValueError("concentration must be nonnegative")
        counts = np.bincount(self.labels, minlength=G)
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= G:
            raise ValueError("labels outside 0..G-1")
        if counts.size != G or (counts == 0).any():
            raise ValueError("every component must be non-empty")

    @property
    def G(self):
        return self.mu.shape[0]

    @property
    def p(self):
        return self.mu.shape[1]

    @property
    def counts(self):
        return np.bincount(self.labels, minlength=self.G)

    @property
    def weights(self):
        return self.counts / self.labels.size

    def copy(self):
        return MixtureState(
            labels=self.labels.copy(),
            mu=self.mu.copy(),
            sigma2=self.sigma2.copy(),
            psi=self.psi,
            base_mean=self.base_mean.copy(),
        )


def _component_logpdfs(z, mu, sigma2):
    """log N_p(z | mu_g, diag(sigma2_g)) for every component, vectorized over g."""
    diff = z[None, :] - mu
    return -0.5 * (np.log(sigma2) + diff * diff / sigma2 + _LOG_2PI).sum(axis=1)


def mixture_logdensity(z, st):
    """Log density of the finite mixture with weights n_g / n at point z."""
    logp = _component_logpdfs(np.asarray(z, dtype=float), st.mu, st.sigma2)
    logw = np.log(st.counts) - math.log(st.labels.size)
    x = logw + logp
    mx = x.max()
    return float(mx + math.log(np.exp(x - mx).sum()))


def _t_marginal_consts(cfg):
    df = 2.0 * cfg.nu1
    scale2 = (cfg.nu2 / cfg.nu1) * (1.0 + cfg.tau_z)
    const = gammaln((df + 1.0) / 2.0) - gammaln(df / 2.0) - 0.5 * math.log(df * math.pi) - 0.5 * math.log(scale2)
    return df, scale2, const


def _student_t_marginal_logpdf(z, cfg, base_mean, consts=None):
    """Log density of the new-cluster marginal: a product of univariate
    Student-t terms with 2*nu1 d.o.f., location m_r, squared scale
    (nu2/nu1)(1 + tau_z)."""
    if consts is None:
        consts = _t_marginal_consts(cfg)
    df, scale2, const = consts
    u2 = (z - base_mean) ** 2 / scale2
    return float((const - 0.5 * (df + 1.0) * np.log1p(u2 / df)).sum())


def _reduced_counts(st, i):
    """Counts with node i removed; returns (counts, keep_mask) where components
    emptied by the removal are flagged for dropping."""
    counts = st.counts.copy()
    counts[st.labels[i]] -= 1
    return counts, counts > 0


def label_full_conditional(i, Z, st, cfg):
    """Allocation probabilities for node i: existing components weighted by
    n_g^(-i) times the component Gaussian density, plus psi times the
    Student-t marginal for a new component. Components emptied by removing
    node i are dropped before computing."""
    counts, keep = _reduced_counts(st, i)
    z = Z[i]
    logp = _component_logpdfs(z, st.mu[keep], st.sigma2[keep])
    if not np.isfinite(logp).all():
        raise FloatingPointError("non-finite component density: corrupted mixture state")
    logw = np.concatenate([np.log(counts[keep]) + logp, [(-np.inf if st.psi == 0 else math.log(st.psi)) + _student_t_marginal_logpdf(z, cfg, st.base_mean)]])
    mx = logw.max()
    w = np.exp(logw - mx)
    return w / w.sum()


def _birth_component(z, cfg, base_mean, rng):
    """New-component parameters: the mean starts at the node's coordinate, the
    variances are drawn from their full conditional, then the mean is
    refreshed from its own full conditional."""
    tau = cfg.tau_z
    shape = cfg.nu1 + 1.0
    X = ((z - base_mean) ** 2 + 2.0 * tau * cfg.nu2) / (2.0 * tau)
    sigma2 = 1.0 / rng.gamma(shape, 1.0 / X)
    post_mean = (tau * z + base_mean) / (1.0 + tau)
    post_var = tau * sigma2 / (1.0 + tau)
    mu = rng.normal(post_mean, np.sqrt(post_var))
    return mu, sigma2


def resample_labels(Z, st, cfg, rng, crp_only=False):
    """One sequential sweep of allocation updates over all nodes.

    With ``crp_only=True`` coordinates are ignored and the weights reduce to
    the Chinese-restaurant ones (a diagnostic hook). New components are born
    with the coordinate-seeded recipe; emptied components are deleted and the
    labels compacted in ascending order.
    """
    n = st.labels.size
    labels = st.labels.copy()
    mu = [row for row in st.mu.copy()]
    sigma2 = [row for row in st.sigma2.copy()]
    counts = list(np.bincount(labels, minlength=st.G))
    log_psi = -np.inf if st.psi == 0 else math.log(st.psi)
    t_consts = _t_marginal_consts(cfg)

    for i in range(n):
        g = labels[i]
        counts[g] -= 1
        if counts[g] == 0:
            del mu[g], sigma2[g], counts[g]
            labels[labels > g] -= 1
        G = len(mu)
        if crp_only:
            logw = np.empty(G + 1)
            logw[:G] = np.log(counts)
            logw[G] = log_psi
        else:
            logp = _component_logpdfs(Z[i], np.asarray(mu), np.asarray(sigma2))
            if not np.isfinite(logp).all():
                raise FloatingPointError("non-finite component density: corrupted mixture state")
            logw = np.empty(G + 1)
            logw[:G] = np.log(counts) + logp
            logw[G] = log_psi + _student_t_marginal_logpdf(Z[i], cfg, st.base_mean, t_consts)
        w = np.exp(logw - logw.max())
        w /= w.sum()
        g_new = int(np.searchsorted(np.cumsum(w), rng.random()))
        g_new = min(g_new, G)
        if g_new == G:
            mu_new, sigma2_new = _birth_component(Z[i], cfg, st.base_mean, rng)
            mu.append(mu_new)
            sigma2.append(sigma2_new)
            counts.append(1)
        else:
            counts[g_new] += 1
        labels[i] = g_new

    return MixtureState(
        labels=labels,
        mu=np.asarray(mu),
        sigma2=np.asarray(sigma2),
        psi=st.psi,
        base_mean=st.base_mean,
    )


def update_component_params(Z, st, cfg, rng):
    """Conjugate refresh of every component: variances from their inverse-gamma
    full conditional (given the current means), then means from their normal
    full conditional (given the new variances)."""
    tau = cfg.tau_z
    m = st.base_mean
    G = st.G
    mu = st.mu.copy()
    sigma2 = st.sigma2.copy()
    for g in range(G):
        pts = Z[st.labels == g]
        n_g = pts.shape[0]
        shape = (n_g + 1.0 + 2.0 * cfg.nu1) / 2.0
        resid = ((pts - mu[g]) ** 2).sum(axis=0)
        X = (tau * resid + (mu[g] - m) ** 2 + 2.0 * tau * cfg.nu2) / (2.0 * tau)
        sigma2[g] = 1.0 / rng.gamma(shape, 1.0 / X)
        post_mean = (tau * pts.sum(axis=0) + m) / (1.0 + n_g * tau)
        post_var = tau * sigma2[g] / (1.0 + n_g * tau)
        mu[g] = rng.normal(post_mean, np.sqrt(post_var))
    return MixtureState(labels=st.labels, mu=mu, sigma2=sigma2, psi=st.psi, base_mean=st.base_mean)


def update_base_mean(st, cfg, rng):
    """Gibbs draw of the base-distribution location under its standard
    Gaussian hyperprior."""
    x = (1.0 / st.sigma2).sum(axis=0)
    var = cfg.tau_z / (cfg.tau_z + x)
    mean = (st.mu / st.sigma2).sum(axis=0) / (cfg.tau_z + x)
    m_new = rng.normal(mean, np.sqrt(var))
    return MixtureState(labels=st.labels, mu=st.mu, sigma2=st.sigma2, psi=st.psi, base_mean=m_new)


def escobar_mixture_weight(xi1, xi2, G, n, x):
    """Mixture weight eta of the two-gamma concentration update given the
    auxiliary beta draw x."""
    s = (xi1 + G - 1.0) / (n * (xi2 - math.log(x)))
    return s / (1.0 + s)


def update_concentration(st, n, cfg, rng):
    """Auxiliary-variable update of the concentration parameter.

    The auxiliary variable is drawn from Beta(psi + 1, n) given the current
    concentration, then psi is refreshed from the two-component gamma
    mixture; this is the exact conditional given the number of occupied
    components.
    """
    G = st.G
    x = rng.beta(st.psi + 1.0, n)
    eta = escobar_mixture_weight(cfg.xi1, cfg.xi2, G, n, x)
    shape = cfg.xi1 + G if rng.random() < eta else cfg.xi1 + G - 1.0
    rate = cfg.xi2 - math.log(x)
    psi_new = rng.gamma(shape, 1.0 / rate)
    return MixtureState(labels=st.labels, mu=st.mu, sigma2=st.sigma2, psi=psi_new, base_mean=st.base_mean)


def canonical_labels(labels):
    """Relabel components in order of first appearance.

    Returns (relabeled, order) where ``order[new] = old`` maps canonical
    component indices back to the input ones.
    """
    labels = np.asarray(labels)
    order = []
    mapping = {}
    out = np.empty_like(labels)
    for i, g in enumerate(labels):
        if g not in mapping:
            mapping[g] = len(order)
            order.append(g)
        out[i] = mapping[g]
    return out, np.asarray(order, dtype=np.int64)
