"""Edge probabilities, log-likelihood, identifiability bounds, and prior densities."""

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy.special import expit, gammaln


def squared_distances(Z):
    """Pairwise squared Euclidean distances of the rows of Z, as an (n, n) matrix."""
    s = np.einsum("ij,ij->i", Z, Z)
    D2 = s[:, None] + s[None, :] - 2.0 * (Z @ Z.T)
    np.fill_diagonal(D2, 0.0)
    return np.maximum(D2, 0.0)


def edge_prob(alpha_k, beta_k, d):
    """Connection probability logistic(alpha_k - beta_k * d) for squared distance d."""
    return expit(alpha_k - beta_k * np.asarray(d, dtype=float))


def alpha_lower_bound(n):
    """Lower bound log(log(n) / (n - log(n))) for the view intercepts."""
    if n <= 1:
        raise ValueError(f"node count must exceed 1, got {n}")
    ln = math.log(n)
    return math.log(ln / (n - ln))


def alpha_ref_min(p_bar):
    """Reference-view intercept bound logit(p_bar) + 2.

    The engine pins alpha on the reference view to this value by default.
    """
    if not 0.0 < p_bar < 1.0:
        raise ValueError(f"reference density must lie strictly in (0, 1), got {p_bar}")
    return math.log(p_bar / (1.0 - p_bar)) + 2.0


@dataclass
class LogitParams:
    """Per-view logit intercepts and distance scales with their hyperparameters.

    ``ref_view`` is 1-based; the reference view has beta fixed to 1 and alpha
    fixed to the reference bound. ``lb_alpha`` is the intercept lower bound
    implied by the node count.
    """

    alpha: np.ndarray
    beta: np.ndarray
    ref_view: int
    mu_alpha: float
    sigma2_alpha: float
    mu_beta: float
    sigma2_beta: float
    lb_alpha: float

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).copy()
        self.beta = np.asarray(self.beta, dtype=float).copy()
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        K = self.alpha.size
        if not 1 <= self.ref_view <= K:
            raise ValueError(f"ref_view must be in 1..{K}")
        if (self.beta < 0).any():
            raise ValueError("beta coefficients must be nonnegative")
        if self.beta[self.ref_view - 1] != 1.0:
            raise ValueError("reference-view beta must equal 1 exactly")
        # The reference intercept is pinned by the density rule, which for very
        # sparse reference views may sit below the generic bound.
        free = np.arange(K) != self.ref_view - 1
        if (self.alpha[free] < self.lb_alpha - 1e-12).any():
            raise ValueError("alpha below its lower bound")
        if self.sigma2_alpha <= 0 or self.sigma2_beta <= 0:
            raise ValueError("hyper variances must be positive")

    @property
    def K(self):
        return self.alpha.size

    def copy(self):
        return LogitParams(
            alpha=self.alpha.copy(),
            beta=self.beta.copy(),
            ref_view=self.ref_view,
            mu_alpha=self.mu_alpha,
            sigma2_alpha=self.sigma2_alpha,
            mu_beta=self.mu_beta,
            sigma2_beta=self.sigma2_beta,
            lb_alpha=self.lb_alpha,
        )


@dataclass
class PriorConfig:
    """Fixed hyperparameters of the hierarchical model, in one validated record.

    ``m`` is the base-distribution location vector (one entry per latent
    dimension); ``nu1``/``nu2`` are the Normal-Inverse-Gamma shape and scale,
    ``xi1``/``xi2`` the Gamma prior on the concentration. ``update_base_mean``
    toggles the Gibbs refresh of ``m`` (standard Gaussian hyperprior); when
    False, ``m`` stays frozen at its initial value.
    """

    p: int = 2
    m_alpha: float = 0.0
    tau_alpha: float = 1.0
    nu_alpha: float = 3.0
    m_beta: float = 0.0
    tau_beta: float = 1.0
    nu_beta: float = 3.0
    m: np.ndarray = None
    tau_z: float = 1.0
    nu1: float = 1.0
    nu2: float = 1.0
    xi1: float = 1.0
    xi2: float = 2.0
    update_base_mean: bool = True

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("latent dimension p must be >= 1")
        if self.m is None:
            self.m = np.zeros(self.p)
        self.m = np.asarray(self.m, dtype=float).copy()
        if self.m.shape != (self.p,):
            raise ValueError(f"m must have shape ({self.p},)")
        for name in ("tau_alpha", "nu_alpha", "tau_beta", "nu_beta", "tau_z", "nu1", "nu2", "xi1", "xi2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def defaults(cls, n, p=2):
        """Default hyperparameters; the NIG shape nu1 is tied to the node count."""
        return cls(p=p, nu1=float(n))

    @classmethod
    def from_json(cls, path, n=None, p=2):
        doc = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown prior config keys: {sorted(unknown)}")
        if "nu1" not in doc:
            if n is None:
                raise ValueError("nu1 missing from config and no node count supplied")
            doc["nu1"] = float(n)
        doc.setdefault("p", p)
        return cls(**doc)

    def to_dict(self):
        d = asdict(self)
        d["m"] = self.m.tolist()
        return d


def truncated_normal_logpdf(x, loc, scale, lower):
    """Log density of a normal(loc, scale^2) truncated to [lower, inf)."""
    if x < lower or scale <= 0:
        return -math.inf
    z = (x - loc) / scale
    log_kernel = -0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - math.log(scale)
    # survival mass above the truncation point
    from scipy.stats import norm

    log_mass = norm.logsf((lower - loc) / scale)
    return log_kernel - log_mass


def inv_chi2_logpdf(x, nu):
    """Log density of the inverse chi-squared distribution with nu d.o.f."""
    if x <= 0:
        return -math.inf
    h = nu / 2.0
    return -h * math.log(2.0) - gammaln(h) - (h + 1.0) * math.log(x) - 1.0 / (2.0 * x)


def logit_prior_logdensity(lp, cfg):
    """Joint log prior of the free logit parameters and their hyperparameters.

    Each non-reference alpha (beta) contributes a truncated-normal term;
    the reference view's fixed parameters contribute zero. Values outside the
    truncation region yield -inf rather than raising.
    """
    lb = lp.lb_alpha
    total = 0.0
    s_a = math.sqrt(lp.sigma2_alpha)
    s_b = math.sqrt(lp.sigma2_beta)
    for k in range(lp.K):
        if k == lp.ref_view - 1:
            continue
        total += truncated_normal_logpdf(lp.alpha[k], lp.mu_alpha, s_a, lb)
        total += truncated_normal_logpdf(lp.beta[k], lp.mu_beta, s_b, 0.0)
    total += truncated_normal_logpdf(lp.mu_alpha, cfg.m_alpha, math.sqrt(cfg.tau_alpha * lp.sigma2_alpha), lb)
    total += truncated_normal_logpdf(lp.mu_beta, cfg.m_beta, math.sqrt(cfg.tau_beta * lp.sigma2_beta), 0.0)
    total += inv_chi2_logpdf(lp.sigma2_alpha, cfg.nu_alpha)
    total += inv_chi2_logpdf(lp.sigma2_beta, cfg.nu_beta)
    return total


def view_log_likelihood(Y, directed, alpha_k, beta_k, D2):
    """Bernoulli-logit log-likelihood of one view given squared distances D2."""
    H = alpha_k - beta_k * D2
    T = Y * H - np.logaddexp(0.0, H)
    n = Y.shape[0]
    if directed:
        return float(T.sum() - np.trace(T))
    iu = np.triu_indices(n, k=1)
    return float(T[iu].sum())


def log_likelihood(m, lp, Z):
    """Model log-likelihood over all views.

    Directed views sum over ordered pairs i != j, undirected views over
    unordered pairs i < j.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] != m.n:
        raise ValueError(f"coordinate rows ({Z.shape[0]}) must match node count ({m.n})")
    if lp.K != m.K:
        raise ValueError(f"logit parameter count ({lp.K}) must match view count ({m.K})")
    D2 = squared_distances(Z)
    total = 0.0
    for k in range(m.K):
        total += view_log_likelihood(m.views[k], m.directed[k], lp.alpha[k], lp.beta[k], D2)
    return total
