"""Effective capacity of NOMA / OMA users with finite blocklength.

For a user with per-block rate r, the effective capacity is

    C = -1/(theta n) * ln E[eps + (1 - eps) exp(-theta n r)].

Three evaluation routes are provided and are meant to check one another:

* ``ec_monte_carlo`` - sample block-fading gains, exact dispersion;
* ``ec_quadrature``  - integrate against the order-statistic density, with the
  exact dispersion or with sqrt(V) = 1;
* ``ec_closed_*``    - Tricomi-U / exponential-integral closed forms, which
  embed sqrt(V) = 1.

A user is described by a :class:`UserRole`: which gain rank it owns among the
``num_users`` drawn per block, whether it decodes as a NOMA strong user (after
SIC), a NOMA weak user (interference-limited) or an orthogonal user, and its
share of the slot.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from . import channel
from .channel import LinkConfig, OrderStatSpec
from .errors import ConfigError, ConvergenceError, DomainError
from .rates import fbl_rate, link_qinv, strong_snr_values, weak_sinr_values
from .specfun import DEFAULT_POLICY, AccuracyPolicy, scaled_neg_ei, tricomi_u

LN2 = math.log(2.0)

USERS = ("noma_strong", "noma_weak", "oma_strong", "oma_weak")
METHODS = ("monte_carlo", "quadrature", "closed_form")


# --------------------------------------------------------------------------
# configuration types


@dataclass(frozen=True)
class QosConfig:
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise ConfigError(f"theta must be positive, got {self.theta}")


@dataclass(frozen=True)
class QosDerived:
    upsilon: float
    psi: float

    @classmethod
    def from_configs(cls, qos: QosConfig, link: LinkConfig) -> "QosDerived":
        n = link.blocklength_n
        return cls(upsilon=-qos.theta * n / (2.0 * LN2),
                   psi=qos.theta * math.sqrt(n) * link_qinv(link))


@dataclass(frozen=True)
class EcEstimate:
    value: float
    method: str
    std_error: float = 0.0
    samples_or_nodes: int = 0
    diag: str = ""


@dataclass(frozen=True)
class DelayModel:
    d_max: float
    mu: float
    p_nonempty: float = 1.0

    def __post_init__(self):
        if self.d_max < 0 or self.mu <= 0:
            raise ConfigError("need d_max >= 0 and mu > 0")
        if not 0.0 < self.p_nonempty <= 1.0:
            raise ConfigError(f"p_nonempty must lie in (0, 1], got {self.p_nonempty}")


PAIRINGS = ("strongest-weakest", "adjacent", "random")


@dataclass(frozen=True)
class MultiUserConfig:
    """``served_users`` strongest of ``total_users``, NOMA within pairs, TDMA across pairs."""

    total_users: int = 12
    served_users: int = 6
    pairing: str = "strongest-weakest"
    per_pair_alphas: tuple | None = None
    thetas: tuple | float = 0.01

    def __post_init__(self):
        if self.served_users < 2 or self.served_users % 2:
            raise ConfigError(f"served_users must be a positive even number, got {self.served_users}")
        if self.served_users > self.total_users:
            raise ConfigError("served_users cannot exceed total_users")
        if self.pairing not in PAIRINGS:
            raise ConfigError(f"unknown pairing {self.pairing!r}; choose from {PAIRINGS}")
        if not isinstance(self.thetas, (int, float)) and len(self.thetas) != self.served_users:
            raise ConfigError("need one theta per served user")

    @property
    def num_pairs(self) -> int:
        return self.served_users // 2

    def theta_of(self, rank: int) -> float:
        if isinstance(self.thetas, (int, float)):
            return float(self.thetas)
        return float(self.thetas[rank - 1])


@dataclass(frozen=True)
class McConfig:
    num_samples: int = 100_000
    master_seed: int = 0
    stream: tuple = ()
    block_size: int = 1 << 16
    workers: int = 1
    sampler: str = "plain"

    def __post_init__(self):
        if self.num_samples < 1000:
            raise ConfigError(f"num_samples must be at least 1000, got {self.num_samples}")
        if self.sampler not in ("plain", "tilted"):
            raise ConfigError(f"sampler must be 'plain' or 'tilted', got {self.sampler!r}")


@dataclass(frozen=True)
class SeriesConfig:
    tail_rel_tol: float = 1e-12
    max_terms: int = 500


@dataclass(frozen=True)
class UserRole:
    """How one user's rate depends on the block's gains.

    ``decoding`` is ``"sic"`` (NOMA strong, SNR alpha1*g), ``"interfered"``
    (NOMA weak, SINR alpha2*g/(alpha1*g + 1)) or ``"orthogonal"`` (SNR g).
    With random pairing ``strong_prob`` is the chance this rank is the
    stronger member of its pair; ``decoding`` is then ignored.
    """

    decoding: str
    order: OrderStatSpec
    share: float = 1.0
    strong_prob: float | None = None

    @property
    def scheme(self) -> str:
        return "oma" if self.decoding == "orthogonal" else "noma"


def role_of(user: str) -> UserRole:
    """Two-user roles by name."""
    table = {
        "noma_strong": UserRole("sic", channel.STRONG, 1.0),
        "noma_weak": UserRole("interfered", channel.WEAK, 1.0),
        "oma_strong": UserRole("orthogonal", channel.STRONG, 0.5),
        "oma_weak": UserRole("orthogonal", channel.WEAK, 0.5),
    }
    try:
        return table[user.replace("-", "_")]
    except KeyError:
        raise ConfigError(f"unknown user {user!r}; choose from {USERS}") from None


def _check_theta_n(theta, link):
    tn = theta * link.blocklength_n
    if not (math.isfinite(tn) and tn > 0):
        raise DomainError(f"theta * n = {tn} is not a usable exponent")
    return tn


def _ec_from_mean(mean_kernel, theta_n):
    if not mean_kernel > 0:
        raise AssertionError(f"kernel mean must be positive, got {mean_kernel}")
    return -math.log(mean_kernel) / theta_n


def _role_rates(role: UserRole, gains, link: LinkConfig, qinv: float, approx_dispersion=False,
                clamp=False, strong=None):
    """Rate of ``role`` for gains; ``strong`` overrides the decoding per sample (random pairing)."""
    n = link.blocklength_n
    if role.decoding == "orthogonal":
        return fbl_rate(gains, n, qinv, role.share, approx_dispersion, clamp)
    r_sic = fbl_rate(strong_snr_values(gains, link.alpha1), n, qinv, role.share, approx_dispersion, clamp)
    if strong is None and role.decoding == "sic":
        return r_sic
    r_int = fbl_rate(weak_sinr_values(gains, link.alpha1, link.alpha2), n, qinv, role.share,
                     approx_dispersion, clamp)
    if strong is None:
        return r_int
    return np.where(strong, r_sic, r_int)


# --------------------------------------------------------------------------
# Monte-Carlo


def _lomax_proposal(role, link, theta_n):
    """Scale and shape of the heavy-tailed proposal used by the ``tilted`` sampler.

    Past the decoding-SNR scale c = 1/(coef rho) the integrand f * exp(-theta n r)
    falls like x^(m - kappa), with m the power of x in the density near 0 and
    kappa = theta n share / ln 2.  A Lomax tail x^-(1 + a) with a <= kappa - 1 - m
    is at least as heavy, so the weights stay balanced across the whole range.
    """
    coef = link.alpha1 if role.decoding != "orthogonal" else 1.0
    kappa = theta_n * role.share / LN2
    m = role.order.num_users - role.order.index_i
    return 1.0 / (coef * link.rho), min(2.0, max(0.5, kappa - 1.0 - m))


def _mc_block(role, link, theta_n, qinv, seed_key, size, clamp, strong_fn, sampler):
    """Sums of the weighted kernel part w*exp(-theta n r), its square, and w*r.

    ``tilted`` draws half the samples from a Lomax law spread over the deep-fade
    range where the kernel is large and reweights by the defensive mixture
    f/(f/2 + q/2) <= 2, which keeps the estimator unbiased and bounded.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_key)))
    k, i = role.order.num_users, role.order.index_i
    x = channel.sample_ordered_gain_matrix(rng, 1.0, size, k)[:, i - 1]
    w = 1.0
    if sampler == "tilted":
        c, a = _lomax_proposal(role, link, theta_n)
        if c < 0.1:
            pick = rng.random(size) < 0.5
            x = np.where(pick, c * rng.pareto(a, size), x)
            f = _scaled_density(role.order)(x)
            q = a / c * (1.0 + x / c) ** (-(a + 1.0))
            w = f / (0.5 * f + 0.5 * q)
    strong = strong_fn(rng, size) if strong_fn is not None else None
    r = _role_rates(role, link.rho * x, link, qinv, clamp=clamp, strong=strong)
    part = w * np.exp(-theta_n * r)
    return math.fsum(part), math.fsum(part * part), math.fsum(w * r)


def _random_pairing_strong(rank, served):
    def draw(rng, size):
        perms = rng.permuted(np.tile(np.arange(served), (size, 1)), axis=1)
        pos = np.argmax(perms == rank - 1, axis=1)
        partner = perms[np.arange(size), pos ^ 1]
        return partner > rank - 1
    return draw


def ec_role_monte_carlo(role: UserRole, link: LinkConfig, theta: float, mc: McConfig = McConfig(),
                        clamp: bool = False, served_users: int | None = None) -> EcEstimate:
    theta_n = _check_theta_n(theta, link)
    if link.epsilon == 1.0:
        return EcEstimate(0.0, "monte_carlo", 0.0, mc.num_samples, "eps=1")
    qinv = link_qinv(link)
    strong_fn = None
    if role.strong_prob is not None:
        strong_fn = _random_pairing_strong(role.order.index_i, served_users)

    sizes = []
    left = mc.num_samples
    while left > 0:
        sizes.append(min(mc.block_size, left))
        left -= sizes[-1]
    keys = [[int(mc.master_seed), *map(int, mc.stream), b] for b in range(len(sizes))]

    def run(b):
        return _mc_block(role, link, theta_n, qinv, keys[b], sizes[b], clamp, strong_fn, mc.sampler)

    if mc.workers > 1 and len(sizes) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(mc.workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]

    # fsum is correctly rounded, so the reduction does not depend on block order
    n = mc.num_samples
    eps = link.epsilon
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean_part = s1 / n
    var = max(s2 / n - mean_part * mean_part, 0.0) * n / (n - 1)
    mean = eps + (1.0 - eps) * mean_part
    value = _ec_from_mean(mean, theta_n)
    # delta method: sd(ln m) = sd(m)/m
    std_error = (1.0 - eps) * math.sqrt(var / n) / (mean * theta_n)
    mean_rate = math.fsum(p[2] for p in parts) / n
    return EcEstimate(value, "monte_carlo", std_error, n, f"mean_rate={mean_rate:.12g}")


def ec_monte_carlo(user: str, link: LinkConfig, qos: QosConfig, mc: McConfig = McConfig(),
                   clamp: bool = False) -> EcEstimate:
    return ec_role_monte_carlo(role_of(user), link, qos.theta, mc, clamp)


# --------------------------------------------------------------------------
# quadrature


def _scaled_density(order: OrderStatSpec):
    """rho * f(rho x): order-statistic density in the unit-mean variable x."""
    k, i = order.num_users, order.index_i
    xi = k * math.comb(k - 1, i - 1)

    def f(x):
        return xi * np.exp(-i * x) * (-np.expm1(-x)) ** (k - i)
    return f


def _kernel_scale(role, link, theta_n):
    """Unit-mean gain below which exp(-theta n r) changes fastest.

    The decoding SNR crosses 1 near x = 1/(c rho); a steep power law
    (1 + c rho x)^(-theta n s / ln 2) narrows that further.
    """
    coef = link.alpha1 if role.decoding != "orthogonal" else 1.0
    steep = max(1.0, theta_n * role.share / LN2)
    return 1.0 / (coef * link.rho * steep)


def _kernel_breakpoints(role, link, theta_n):
    x0 = _kernel_scale(role, link, theta_n)
    pts = [0.0]
    x = x0 * 1e-3
    while x < 40.0:
        pts.append(x)
        x *= 10.0
    pts.append(40.0)
    return pts


def _quad_integral(role, link, theta_n, qinv, approx_dispersion, policy, decoding=None):
    """J = E[exp(-theta n r)] over the ordered density; returns (value, n_evals)."""
    if decoding is not None:
        role = replace(role, decoding=decoding, strong_prob=None)
    dens = _scaled_density(role.order)
    rho = link.rho

    def integrand(x):
        r = _role_rates(role, rho * x, link, qinv, approx_dispersion)
        return math.exp(-theta_n * r) * dens(x)

    pts = _kernel_breakpoints(role, link, theta_n)
    pieces = []
    evals = 0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(pts[:-1], pts[1:]):
                val, _, info = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=policy.rel_tol * 0.1,
                                              limit=policy.max_subdivisions, full_output=True)
                pieces.append(val)
                evals += info["neval"]
            val, _, info = integrate.quad(integrand, pts[-1], np.inf, epsabs=0.0, epsrel=policy.rel_tol,
                                          limit=policy.max_subdivisions, full_output=True)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature did not converge: {exc}",
                                   estimate=math.fsum(pieces)) from None
    pieces.append(val)
    evals += info["neval"]
    return math.fsum(pieces), evals


def ec_role_quadrature(role: UserRole, link: LinkConfig, theta: float, approx_dispersion: bool = False,
                       policy: AccuracyPolicy = DEFAULT_POLICY) -> EcEstimate:
    theta_n = _check_theta_n(theta, link)
    if link.epsilon == 1.0:
        return EcEstimate(0.0, "quadrature", diag="eps=1")
    qinv = link_qinv(link)
    if role.strong_prob is None:
        j, evals = _quad_integral(role, link, theta_n, qinv, approx_dispersion, policy)
    else:
        # the pairing is independent of the gains, so the kernel mean mixes linearly
        js, e1 = _quad_integral(role, link, theta_n, qinv, approx_dispersion, policy, "sic")
        jw, e2 = _quad_integral(role, link, theta_n, qinv, approx_dispersion, policy, "interfered")
        j, evals = role.strong_prob * js + (1.0 - role.strong_prob) * jw, e1 + e2
    value = _ec_from_mean(link.epsilon + (1.0 - link.epsilon) * j, theta_n)
    tag = "sqrtV=1" if approx_dispersion else "exactV"
    return EcEstimate(value, "quadrature", 0.0, evals, tag)


def ec_quadrature(user: str, link: LinkConfig, qos: QosConfig, approx_dispersion: bool = False,
                  policy: AccuracyPolicy = DEFAULT_POLICY) -> EcEstimate:
    return ec_role_quadrature(role_of(user), link, qos.theta, approx_dispersion, policy)


# --------------------------------------------------------------------------
# closed forms


def _closed_power_kernel(role, link, theta, policy, z_override=None):
    """Kernel mean when the rate is share*(log2(1 + c g) - Qinv/sqrt(n)).

    With t = c*g every exponential piece of the order-statistic density gives
    one Tricomi function:  J = e^{psi s}/(c rho) * sum_j w_j H(1, 2 + 2 Upsilon s, c_j/(c rho)).
    """
    d = QosDerived.from_configs(QosConfig(theta), link)
    s = role.share
    c = link.alpha1 if role.decoding == "sic" else 1.0
    b = 2.0 + 2.0 * d.upsilon * s
    weights, rates = role.order.exp_mixture()
    scale = c * link.rho
    total = 0.0
    for w, cj in zip(weights, rates):
        z = cj / scale if z_override is None else z_override
        total += w * tricomi_u(1.0, b, z, policy)
    return math.exp(d.psi * s) / scale * total


class _TricomiTerms:
    """G_k(y) = int_0^inf (1+u)^{-k} e^{-y u} du = U(1, 2-k, y), k = 1, 2, ...

    Integration by parts gives G_k = (1 - y G_{k-1}) / (k-1).  Run forward the
    recurrence multiplies errors by y/(k-1), run backward by (k-1)/y, so it is
    anchored at k0 = ceil(y) with one quadrature value and used backward below
    k0 and forward above it.  The closed finite sum for G_k alternates and
    loses everything once y exceeds a few units.
    """

    def __init__(self, y: float, policy: AccuracyPolicy = DEFAULT_POLICY):
        self.y = y
        k0 = max(1, math.ceil(y))
        g = scaled_neg_ei(y) if k0 == 1 else tricomi_u(1.0, 2.0 - k0, y, policy)
        values = [g]
        for k in range(k0, 1, -1):
            g = (1.0 - (k - 1) * g) / y
            values.append(g)
        self.values = values[::-1]  # values[k - 1] = G_k

    def __call__(self, k: int) -> float:
        while len(self.values) < k:
            m = len(self.values) + 1
            self.values.append((1.0 - self.y * self.values[-1]) / (m - 1))
        return self.values[k - 1]


def tricomi_series_term(k: int, y: float, policy: AccuracyPolicy = DEFAULT_POLICY) -> float:
    """G_k(y) = int_0^inf (1+u)^{-k} e^{-y u} du = U(1, 2-k, y) for k >= 1."""
    if k < 1 or y <= 0:
        raise DomainError(f"need k >= 1 and y > 0, got k={k}, y={y}")
    return _TricomiTerms(y, policy)(k)


def weak_noma_series(a1: float, exponent: float, z: float, series: SeriesConfig = SeriesConfig(),
                     policy: AccuracyPolicy = DEFAULT_POLICY):
    """int_0^inf ((1+g)/(1+a1 g))^{exponent} e^{-z g} dg  divided by a1^{-exponent}.

    Expands (1 + (a1-1)/(1 + a1 g))^{exponent} binomially.  Returns
    ``(value, terms)`` where ``terms`` lists the k >= 1 contributions.
    """
    if not 0.0 < a1 < 1.0:
        raise DomainError(f"the binomial expansion needs 0 < alpha1 < 1, got {a1}")
    y = z / a1
    g = _TricomiTerms(y, policy)
    head = tricomi_u(1.0, 2.0, z, policy)  # = 1/z
    coef = 1.0
    terms = []
    partial = head
    prev = 0.0
    for k in range(1, series.max_terms + 1):
        # C(exponent, k) (a1 - 1)^k, built by the same recurrence as gen_binomial
        coef = coef * (exponent - k + 1) / k * (a1 - 1.0)
        t = coef * g(k) / a1
        terms.append(t)
        partial += t
        ratio = abs(t / prev) if prev else math.inf
        # geometric estimate of everything after this term
        if ratio < 1.0 and abs(t) * ratio / (1.0 - ratio) < series.tail_rel_tol * abs(partial):
            return partial, terms
        prev = t
    raise ConvergenceError(f"weak-user series not converged after {series.max_terms} terms",
                           estimate=partial, count=len(terms))


def _closed_weak_noma_kernel(role, link, theta, series, policy):
    d = QosDerived.from_configs(QosConfig(theta), link)
    s = role.share
    exponent = 2.0 * d.upsilon * s
    a1 = link.alpha1
    weights, rates = role.order.exp_mixture()
    total = 0.0
    n_terms = 0
    for w, cj in zip(weights, rates):
        val, terms = weak_noma_series(a1, exponent, cj / link.rho, series, policy)
        total += w * val
        n_terms = max(n_terms, len(terms))
    return math.exp(d.psi * s) * a1 ** (-exponent) / link.rho * total, n_terms


def ec_role_closed(role: UserRole, link: LinkConfig, theta: float, series: SeriesConfig = SeriesConfig(),
                   policy: AccuracyPolicy = DEFAULT_POLICY, weak_oma_rate: float = 2.0) -> EcEstimate:
    theta_n = _check_theta_n(theta, link)
    if link.epsilon == 1.0:
        return EcEstimate(0.0, "closed_form", diag="eps=1")
    if role.order.num_users != 2 or role.strong_prob is not None:
        raise DomainError("closed forms cover the two-user order statistics only")
    diag = ""
    n_terms = 0
    if role.decoding == "interfered":
        j, n_terms = _closed_weak_noma_kernel(role, link, theta, series, policy)
        diag = f"series_terms={n_terms}"
    else:
        z_override = None
        if weak_oma_rate != 2.0 and role.decoding == "orthogonal" and role.order.index_i == 2:
            z_override = weak_oma_rate / link.rho
            diag = f"weak_oma_z={weak_oma_rate:g}/rho"
        j = _closed_power_kernel(role, link, theta, policy, z_override)
    value = _ec_from_mean(link.epsilon + (1.0 - link.epsilon) * j, theta_n)
    return EcEstimate(value, "closed_form", 0.0, n_terms, diag)


def ec_closed_noma_strong(link: LinkConfig, qos: QosConfig, policy: AccuracyPolicy = DEFAULT_POLICY) -> EcEstimate:
    return ec_role_closed(role_of("noma_strong"), link, qos.theta, policy=policy)


def ec_closed_noma_weak(link: LinkConfig, qos: QosConfig, series: SeriesConfig = SeriesConfig(),
                        policy: AccuracyPolicy = DEFAULT_POLICY) -> EcEstimate:
    if not link.alpha1 < 1.0:
        raise DomainError("the binomial expansion needs alpha1 < 1")
    return ec_role_closed(role_of("noma_weak"), link, qos.theta, series, policy)


def ec_closed_oma(user: str, link: LinkConfig, qos: QosConfig, weak_rate: float = 2.0,
                  policy: AccuracyPolicy = DEFAULT_POLICY) -> EcEstimate:
    """``user`` is ``"strong"`` or ``"weak"``.

    The weak user's gain density is (2/rho) e^{-2g/rho}, so its Tricomi argument
    is 2/rho.  ``weak_rate`` replaces the 2, e.g. 1.0 to compare the 1/rho variant.
    """
    name = user if user.startswith("oma") else f"oma_{user}"
    return ec_role_closed(role_of(name), link, qos.theta, policy=policy, weak_oma_rate=weak_rate)


# --------------------------------------------------------------------------
# dispatch and totals


def ec_role(role: UserRole, link: LinkConfig, theta: float, method: str, mc: McConfig = McConfig(),
            policy: AccuracyPolicy = DEFAULT_POLICY, series: SeriesConfig = SeriesConfig(),
            approx_dispersion: bool | None = None, clamp: bool = False,
            served_users: int | None = None) -> EcEstimate:
    """Evaluate one role with the named method.

    ``approx_dispersion`` defaults to exact V for quadrature, matching the
    Monte-Carlo definition; the closed forms always use sqrt(V) = 1.
    """
    method = method.replace("-", "_")
    if method == "monte_carlo":
        return ec_role_monte_carlo(role, link, theta, mc, clamp, served_users)
    if method == "quadrature":
        return ec_role_quadrature(role, link, theta, bool(approx_dispersion), policy)
    if method == "closed_form":
        return ec_role_closed(role, link, theta, series, policy)
    raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")


def ec(user: str, link: LinkConfig, qos: QosConfig, method: str, **kwargs) -> EcEstimate:
    return ec_role(role_of(user), link, qos.theta, method, **kwargs)


def _as_pair(qos_pair):
    if isinstance(qos_pair, QosConfig):
        return qos_pair, qos_pair
    return tuple(qos_pair)


def _sum_estimates(roles, link, theta_of, method, mc=McConfig(), served_users=None, **kwargs):
    """Sum per-user estimates.  Each rank gets its own Monte-Carlo stream, so
    the users' errors are independent and add in quadrature."""
    values, variances, diags = [], [], []
    for rank, role in roles:
        sub = replace(mc, stream=(*mc.stream, rank))
        est = ec_role(role, link, theta_of(rank), method, mc=sub, served_users=served_users, **kwargs)
        values.append(est.value)
        variances.append(est.std_error ** 2)
        if est.diag:
            diags.append(f"r{rank}:{est.diag}")
    total = 0.0
    for v in values:
        total += v
    return EcEstimate(total, method.replace("-", "_"), math.sqrt(math.fsum(variances)), 0, ";".join(diags))


def total_ec_estimate(method: str, link: LinkConfig, qos_pair, scheme: str = "noma", **kwargs) -> EcEstimate:
    q1, q2 = _as_pair(qos_pair)
    roles = [(1, role_of(f"{scheme}_strong")), (2, role_of(f"{scheme}_weak"))]
    thetas = {1: q1.theta, 2: q2.theta}
    return _sum_estimates(roles, link, thetas.__getitem__, method, **kwargs)


def total_ec(method: str, link: LinkConfig, qos_pair, scheme: str = "noma", **kwargs) -> float:
    """C_strong + C_weak for one two-user scheme; ``qos_pair`` may be one QosConfig."""
    return total_ec_estimate(method, link, qos_pair, scheme, **kwargs).value


def multiuser_roles(mu: MultiUserConfig, scheme: str = "noma"):
    """``[(rank, role)]`` for every served user, strongest first."""
    k, s = mu.total_users, mu.served_users
    if scheme == "oma":
        return [(r, UserRole("orthogonal", OrderStatSpec(r, k), 1.0 / s)) for r in range(1, s + 1)]
    share = 1.0 / mu.num_pairs
    if mu.pairing == "random":
        return [(r, UserRole("sic", OrderStatSpec(r, k), share, (s - r) / (s - 1)))
                for r in range(1, s + 1)]
    if mu.pairing == "adjacent":
        pairs = [(2 * p + 1, 2 * p + 2) for p in range(mu.num_pairs)]
    else:
        pairs = [(p + 1, s - p) for p in range(mu.num_pairs)]
    roles = []
    for hi, lo in pairs:
        roles.append((hi, UserRole("sic", OrderStatSpec(hi, k), share)))
        roles.append((lo, UserRole("interfered", OrderStatSpec(lo, k), share)))
    return sorted(roles, key=lambda item: item[0])


def multiuser_total_estimate(mu_cfg: MultiUserConfig, link: LinkConfig, method: str, scheme: str = "noma",
                             **kwargs) -> EcEstimate:
    if mu_cfg.per_pair_alphas is not None:
        a1, a2 = mu_cfg.per_pair_alphas
        link = replace(link, alpha1=a1, alpha2=a2)
    return _sum_estimates(multiuser_roles(mu_cfg, scheme), link, mu_cfg.theta_of, method,
                          served_users=mu_cfg.served_users, **kwargs)


def multiuser_total_ec(mu_cfg: MultiUserConfig, link: LinkConfig, method: str, scheme: str = "noma",
                       **kwargs) -> float:
    """Sum of every served user's EC under pairwise NOMA + TDMA (or pure TDMA for ``oma``).

    Pairs split the slot equally; an OMA user gets 1/served_users of it.
    """
    return multiuser_total_estimate(mu_cfg, link, method, scheme, **kwargs).value


# --------------------------------------------------------------------------
# delay


def delay_violation_prob(dm: DelayModel, qos: QosConfig) -> float:
    """Pr{D > D_max} ~ Pr{q > 0} exp(-theta mu D_max)."""
    p = dm.p_nonempty * math.exp(-qos.theta * dm.mu * dm.d_max)
    return min(max(p, 0.0), 1.0)
