"""Lattice four-fermion model with a Wilson Dirac operator.

Builds the massive covariance S = (D + m_f)^-1, rewrites the quartic
density and source couplings on the unit-covariance side (psi -> S psi), and
exposes the truncated two-point function read off a resummed log series,
together with exponential decay fits of correlations and of S itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .berezin import LogSeries
from .coeffsys import CoefficientSystem
from .errors import CapacityError, ConfigError
from .generators import Family, GeneratorUniverse, Site, eta, psi
from .weights import TorusMetric, WeightSystem, coeff_norm


@dataclass(frozen=True)
class LatticeSpec:
    """Finite periodic lattice with spinor and flavor structure."""

    d: int = 2
    L: int = 2
    N: int = 1

    def __post_init__(self):
        if self.d < 2:
            raise ConfigError("dimension must be at least 2")
        if self.L < 2:
            raise ConfigError("side length must be at least 2")
        if self.N < 1:
            raise ConfigError("flavor count must be at least 1")

    @property
    def spinor_dim(self) -> int:
        return 2 ** (self.d // 2)

    @property
    def extents(self) -> tuple[int, ...]:
        return (self.L,) * self.d

    @property
    def sites(self) -> tuple[Site, ...]:
        return tuple(itertools.product(range(self.L), repeat=self.d))

    @property
    def n_sites(self) -> int:
        return self.L ** self.d

    @property
    def metric(self) -> TorusMetric:
        return TorusMetric(self.extents)


@lru_cache(maxsize=8)
def gamma_matrices(d: int) -> tuple[np.ndarray, ...]:
    """Hermitian gamma matrices with {g_mu, g_nu} = 2 delta I, size 2^(d//2).

    d=2,3 use the Pauli set; d=4,5 the standard tensor construction
    (sigma1 x sigma_i and sigma2 x 1).
    """
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    if d == 2:
        return (s1, s2)
    if d == 3:
        return (s1, s2, s3)
    if d in (4, 5):
        gams = tuple(np.kron(s1, s) for s in (s1, s2, s3)) + (np.kron(s2, eye),)
        return gams[:d]
    raise ConfigError(f"no gamma construction wired for d={d}")


def dirac_matrix(spec: LatticeSpec, m_f: float) -> np.ndarray:
    """Dense matrix of D + m_f with D = gamma.grad - Laplacian/2.

    Symmetric first differences for the gradient, the 2d+1 point stencil
    for the Laplacian, periodic wrap.  Index layout is site-major with the
    spinor inside; flavors are an exact copy and stay implicit.
    """
    if m_f <= 0:
        raise ConfigError("fermion mass must be positive")
    gams = gamma_matrices(spec.d)
    sd = spec.spinor_dim
    sites = spec.sites
    index = {s: i for i, s in enumerate(sites)}
    n = len(sites) * sd
    out = np.zeros((n, n), dtype=complex)
    eye = np.eye(sd, dtype=complex)
    for s in sites:
        row = index[s] * sd
        out[row:row + sd, row:row + sd] += (m_f + spec.d) * eye
        for mu in range(spec.d):
            step = list(s)
            step[mu] = (step[mu] + 1) % spec.L
            fwd = index[tuple(step)] * sd
            step[mu] = (s[mu] - 1) % spec.L
            bwd = index[tuple(step)] * sd
            out[row:row + sd, fwd:fwd + sd] += (gams[mu] - eye) / 2
            out[row:row + sd, bwd:bwd + sd] += -(gams[mu] + eye) / 2
    return out


@dataclass(frozen=True)
class Covariance:
    """Inverse of D + m_f on the (site x spinor) index, flavor-diagonal."""

    spec: LatticeSpec
    m_f: float
    matrix: np.ndarray
    log_det: float

    def entry(self, x: Site, y: Site, alpha: int, beta: int) -> complex:
        index = {s: i for i, s in enumerate(self.spec.sites)}
        sd = self.spec.spinor_dim
        return complex(self.matrix[index[x] * sd + alpha, index[y] * sd + beta])

    def block(self, x: Site, y: Site) -> np.ndarray:
        index = {s: i for i, s in enumerate(self.spec.sites)}
        sd = self.spec.spinor_dim
        i, j = index[x] * sd, index[y] * sd
        return self.matrix[i:i + sd, j:j + sd]


def covariance(spec: LatticeSpec, m_f: float) -> Covariance:
    op = dirac_matrix(spec, m_f)
    sign, log_det = np.linalg.slogdet(op)
    if sign == 0:
        raise ConfigError("Dirac operator is singular at this mass")
    matrix = np.linalg.inv(op)
    return Covariance(spec=spec, m_f=m_f, matrix=matrix, log_det=float(log_det))


def covariance_decay_table(cov: Covariance) -> list[tuple[float, float]]:
    """Largest |S block entry| per torus distance, sorted by distance."""
    spec = cov.spec
    metric = spec.metric
    origin = spec.sites[0]
    best: dict[float, float] = {}
    for site in spec.sites:
        r = metric.distance(origin, site)
        peak = float(np.max(np.abs(cov.block(origin, site))))
        best[r] = max(best.get(r, 0.0), peak)
    return sorted(best.items())


# ------------------------------------------------------------------ kernels


def universe_for(spec: LatticeSpec,
                 source_sites: tuple[Site, ...] | None = None) -> GeneratorUniverse:
    """Generator universe with every field mode and sources where requested.

    source_sites None means sources at every site; capacity errors surface
    from the universe when a request does not fit the bit budget.
    """
    psi_modes = [
        (s, alpha, a)
        for s in spec.sites
        for alpha in range(spec.spinor_dim)
        for a in range(spec.N)
    ]
    if source_sites is None:
        source_sites = spec.sites
    eta_modes = [
        (s, alpha, a)
        for s in source_sites
        for alpha in range(spec.spinor_dim)
        for a in range(spec.N)
    ]
    return GeneratorUniverse(psi_modes, eta_modes)


def quartic_kernel(spec: LatticeSpec, cov: Covariance, g: float) -> CoefficientSystem:
    """Transformed quartic density: entries at (x, x, y, y') carrying
    -g^2 S(x,y) S(x,y') over all spinor and flavor assignments."""
    system = CoefficientSystem()
    if g == 0:
        return system
    sd = spec.spinor_dim
    sites = spec.sites
    blocks = {
        (x, y): cov.block(x, y) for x in sites for y in sites
    }
    gg = g * g
    for x in sites:
        for y in sites:
            sxy = blocks[(x, y)]
            for yp in sites:
                sxyp = blocks[(x, yp)]
                for alpha, beta, alphap, betap in itertools.product(range(sd), repeat=4):
                    value = -gg * sxy[alpha, beta] * sxyp[alphap, betap]
                    if value == 0:
                        continue
                    for a in range(spec.N):
                        for ap in range(spec.N):
                            system.add(
                                (
                                    psi(x, alpha, a, bar=True),
                                    psi(x, alphap, ap, bar=True),
                                    psi(y, beta, a),
                                    psi(yp, betap, ap),
                                ),
                                (),
                                value,
                            )
    return system


def source_kernels(spec: LatticeSpec, cov: Covariance, g: float,
                   source_sites: tuple[Site, ...] | None = None,
                   ) -> tuple[CoefficientSystem, CoefficientSystem]:
    """The two source couplings (psibar J, Jbar S psi) as stored kernels.

    Entries are stored psi-factor-first; a Jbar eta standing left of psi in
    the written coupling therefore enters with a flipped sign so that the
    stored orientation reproduces the same element.
    """
    local = CoefficientSystem()
    smeared = CoefficientSystem()
    if g == 0:
        return local, smeared
    if source_sites is None:
        source_sites = spec.sites
    sd = spec.spinor_dim
    for x in source_sites:
        for alpha in range(sd):
            for a in range(spec.N):
                local.add((psi(x, alpha, a, bar=True),), (eta(x, alpha, a),), g)
    for x in source_sites:
        for y in spec.sites:
            block = cov.block(x, y)
            for alpha in range(sd):
                for beta in range(sd):
                    value = g * block[alpha, beta]
                    if value == 0:
                        continue
                    for a in range(spec.N):
                        # stored as psi eta: Jbar psi = -(psi Jbar)
                        smeared.add(
                            (psi(y, beta, a),),
                            (eta(x, alpha, a, bar=True),),
                            -value,
                        )
    return local, smeared


def build_v1(spec: LatticeSpec, cov: Covariance, g: float,
             source_sites: tuple[Site, ...] | None = None,
             quartic: bool = True) -> CoefficientSystem:
    """Full transformed interaction; feed its negation to the expansion."""
    local, smeared = source_kernels(spec, cov, g, source_sites)
    system = local.scaled(-1) + smeared.scaled(-1)
    if quartic:
        system = system + quartic_kernel(spec, cov, g)
    return system


def model_norms(spec: LatticeSpec, cov: Covariance, g: float,
                kappa: float, h1: float = 4.0, h2: float = 1.0,
                source_sites: tuple[Site, ...] | None = None) -> dict:
    """Weighted kernel norms of the interaction pieces and the run gate."""
    if kappa >= cov.m_f:
        raise ConfigError("report mass must stay below the fermion mass")
    weights = WeightSystem(kappa=kappa, h1=h1, h2=h2, metric=spec.metric)
    local, smeared = source_kernels(spec, cov, g, source_sites)
    quartic = quartic_kernel(spec, cov, g)
    v_norm = coeff_norm(quartic, weights)
    local_norm = coeff_norm(local, weights)
    smeared_norm = coeff_norm(smeared, weights)
    v1_norm = coeff_norm(build_v1(spec, cov, g, source_sites), weights)
    return {
        "v_norm": v_norm,
        "source_local_norm": local_norm,
        "source_smeared_norm": smeared_norm,
        "v1_norm": v1_norm,
        "v1_triangle_bound": v_norm + local_norm + smeared_norm,
        "gate_sixteenth": v1_norm < 1.0 / 16.0,
    }


# ------------------------------------------------------------- correlations


def truncated_two_point(series: LogSeries, g: float, y1: Site, y2: Site,
                        alpha: int, beta: int, a: int = 0, b: int = 0) -> complex:
    """Connected <psibar_{beta b}(y1) psi_{alpha a}(y2)> from the log series.

    Reads the quadratic source coefficient bracket; the slot order below is
    the one that makes the free theory return S_{alpha beta}(y1, y2)
    exactly.  Values vanish unless the sources were kept in the series
    universe.
    """
    if g <= 0:
        raise ConfigError("coupling must be positive to normalize")
    bracket = series.antisym_eval(
        eta(y2, beta, b), eta(y1, alpha, a, bar=True)
    )
    return bracket / (g * g)


def correlation_rows(series: LogSeries, g: float, spec: LatticeSpec,
                     origin: Site | None = None) -> list[dict]:
    """Truncated two-point table from one anchor site to every site.

    One row per (site, spinor pair, flavor); distances use the torus
    metric.  Only flavor-diagonal channels appear, the off-diagonal ones
    vanish identically for this action.
    """
    if origin is None:
        origin = spec.sites[0]
    metric = spec.metric
    rows = []
    eta_sites = {gidx.site for gidx in series.universe.generators()
                 if gidx.family == Family.ETA}
    for site in spec.sites:
        if site not in eta_sites or origin not in eta_sites:
            continue
        r = metric.distance(origin, site)
        for alpha in range(spec.spinor_dim):
            for beta in range(spec.spinor_dim):
                for flavor in range(spec.N):
                    value = truncated_two_point(
                        series, g, origin, site, alpha, beta, flavor, flavor
                    )
                    rows.append(
                        {
                            "distance": r,
                            "alpha": alpha,
                            "beta": beta,
                            "flavor": flavor,
                            "re": value.real,
                            "im": value.imag,
                            "abs": abs(value),
                        }
                    )
    rows.sort(key=lambda row: (row["distance"], row["alpha"], row["beta"], row["flavor"]))
    return rows


# -------------------------------------------------------------------- fits


@dataclass(frozen=True)
class FitResult:
    c: float
    kappa: float
    r_squared: float
    decaying: bool

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "kappa": self.kappa,
            "r_squared": self.r_squared,
            "decaying": self.decaying,
        }


def decay_fit(samples: list[tuple[float, float]], floor: float = 1e-14) -> FitResult:
    """Least squares of log magnitude against distance.

    Zero magnitudes are dropped; needs three usable points.  kappa is the
    negated slope, c the exponentiated intercept, and the decaying flag asks
    for a clearly positive rate.
    """
    usable = [(r, m) for r, m in samples if m > floor]
    if len(usable) < 3:
        raise ValueError("need at least three positive samples to fit decay")
    xs = np.array([r for r, _ in usable], dtype=float)
    ys = np.log(np.array([m for _, m in usable], dtype=float))
    slope, intercept = np.polyfit(xs, ys, 1)
    predicted = slope * xs + intercept
    ss_res = float(np.sum((ys - predicted) ** 2))
    ss_tot = float(np.sum((ys - np.mean(ys)) ** 2))
    if ss_tot < 1e-30:
        r_squared = 1.0 if ss_res < 1e-30 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    kappa = float(-slope)
    return FitResult(
        c=float(math.exp(intercept)),
        kappa=kappa,
        r_squared=r_squared,
        decaying=kappa > 1e-9,
    )


def _image_distances(site: Site, L: int) -> list[float]:
    """Euclidean lengths of the displacement and its one-shell wrap images."""
    out = []
    for shifts in itertools.product((-1, 0, 1), repeat=len(site)):
        out.append(math.sqrt(sum((s - n * L) ** 2 for s, n in zip(site, shifts))))
    return sorted(out)


def torus_decay_fit(samples: list[tuple[Site, float]], L: int,
                    floor: float = 1e-14) -> FitResult:
    """Exponential decay rate on a periodic box, wrap images summed.

    On small tori the naive distance fit absorbs the wrap multiplicity
    (every displacement is realized along several images) into the rate.
    Fitting magnitude against ``c * sum_images exp(-kappa |r_image|)``
    removes that finite-size artifact, so rates from different box sizes
    become comparable.  Least squares on the log, one bounded scalar
    minimization for kappa.
    """
    from scipy.optimize import minimize_scalar

    usable = [(site, m) for site, m in samples if m > floor]
    if len(usable) < 3:
        raise ValueError("need at least three positive samples to fit decay")
    logs = np.array([math.log(m) for _, m in usable])
    images = [_image_distances(site, L) for site, _ in usable]

    def model(kappa: float) -> np.ndarray:
        return np.array(
            [math.log(sum(math.exp(-kappa * r) for r in rr)) for rr in images])

    def sse(kappa: float) -> float:
        resid = logs - model(kappa)
        return float(np.sum((resid - resid.mean()) ** 2))

    best = minimize_scalar(sse, bounds=(1e-6, 20.0), method="bounded",
                           options={"xatol": 1e-10})
    kappa = float(best.x)
    resid = logs - model(kappa)
    intercept = float(resid.mean())
    ss_res = float(np.sum((resid - intercept) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    if ss_tot < 1e-30:
        r_squared = 1.0 if ss_res < 1e-30 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return FitResult(
        c=float(math.exp(intercept)),
        kappa=kappa,
        r_squared=r_squared,
        decaying=kappa > 1e-4,
    )
