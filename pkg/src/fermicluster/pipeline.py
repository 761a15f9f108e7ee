"""Experiment orchestration: covariance, expansion, norms, correlations, fits.

Correlation runs restrict the source modes to the probed pair of sites.
Retained log-series coefficients are unchanged by that restriction (zeroing
other sources never alters a kept monomial), while the eta sector stays
small enough for exact work.  One run per representative target site gives
the distance table; the probed-sector norm of the assembled series is a
lower bound on the full-source norm, so a convergence-bound violation on
it would falsify the full statement as well.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .berezin import LogSeries, log_direct
from .clusters import ClusterOptions, ExpansionReport, assemble_b
from .coeffsys import CoefficientSystem
from .config import RunConfig
from .errors import CapacityError
from .generators import Site
from .grossneveu import (
    Covariance,
    LatticeSpec,
    build_v1,
    correlation_rows,
    covariance,
    covariance_decay_table,
    decay_fit,
    model_norms,
    torus_decay_fit,
    truncated_two_point,
    universe_for,
)
from .weights import log_norm_bound_check, logseries_norm

EXACT_MODE_SITE_LIMIT = 4


def lattice_objects(cfg: RunConfig) -> tuple[LatticeSpec, Covariance]:
    spec = LatticeSpec(d=cfg.d, L=cfg.L, N=cfg.N)
    return spec, covariance(spec, cfg.m_f)


def engine_options(cfg: RunConfig) -> ClusterOptions:
    if cfg.mode == "exact":
        return ClusterOptions(mode="exact", n_max=cfg.n_max)
    return ClusterOptions(
        mode="truncated",
        n_max=cfg.n_max,
        k_max=cfg.k_max,
        floor=cfg.floor,
        max_polymer_sites=cfg.max_diameter,
        eta_degree_cap=cfg.eta_cap,
    )


def check_exact_capacity(cfg: RunConfig, spec: LatticeSpec) -> None:
    if cfg.mode == "exact" and spec.n_sites > EXACT_MODE_SITE_LIMIT:
        raise CapacityError(
            f"exact mode handles up to {EXACT_MODE_SITE_LIMIT} sites; "
            f"got {spec.n_sites}; lower lattice.L or use run.mode = truncated")


def probe_coupling(cfg: RunConfig) -> float:
    """Coupling carried by the source terms.

    At g = 0 the sources would vanish with the interaction and leave the
    two-point function as 0/0; probing the free theory with unit sources
    yields its well-defined limit, the bare covariance.
    """
    return cfg.g if cfg.g > 0 else 1.0


def _pair_interaction(cfg: RunConfig, spec: LatticeSpec, cov: Covariance,
                      y1: Site, y2: Site):
    sources = (y1,) if y1 == y2 else (y1, y2)
    universe = universe_for(spec, sources)
    f = build_v1(spec, cov, probe_coupling(cfg), source_sites=sources,
                 quartic=cfg.g > 0).scaled(-1)
    return universe, f


def pair_series(cfg: RunConfig, spec: LatticeSpec, cov: Covariance,
                y1: Site, y2: Site) -> tuple[LogSeries, ExpansionReport]:
    """Assembled log series with sources restricted to two sites."""
    universe, f = _pair_interaction(cfg, spec, cov, y1, y2)
    return assemble_b(universe, f, engine_options(cfg))


def oracle_pair_series(cfg: RunConfig, spec: LatticeSpec, cov: Covariance,
                       y1: Site, y2: Site) -> LogSeries:
    universe, f = _pair_interaction(cfg, spec, cov, y1, y2)
    return log_direct(universe, f.to_element(universe))


def series_deviation(a: LogSeries, b: LogSeries,
                     abs_floor: float = 1e-12) -> tuple[float, float]:
    """Worst absolute and worst relative coefficient difference."""
    worst_abs = 0.0
    worst_rel = 0.0
    for mask in set(a.element.terms) | set(b.element.terms):
        va = a.element.terms.get(mask, 0j)
        vb = b.element.terms.get(mask, 0j)
        diff = abs(va - vb)
        worst_abs = max(worst_abs, diff)
        # differences below the absolute floor never count as relative error
        if diff > abs_floor:
            worst_rel = max(worst_rel, diff / max(abs(va), abs(vb)))
    return worst_abs, worst_rel


def representative_targets(spec: LatticeSpec) -> list[Site]:
    """Origin plus the first site of every distance class from the origin."""
    origin = spec.sites[0]
    seen: dict[float, Site] = {}
    for site in spec.sites:
        r = round(spec.metric.distance(origin, site), 9)
        seen.setdefault(r, site)
    return [seen[r] for r in sorted(seen)]


@dataclass
class CorrelationResult:
    rows: list[dict]
    samples: list[tuple[Site, float]]
    series_list: list[LogSeries]
    reports: list[ExpansionReport]
    oracle_worst_abs: float | None
    oracle_worst_rel: float | None


def merged_coefficients(series_list: list[LogSeries]) -> CoefficientSystem:
    """Union of per-run kernels; shared entries keep their first value."""
    out = CoefficientSystem()
    seen = set()
    for series in series_list:
        for key, value in series.coefficients():
            if key not in seen and key != ((), ()):
                seen.add(key)
                out.add(key[0], key[1], value)
    return out


def run_correlations(cfg: RunConfig, spec: LatticeSpec, cov: Covariance,
                     with_oracle: bool) -> CorrelationResult:
    origin = spec.sites[0]
    probe = probe_coupling(cfg)
    rows: list[dict] = []
    seen_rows = set()
    samples: list[tuple[Site, float]] = []
    series_list = []
    reports = []
    worst_abs = worst_rel = None
    for target in representative_targets(spec):
        series, report = pair_series(cfg, spec, cov, origin, target)
        series_list.append(series)
        reports.append(report)
        if with_oracle:
            oracle = oracle_pair_series(cfg, spec, cov, origin, target)
            da, dr = series_deviation(series, oracle)
            worst_abs = max(worst_abs or 0.0, da)
            worst_rel = max(worst_rel or 0.0, dr)
        envelope = max(
            (
                abs(truncated_two_point(series, probe, origin, target,
                                        alpha, beta, flavor, flavor))
                for alpha in range(spec.spinor_dim)
                for beta in range(spec.spinor_dim)
                for flavor in range(spec.N)
            ),
            default=0.0,
        )
        if envelope > 0.0:
            samples.append((target, envelope))
        for row in correlation_rows(series, probe, spec):
            key = (row["distance"], row["alpha"], row["beta"], row["flavor"])
            if key not in seen_rows:
                seen_rows.add(key)
                rows.append(row)
    rows.sort(key=lambda r: (r["distance"], r["alpha"], r["beta"], r["flavor"]))
    return CorrelationResult(rows, samples, series_list, reports,
                             worst_abs, worst_rel)


def correlation_fit(samples: list[tuple[Site, float]], L: int) -> dict:
    """Wrap-aware decay fit of the per-target magnitude envelope."""
    try:
        fit = torus_decay_fit(samples, L)
    except ValueError:
        return {"usable": False}
    return {"usable": True, **fit.as_dict()}


def expansion_summary(reports: list[ExpansionReport]) -> dict:
    return {
        "mode": reports[0].mode if reports else "none",
        "runs": len(reports),
        "exact": all(r.exact for r in reports),
        "polymer_count_max": max((r.polymer_count for r in reports), default=0),
        "cluster_count_total": sum(r.cluster_count for r in reports),
        "n_reached_max": max((r.n_reached for r in reports), default=0),
        "tail_max": max((r.tail for r in reports), default=0.0),
    }


def run_experiment(cfg: RunConfig) -> tuple[dict, dict]:
    """Full pipeline; returns (deterministic payload, timing block)."""
    from .reports import config_hash
    started = time.perf_counter()
    spec, cov = lattice_objects(cfg)
    check_exact_capacity(cfg, spec)

    table = covariance_decay_table(cov)
    half = spec.L / 2
    try:
        cov_fit = decay_fit([(r, m) for r, m in table if 0 < r <= half])
        cov_fit_dict = {"usable": True, **cov_fit.as_dict()}
    except ValueError:
        cov_fit_dict = {"usable": False}

    norms = model_norms(spec, cov, cfg.g, kappa=cfg.kappa, h1=cfg.h1, h2=cfg.h2)

    with_oracle = cfg.mode == "exact" and spec.n_sites <= EXACT_MODE_SITE_LIMIT
    corr = run_correlations(cfg, spec, cov, with_oracle)

    h_norm = logseries_norm(merged_coefficients(corr.series_list),
                            cfg.h2, cfg.kappa, spec.metric)
    f_norm, _, holds = log_norm_bound_check(norms["v1_norm"], h_norm)
    log_norm_bound = {
        "f_norm": f_norm,
        "h_norm_probed": h_norm,
        "gate_sixteenth": bool(norms["gate_sixteenth"]),
        "holds": holds,
    }

    payload = {
        "config_hash": config_hash(cfg),
        "lattice": {"d": cfg.d, "L": cfg.L, "N": cfg.N},
        "model": {"g": cfg.g, "m_f": cfg.m_f},
        "covariance": {
            "log_det_inverse": cov.log_det,
            "decay_table": [[r, m] for r, m in table],
            "fit": cov_fit_dict,
        },
        "norms": norms,
        "log_norm_bound": log_norm_bound,
        "expansion": expansion_summary(corr.reports),
        "correlations": corr.rows,
        "correlation_samples": [[list(site), value] for site, value in corr.samples],
        "correlation_fit": correlation_fit(corr.samples, cfg.L),
        "oracle": {
            "ran": with_oracle,
            "worst_abs": corr.oracle_worst_abs,
            "worst_rel": corr.oracle_worst_rel,
        },
    }
    timing = {"wall_time_s": round(time.perf_counter() - started, 3)}
    return payload, timing
