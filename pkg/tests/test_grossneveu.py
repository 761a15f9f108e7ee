"""Lattice model tests: operator, covariance, kernels, correlations, fits."""

import math

import numpy as np
import pytest

from fermicluster.berezin import log_direct
from fermicluster.clusters import ClusterOptions, assemble_b
from fermicluster.coeffsys import CoefficientSystem
from fermicluster.errors import CapacityError, ConfigError
from fermicluster.generators import psi
from fermicluster.grossneveu import (
    Covariance,
    FitResult,
    LatticeSpec,
    build_v1,
    correlation_rows,
    covariance,
    covariance_decay_table,
    decay_fit,
    dirac_matrix,
    gamma_matrices,
    model_norms,
    quartic_kernel,
    source_kernels,
    truncated_two_point,
    universe_for,
)


@pytest.fixture(scope="module")
def small_cov():
    spec = LatticeSpec(d=2, L=2, N=1)
    return spec, covariance(spec, 1.0)


# ---------------------------------------------------------------- operator


@pytest.mark.parametrize("d", [2, 3, 4])
def test_gamma_clifford_relations(d):
    gams = gamma_matrices(d)
    assert len(gams) == d
    dim = 2 ** (d // 2)
    for i, gi in enumerate(gams):
        assert np.allclose(gi, gi.conj().T)
        for j, gj in enumerate(gams):
            anti = gi @ gj + gj @ gi
            target = 2 * np.eye(dim) if i == j else np.zeros((dim, dim))
            assert np.allclose(anti, target)


def test_dirac_annihilates_constants():
    spec = LatticeSpec(d=2, L=4)
    m = 1.5
    op = dirac_matrix(spec, m)
    const = np.ones(op.shape[0], dtype=complex)
    assert np.allclose(op @ const, m * const)


def test_dirac_row_sums_are_mass():
    spec = LatticeSpec(d=2, L=4)
    op = dirac_matrix(spec, 1.0)
    # gradient part cancels on row sums, Wilson part cancels its diagonal
    assert np.allclose(op.sum(axis=1), 1.0)


def test_dirac_rejects_nonpositive_mass():
    with pytest.raises(ConfigError):
        dirac_matrix(LatticeSpec(), 0.0)


def test_lattice_spec_validation():
    with pytest.raises(ConfigError):
        LatticeSpec(d=1)
    with pytest.raises(ConfigError):
        LatticeSpec(L=1)
    with pytest.raises(ConfigError):
        LatticeSpec(N=0)


# -------------------------------------------------------------- covariance


def test_covariance_inverts_operator(small_cov):
    spec, cov = small_cov
    op = dirac_matrix(spec, cov.m_f)
    residual = np.max(np.abs(cov.matrix @ op - np.eye(op.shape[0])))
    assert residual < 1e-10


def test_covariance_translation_invariance():
    spec = LatticeSpec(d=2, L=4)
    cov = covariance(spec, 1.0)
    x, y = (0, 1), (2, 3)
    t = (1, 2)
    xs = tuple((a + b) % spec.L for a, b in zip(x, t))
    ys = tuple((a + b) % spec.L for a, b in zip(y, t))
    assert np.allclose(cov.block(x, y), cov.block(xs, ys))


def test_covariance_large_mass_diagonal():
    spec = LatticeSpec(d=2, L=4)
    cov = covariance(spec, 100.0)
    diag = cov.entry((0, 0), (0, 0), 0, 0)
    assert abs(diag - 1.0 / 100.0) < 0.05 / 100.0


def test_covariance_decay_positive_rate():
    spec = LatticeSpec(d=2, L=16)
    cov = covariance(spec, 1.0)
    table = covariance_decay_table(cov)
    half = spec.L / 2
    fit = decay_fit([(r, m) for r, m in table if 0 < r <= half])
    assert fit.kappa > 0
    assert fit.r_squared >= 0.95


# ----------------------------------------------------------------- kernels


def test_quartic_single_entry_matches_product(small_cov):
    spec, cov = small_cov
    g = 0.1
    system = quartic_kernel(spec, cov, g)
    x, y, yp = (0, 0), (0, 1), (1, 1)
    key = (
        (
            psi(x, 0, 0, bar=True),
            psi(x, 1, 0, bar=True),
            psi(y, 0, 0),
            psi(yp, 1, 0),
        ),
        (),
    )
    expected = -g * g * cov.entry(x, y, 0, 0) * cov.entry(x, yp, 1, 1)
    assert dict(system)[key] == pytest.approx(expected, rel=1e-12)


def test_quartic_envelope_decay_bound():
    spec = LatticeSpec(d=2, L=4)
    m_f = 1.0
    cov = covariance(spec, m_f)
    metric = spec.metric
    # empirical prefactor envelope of S itself
    c_env = max(m * math.exp(m_f * r) for r, m in covariance_decay_table(cov))
    g = 0.1
    system = quartic_kernel(spec, cov, g)
    bound = c_env * c_env * g * g
    for (zs, _), value in system:
        sites = {gen.site for gen in zs}
        # shortest tree length on up to three sites
        pts = sorted(sites)
        if len(pts) == 1:
            t = 0.0
        elif len(pts) == 2:
            t = metric.distance(pts[0], pts[1])
        else:
            d01 = metric.distance(pts[0], pts[1])
            d02 = metric.distance(pts[0], pts[2])
            d12 = metric.distance(pts[1], pts[2])
            t = d01 + d02 + d12 - max(d01, d02, d12)
        assert abs(value) <= bound * math.exp(-m_f * t) * (1 + 1e-9)


def test_zero_coupling_gives_empty_kernels(small_cov):
    spec, cov = small_cov
    assert len(build_v1(spec, cov, 0.0)) == 0
    local, smeared = source_kernels(spec, cov, 0.0)
    assert len(local) == 0 and len(smeared) == 0


def test_kernel_coupling_homogeneity(small_cov):
    spec, cov = small_cov
    q1 = dict(quartic_kernel(spec, cov, 0.05))
    q2 = dict(quartic_kernel(spec, cov, 0.10))
    for key, value in q1.items():
        assert q2[key] == pytest.approx(4 * value, rel=1e-12)
    s1 = dict(source_kernels(spec, cov, 0.05)[1])
    s2 = dict(source_kernels(spec, cov, 0.10)[1])
    for key, value in s1.items():
        assert s2[key] == pytest.approx(2 * value, rel=1e-12)


def test_model_norms_triangle_and_gate():
    spec = LatticeSpec(d=2, L=4)
    cov = covariance(spec, 1.0)
    report = model_norms(spec, cov, 0.05, kappa=0.5)
    # direct evaluation of the weighted kernel norm at this coupling sits
    # far above the 1/16 smallness gate; the convergence bound is only
    # asserted for couplings small enough to pass the gate
    assert report["v1_norm"] > 1.0 / 16.0
    assert not report["gate_sixteenth"]
    assert report["v1_norm"] <= report["v1_triangle_bound"] * (1 + 1e-12)
    zero = model_norms(spec, cov, 0.0, kappa=0.5)
    assert zero["v1_norm"] == 0.0
    assert model_norms(spec, cov, 0.001, kappa=0.5)["gate_sixteenth"]
    spec2 = LatticeSpec(d=2, L=2)
    cov2 = covariance(spec2, 1.0)
    assert model_norms(spec2, cov2, 0.002, kappa=0.5)["gate_sixteenth"]


def test_log_norm_inequality_at_open_gate():
    from fermicluster.weights import log_norm_bound_check, logseries_norm

    spec = LatticeSpec(d=2, L=2)
    cov = covariance(spec, 1.0)
    g = 0.002
    sources = (spec.sites[0], spec.sites[-1])
    u = universe_for(spec, sources)
    f = build_v1(spec, cov, g, source_sites=sources).scaled(-1)
    series, report = assemble_b(u, f, ClusterOptions(n_max=30))
    assert report.exact
    f_norm = model_norms(spec, cov, g, kappa=0.5, source_sites=sources)["v1_norm"]
    h_norm = logseries_norm(series.coefficients(), 1.0, 0.5, spec.metric)
    assert f_norm < 1.0 / 16.0
    _, _, holds = log_norm_bound_check(f_norm, h_norm)
    assert holds is True


def test_model_norms_rejects_kappa_at_mass(small_cov):
    spec, cov = small_cov
    with pytest.raises(ConfigError):
        model_norms(spec, cov, 0.05, kappa=1.0)


# ------------------------------------------------------------ correlations


def test_free_theory_two_point_equals_covariance(small_cov):
    spec, cov = small_cov
    g = 0.05
    u = universe_for(spec)
    f = build_v1(spec, cov, g, quartic=False).scaled(-1)
    series, report = assemble_b(u, f, ClusterOptions(n_max=30))
    assert report.exact
    for y1 in spec.sites:
        for y2 in spec.sites:
            for alpha in range(spec.spinor_dim):
                for beta in range(spec.spinor_dim):
                    got = truncated_two_point(series, g, y1, y2, alpha, beta)
                    want = cov.entry(y1, y2, alpha, beta)
                    assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_interacting_two_point_matches_direct_oracle(small_cov):
    spec, cov = small_cov
    g = 0.1
    sources = (spec.sites[0], spec.sites[-1])
    u = universe_for(spec, sources)
    f = build_v1(spec, cov, g, source_sites=sources).scaled(-1)
    oracle = log_direct(u, f.to_element(u))
    series, report = assemble_b(u, f, ClusterOptions(n_max=30))
    assert report.exact
    y1, y2 = sources
    for alpha in range(2):
        for beta in range(2):
            got = truncated_two_point(series, g, y1, y2, alpha, beta)
            want = truncated_two_point(oracle, g, y1, y2, alpha, beta)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-12)
    # interaction shifts the value away from the free covariance
    moved = truncated_two_point(series, g, y1, y2, 0, 0)
    assert abs(moved - cov.entry(y1, y2, 0, 0)) > 1e-6


def test_flavor_channels_diagonal_and_equal():
    spec = LatticeSpec(d=2, L=2, N=2)
    cov = covariance(spec, 1.0)
    g = 0.1
    sources = (spec.sites[0], spec.sites[1])
    u = universe_for(spec, sources)
    f = build_v1(spec, cov, g, source_sites=sources).scaled(-1)
    # two flavors double the mode count; a site-local truncation keeps the
    # run cheap while preserving the channel structure under test
    options = ClusterOptions(mode="truncated", n_max=20, k_max=4,
                             max_polymer_sites=1, eta_degree_cap=2)
    series, _ = assemble_b(u, f, options)
    y1, y2 = sources
    same0 = truncated_two_point(series, g, y1, y2, 0, 0, 0, 0)
    same1 = truncated_two_point(series, g, y1, y2, 0, 0, 1, 1)
    cross = truncated_two_point(series, g, y1, y2, 0, 0, 0, 1)
    assert same0 == pytest.approx(same1, rel=1e-10)
    assert cross == 0
    assert series.odd_masks() == []


def test_correlation_rows_schema(small_cov):
    spec, cov = small_cov
    g = 0.05
    u = universe_for(spec)
    f = build_v1(spec, cov, g, quartic=False).scaled(-1)
    series, _ = assemble_b(u, f, ClusterOptions(n_max=30))
    rows = correlation_rows(series, g, spec)
    assert len(rows) == len(spec.sites) * spec.spinor_dim ** 2 * spec.N
    assert rows == sorted(
        rows, key=lambda r: (r["distance"], r["alpha"], r["beta"], r["flavor"])
    )
    for row in rows:
        assert set(row) == {"distance", "alpha", "beta", "flavor", "re", "im", "abs"}
        assert row["abs"] == pytest.approx(math.hypot(row["re"], row["im"]))


def test_universe_capacity_guard():
    spec = LatticeSpec(d=2, L=5)
    with pytest.raises(CapacityError):
        universe_for(spec)


# -------------------------------------------------------------------- fits


def test_decay_fit_recovers_exact_exponential():
    c, kappa = 2.5, 0.8
    samples = [(r, c * math.exp(-kappa * r)) for r in (0.0, 1.0, 2.0, 3.0, 5.0)]
    fit = decay_fit(samples)
    assert fit.c == pytest.approx(c, abs=1e-10)
    assert fit.kappa == pytest.approx(kappa, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.decaying


def test_decay_fit_constant_flagged_nondecaying():
    fit = decay_fit([(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)])
    assert abs(fit.kappa) < 1e-12
    assert not fit.decaying


def test_decay_fit_needs_three_points():
    with pytest.raises(ValueError):
        decay_fit([(0.0, 1.0), (1.0, 0.5)])
    with pytest.raises(ValueError):
        decay_fit([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
