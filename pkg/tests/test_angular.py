import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphadi.angular import (
    AngularPotential,
    SpectralData,
    ab_spectrum,
    alpha_beta,
    assemble_L,
    asymptotic_eigenvalue,
    closed_spectrum,
    eigenfunction_profile,
    essentially_selfadjoint,
    match_asymptotic,
    mean_fields,
    profile_distance,
    spectrum,
)
from sphadi.errors import FormUnboundedError, ResolutionError, UnsupportedDimensionError

ASYMPTOTIC_POT = AngularPotential(d=2, A_cos=(0.3, 0.1), a_cos=(0.0,), a_sin=(0.2,))


@pytest.fixture(scope="module")
def asymptotic_spec():
    return spectrum(ASYMPTOTIC_POT, 90, n_fourier=64)


# -- potentials and mean fields -----------------------------------------------


def test_mean_fields_examples():
    f = mean_fields(AngularPotential.aharonov_bohm(0.7))
    assert f.A_mean == 0.7 and f.shift_index == 1 and not f.half_integer_flux
    f = mean_fields(AngularPotential(d=2, a_cos=(0.0, 1.0)))
    assert f.a_mean == 0.0
    assert mean_fields(AngularPotential.aharonov_bohm(0.5)).half_integer_flux
    with pytest.raises(UnsupportedDimensionError):
        mean_fields(AngularPotential.free(3))


def test_potential_d3_restrictions():
    AngularPotential.inverse_square(3, 1.0)
    with pytest.raises(UnsupportedDimensionError):
        AngularPotential(d=3, A_cos=(0.2,))
    with pytest.raises(UnsupportedDimensionError):
        AngularPotential(d=3, a_cos=(0.0, 1.0))


def test_potential_evaluate_and_primitive():
    theta = np.linspace(0, 2 * np.pi, 7)
    A, a = ASYMPTOTIC_POT.evaluate(theta)
    assert np.allclose(A, 0.3 + 0.1 * np.cos(theta))
    assert np.allclose(a, 0.2 * np.sin(theta))
    assert np.allclose(ASYMPTOTIC_POT.A_primitive(theta), 0.3 * theta + 0.1 * np.sin(theta))


# -- Galerkin matrix ------------------------------------------------------------


def test_assemble_free_is_diagonal_z2():
    M = assemble_L(AngularPotential.free(), 6)
    z = np.arange(-6, 7)
    assert np.array_equal(M, np.diag(z * z).astype(complex))


def test_assemble_ab_diagonal():
    lam = 0.3
    M = assemble_L(AngularPotential.aharonov_bohm(lam), 5)
    z = np.arange(-5, 6)
    assert np.allclose(M, np.diag((z + lam) ** 2), atol=1e-15)


def test_assemble_shift_and_hermitian():
    base = assemble_L(ASYMPTOTIC_POT, 8)
    shifted = assemble_L(AngularPotential(d=2, A_cos=(0.3, 0.1), a_cos=(1.5,), a_sin=(0.2,)), 8)
    assert np.allclose(shifted - base, 1.5 * np.eye(17), atol=1e-14)
    assert np.array_equal(base, base.conj().T)


def test_assemble_against_quadrature():
    # <e_m, L e_n> by direct quadrature of (A^2 + a) and the derivative terms
    N, nq = 4, 256
    theta = 2 * np.pi * np.arange(nq) / nq
    A, a = ASYMPTOTIC_POT.evaluate(theta)
    z = np.arange(-N, N + 1)
    E = np.exp(1j * np.outer(z, theta)) / math.sqrt(2 * math.pi)
    # L e_n = (n^2 + 2 n A - i A' + A^2 + a) e_n with A' from the coefficients
    dA = -0.1 * np.sin(theta)
    ref = np.empty((z.size, z.size), dtype=complex)
    for j, n in enumerate(z):
        Le = (n * n + 2 * n * A - 1j * dA + A * A + a) * E[j]
        ref[:, j] = (E.conj() * Le).sum(axis=1) * 2 * np.pi / nq
    assert np.allclose(assemble_L(ASYMPTOTIC_POT, N), ref, atol=1e-13)


def test_assemble_resolution_error():
    with pytest.raises(ResolutionError):
        assemble_L(AngularPotential(d=2, a_cos=(0, 0, 0, 1.0)), 2)


# -- spectra ------------------------------------------------------------------


def test_spectrum_ab_examples():
    spec = spectrum(AngularPotential.aharonov_bohm(0.3), 4)
    assert np.allclose(spec.mus, [0.09, 0.49, 1.69, 2.89, 5.29], atol=1e-12)


def test_spectrum_free_examples():
    spec = spectrum(AngularPotential.free(), 6)
    assert np.allclose(spec.mus, [0, 1, 1, 4, 4, 9, 9], atol=1e-12)
    assert spec.labels == (0, 1, -1, 2, -2, 3, -3)


def test_spectrum_shift_identity():
    pot = ASYMPTOTIC_POT
    shifted = AngularPotential(d=2, A_cos=pot.A_cos, a_cos=(0.7,), a_sin=pot.a_sin)
    s0, s1 = spectrum(pot, 10), spectrum(shifted, 10)
    assert np.allclose(s1.mus - s0.mus, 0.7, atol=1e-10)
    assert np.allclose(np.abs(s1.eigvecs), np.abs(s0.eigvecs), atol=1e-8)


def test_closed_spectrum_examples():
    assert np.allclose(closed_spectrum(3, 0.0, 4).mus, [0, 2, 2, 2, 6])
    assert np.allclose(closed_spectrum(3, 2.0, 4).mus, [2, 4, 4, 4, 8])
    free2 = closed_spectrum(2, 0.0, 8)
    num = spectrum(AngularPotential.free(), 8)
    assert np.allclose(free2.mus, num.mus, atol=1e-12)
    assert free2.labels == num.labels


def test_closed_spectrum_multiplicities_d4():
    spec = closed_spectrum(4, 0.0, 13)
    # l(l+2) with multiplicities 1, 4, 9
    assert np.allclose(spec.mus, [0] + [3] * 4 + [8] * 9)


def test_ab_spectrum_examples():
    assert ab_spectrum(0.3, 3).mus[0] == pytest.approx(0.09)
    assert ab_spectrum(0.5, 3).mus[0] == pytest.approx(0.25)
    assert ab_spectrum(2.0, 3).mus[0] == 0.0
    assert ab_spectrum(-1.0, 3).mus[0] == 0.0


def test_ab_closed_form_matches_galerkin():
    num = spectrum(AngularPotential.aharonov_bohm(0.3), 20)
    ref = ab_spectrum(0.3, 20)
    assert np.max(np.abs(num.mus - ref.mus)) <= 1e-8
    assert num.labels == ref.labels


def test_asymptotic_eigenvalue_examples():
    f = mean_fields(AngularPotential.aharonov_bohm(0.3))
    assert asymptotic_eigenvalue(5, f) == pytest.approx(28.09)
    assert asymptotic_eigenvalue(-5, f) == pytest.approx(22.09)
    spec = spectrum(AngularPotential.aharonov_bohm(0.3), 30)
    matches, unmatched = match_asymptotic(spec, f, [j for j in range(-12, 13) if j])
    assert max(m.residual for m in matches) < 1e-10
    assert unmatched == [0]


@pytest.mark.parametrize(
    "mu,d,expect",
    [(0.0, 3, (0.0, 0.5)), (2.0, 3, (-1.0, 1.5)), (-0.25, 3, (0.5, 0.0)), (-1.0, 4, (1.0, 0.0))],
)
def test_alpha_beta_examples(mu, d, expect):
    assert alpha_beta(mu, d) == pytest.approx(expect)


def test_alpha_beta_below_threshold():
    with pytest.raises(FormUnboundedError):
        alpha_beta(-0.3, 3)
    with pytest.raises(FormUnboundedError):
        alpha_beta(-1e-3, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.floats(0, 50))
def test_alpha_beta_identities(d, excess):
    h = (d - 2) / 2
    mu = excess - h * h
    a, b = alpha_beta(mu, d)
    assert b >= 0
    assert a == pytest.approx(h - b, abs=1e-12)
    assert b * b - h * h == pytest.approx(mu, abs=1e-9 * max(1, abs(mu)))


def test_essentially_selfadjoint_examples():
    assert essentially_selfadjoint(1.0, 3)
    assert not essentially_selfadjoint(0.0, 3)
    assert essentially_selfadjoint(-1.0, 5)


# -- invariants ---------------------------------------------------------------


def test_eigen_residual_and_orthonormality(asymptotic_spec):
    spec = asymptotic_spec
    M = assemble_L(ASYMPTOTIC_POT, spec.n_fourier)
    V = spec.eigvecs
    res = np.linalg.norm(V @ M.T - spec.mus[:, None] * V, axis=1)
    assert res.max() <= 1e-8
    G = V.conj() @ V.T
    assert np.max(np.abs(G - np.eye(len(V)))) <= 1e-10


def test_doubling_stability():
    K = 30
    s1 = spectrum(ASYMPTOTIC_POT, K, n_fourier=64)
    w = np.linalg.eigvalsh(assemble_L(ASYMPTOTIC_POT, 2 * s1.n_fourier))[: K + 1]
    assert np.max(np.abs(w - s1.mus)) <= 1e-8


def test_exponents_consistent(asymptotic_spec):
    s = asymptotic_spec
    assert np.all(np.diff(s.mus) >= 0)
    assert np.all(s.betas >= 0)
    assert np.allclose(s.betas, -s.alphas)  # d = 2
    assert np.allclose(s.betas**2, s.mus)


def test_gauge_shift_leaves_spectrum():
    shifted = AngularPotential(d=2, A_cos=(1.3, 0.1), a_cos=(0.0,), a_sin=(0.2,))
    a = spectrum(ASYMPTOTIC_POT, 25).mus
    b = spectrum(shifted, 25).mus
    assert np.max(np.abs(a - b)) <= 1e-8


def test_asymptotic_remainder_bounded(asymptotic_spec):
    # r_j j^2 stays bounded for |j| = 5..40 on both branches; consistent with O(1/j^2)
    f = mean_fields(ASYMPTOTIC_POT)
    js = [j for j in range(-40, 41) if abs(j) >= 5]
    matches, _ = match_asymptotic(asymptotic_spec, f, js)
    assert {m.j for m in matches} == set(js)
    scaled = {m.j: m.residual * m.j**2 for m in matches}
    assert max(scaled.values()) < 0.01
    # the negative branch decreases towards its limit; the positive one increases
    neg = [scaled[-j] for j in range(5, 41)]
    pos = [scaled[j] for j in range(5, 41)]
    assert all(x >= y for x, y in zip(neg, neg[1:]))
    assert all(x <= y for x, y in zip(pos, pos[1:]))
    # both approach the second-order perturbation limit |a_1|^2 / 2 = 0.005
    assert abs(neg[-1] - 0.005) < 2e-4 and abs(pos[-1] - 0.005) < 2e-4


def test_eigenfunction_asymptotics(asymptotic_spec):
    f = mean_fields(ASYMPTOTIC_POT)
    n = 512
    theta = 2 * np.pi * np.arange(n) / n
    w = np.full(n, 2 * np.pi / n)
    dists = []
    for j in (8, 16, 32):
        matches, _ = match_asymptotic(asymptotic_spec, f, [j])
        k = matches[0].k
        phi = asymptotic_spec.eigenfunctions(theta, [k])[0]
        dists.append(profile_distance(phi, eigenfunction_profile(j, ASYMPTOTIC_POT, theta), w))
    assert dists[0] > dists[1] > dists[2]
    assert dists[2] < 0.01


def test_spectrum_d3_unsupported():
    with pytest.raises(UnsupportedDimensionError):
        spectrum(AngularPotential.free(3), 4)


def test_spectrum_resolution_error():
    with pytest.raises(ResolutionError):
        spectrum(ASYMPTOTIC_POT, 40, n_fourier=8, max_fourier=32)


def test_spectral_data_json_roundtrip(asymptotic_spec):
    doc = asymptotic_spec.to_dict()
    back = SpectralData.from_dict(doc)
    assert np.array_equal(back.mus, asymptotic_spec.mus)
    assert np.array_equal(back.eigvecs, asymptotic_spec.eigvecs)
    assert back.labels == asymptotic_spec.labels
    s3 = closed_spectrum(3, 1.0, 8)
    assert SpectralData.from_dict(s3.to_dict()).labels == s3.labels


def test_eigenfunctions_orthonormal_d3():
    from sphadi.propagator import angular_quadrature

    spec = closed_spectrum(3, 0.0, 15)
    pts, w = angular_quadrature(3, 8)
    Phi = spec.eigenfunctions(pts)
    G = (Phi * w) @ Phi.conj().T
    assert np.max(np.abs(G - np.eye(16))) < 1e-12
