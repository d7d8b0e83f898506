import math

import numpy as np
import pytest

import oscbands.oscillator as osc
from oscbands.averaging import Potential
from oscbands.oscillator import (BasisSpec, ClusterOverlapError, SpectralData,
                                 TrustWindowError, assemble_hamiltonian,
                                 basis_for_energy, cluster_width_scan,
                                 compute_spectrum, detect_clusters, eigensolve,
                                 position_matrix, position_power_matrices,
                                 quadratic_exact_spectrum, spectrum_1d)


def test_position_matrix_elements():
    hbar = 0.3
    m = position_matrix(6, hbar)
    for j in range(5):
        assert abs(m[j, j + 1] - math.sqrt(hbar * (j + 1) / 2.0)) < 1e-15
    assert np.allclose(m, m.T)


def test_canonical_commutator_interior():
    # [X, P] = i hbar away from the truncation edge
    hbar = 0.1
    size = 30
    x = position_matrix(size, hbar)
    # p = i sqrt(hbar/2)(adag - a)
    p = np.zeros((size, size), dtype=complex)
    for j in range(size - 1):
        p[j, j + 1] = -1j * math.sqrt(hbar * (j + 1) / 2.0)
        p[j + 1, j] = 1j * math.sqrt(hbar * (j + 1) / 2.0)
    comm = x @ p - p @ x
    interior = comm[:size - 2, :size - 2]
    assert np.max(np.abs(interior - 1j * hbar * np.eye(size - 2))) < 1e-14


def test_power_matrices_exact():
    hbar = 0.2
    xp = position_power_matrices(8, hbar, 3)
    x = position_matrix(8 + 3, hbar)
    assert np.max(np.abs(xp[2] - (x @ x)[:8, :8])) < 1e-14
    assert np.max(np.abs(xp[3] - (x @ x @ x)[:8, :8])) < 1e-14


def test_unperturbed_ladder():
    for dim in (1, 2):
        basis = BasisSpec(dim=dim, hbar=0.1, J=24)
        vals = eigensolve(assemble_hamiltonian(Potential.zero(dim), basis))
        expected = []
        for j in range(25):
            expected += [0.1 * j] * math.comb(dim + j - 1, dim - 1)
        assert np.max(np.abs(vals - np.array(expected))) < 1e-13


def test_linear_potential_tridiagonal_and_exact():
    hbar = 0.1
    basis = BasisSpec(dim=1, hbar=hbar, J=150)
    m = assemble_hamiltonian(Potential.from_x_power(1), basis)
    off2 = np.abs(np.triu(m, 2))
    assert np.max(off2) == 0.0  # single ladder step only
    data = compute_spectrum(Potential.from_x_power(1), basis)
    trusted = data.trusted()
    j = np.round(trusted / hbar)
    assert np.max(np.abs(trusted - (hbar * j - hbar ** 4 / 2.0))) < 1e-12


def test_quadratic_exact_formula():
    # direct arithmetic at C1=1, hbar=0.1, n=1, j=0
    val = quadratic_exact_spectrum(1.0, 0.0, 1, 0.1, 0)[0]
    assert abs(val - (0.1 * math.sqrt(1.02) * 0.5 - 0.05)) < 1e-15
    assert np.allclose(quadratic_exact_spectrum(0.0, 0.0, 1, 0.1, 5),
                       0.1 * np.arange(6))
    with pytest.raises(ValueError):
        quadratic_exact_spectrum(-100.0, 0.0, 1, 0.3, 3)


@pytest.mark.parametrize("dim", [1, 2])
def test_quadratic_oracle_matches_diagonalization(dim):
    hbar = 0.1
    c1, c2 = 0.5, 0.3
    terms = {(2,): c1, (0,): c2} if dim == 1 else \
        {(2, 0): c1, (0, 2): c1, (0, 0): c2}
    basis = BasisSpec(dim=dim, hbar=hbar, J=200 if dim == 1 else 100)
    data = compute_spectrum(Potential(dim, terms), basis)
    trusted = data.trusted()
    exact = quadratic_exact_spectrum(c1, c2, dim, hbar, basis.J)[:len(trusted)]
    rel = np.max(np.abs(trusted - exact) / np.maximum(np.abs(exact), 1e-12))
    assert rel < 1e-10


def test_eigensolve_basics():
    assert np.allclose(eigensolve(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    assert np.allclose(eigensolve(np.array([[0.0, 1.0], [1.0, 0.0]])), [-1, 1])
    vals = eigensolve(np.diag([1.0, 2.0]), check_residual=True)
    assert np.allclose(vals, [1, 2])
    with pytest.raises(ArithmeticError):
        eigensolve(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_banded_path_matches_dense(monkeypatch):
    monkeypatch.setattr(osc, "_BANDED_MIN_SIZE", 10)
    for v in [Potential.from_x_power(1),
              Potential(1, {(2,): 0.5, (0,): 0.3}),
              Potential(1, {(4,): 1.0, (3,): -0.2, (1,): 0.7})]:
        e_band = spectrum_1d(v, 0.05, 300)
        basis = BasisSpec(dim=1, hbar=0.05, J=300, J_trust=280)
        e_dense = eigensolve(assemble_hamiltonian(v, basis))
        assert np.max(np.abs(e_band - e_dense)) < 1e-12


def test_separable_matches_dense():
    v = Potential(2, {(4, 0): 1.0, (0, 2): 1.0})
    basis = BasisSpec(dim=2, hbar=0.1, J=40)
    sep = compute_spectrum(v, basis).trusted()
    den = compute_spectrum(v, basis, force_dense=True).trusted()
    k = min(len(sep), len(den))
    assert np.max(np.abs(sep[:k] - den[:k])) < 1e-12


def test_cluster_detection_and_counts():
    basis = BasisSpec(dim=2, hbar=0.1, J=40)
    clusters = detect_clusters(compute_spectrum(Potential.zero(2), basis,
                                                force_dense=True))
    counts = clusters.counts()
    for j in range(0, 20):
        assert counts[j] == j + 1
    assert all(np.allclose(c.shifts, 0.0) for c in clusters.clusters)

    hbar = 0.1
    clusters = detect_clusters(compute_spectrum(
        Potential.from_x_power(1), BasisSpec(dim=1, hbar=hbar, J=150)))
    for c in clusters.clusters:
        assert np.allclose(c.shifts, -hbar ** 2 / 2.0, atol=1e-10)


def test_cluster_overlap_raises():
    basis = BasisSpec(dim=1, hbar=0.1, J=10, J_trust=8)
    rogue = SpectralData(basis=basis,
                         eigenvalues=np.array([0.0, 0.1, 0.23, 0.3]),
                         trusted_max_energy=0.5)
    with pytest.raises(ClusterOverlapError):
        detect_clusters(rogue)


def test_variational_monotonicity():
    # enlarging the basis never raises a trusted eigenvalue (min-max)
    v = Potential(1, {(4,): 1.0})
    hbar = 0.1
    small = compute_spectrum(v, BasisSpec(dim=1, hbar=hbar, J=120)).trusted()
    large = compute_spectrum(v, BasisSpec(dim=1, hbar=hbar, J=150,
                                          J_trust=72)).eigenvalues
    diff = large[:len(small)] - small
    assert np.max(diff) <= 1e-10


def test_trust_window_doubling_at_090():
    # trust fraction 0.9 is validated by doubling the basis
    v = Potential(1, {(2,): 1.0})
    hbar = 0.02
    j_win = 200
    e1 = spectrum_1d(v, hbar, int(j_win / 0.9) + 1)[:j_win]
    e2 = spectrum_1d(v, hbar, 2 * int(j_win / 0.9) + 1)[:j_win]
    assert np.max(np.abs(e1 - e2)) < 1e-10


def test_cluster_width_scan():
    widths = cluster_width_scan(Potential.zero(1), 1.0, [0.1])
    assert widths == [0.0]
    widths = cluster_width_scan(Potential.from_x_power(1), 1.0, [0.2, 0.1])
    assert abs(widths[0] - 0.2 ** 4 / 2) < 1e-12
    assert abs(widths[1] / widths[0] - 1.0 / 16.0) < 1e-6


def test_cluster_width_scan_quartic_ratio():
    v = Potential(2, {(4, 0): 1.0, (0, 2): 1.0})
    widths = cluster_width_scan(v, 1.0, [0.02, 0.01], trust_fraction=0.75)
    ratio = widths[1] / widths[0]
    assert abs(ratio - 0.25) <= 0.2 * 0.25


def test_basis_validation():
    with pytest.raises(ValueError):
        BasisSpec(dim=1, hbar=-0.1, J=40)
    with pytest.raises(ValueError):
        BasisSpec(dim=1, hbar=0.1, J=40, J_trust=40)
    with pytest.raises(Exception):
        BasisSpec(dim=3, hbar=0.1, J=40)
    basis = BasisSpec(dim=1, hbar=0.1, J=40, J_trust=38)
    with pytest.raises(TrustWindowError):
        basis.check_buffer(4)
    b = basis_for_energy(1, 0.1, 2.0)
    assert b.trusted_max_energy >= 2.0


def test_spectral_data_serialization():
    basis = BasisSpec(dim=1, hbar=0.1, J=20)
    data = compute_spectrum(Potential.zero(1), basis)
    d = data.to_json_dict()
    assert d["dim"] == 1 and len(d["eigenvalues"]) == 21
    clusters = detect_clusters(data)
    rows = clusters.to_csv_rows()
    assert rows[0] == ("j", "k", "energy", "shift")
    assert len(rows) == 1 + sum(clusters.counts().values())
