import numpy as np
import pytest

from phonongate.duffing import (
    TruncationError,
    duffing_hamiltonian,
    duffing_spectrum,
    qubit_subspace,
    spectrum,
    truncation_convergence,
)
from phonongate.fockspace import Operator, SpaceDescriptor

W = 2 * np.pi * 28.6e6
PAPER_RATIO = 209e3 / 28.6e6


def test_harmonic_limit_diagonal():
    h = duffing_hamiltonian(W, 0.0, 8).data
    assert np.allclose(h, np.diag(W * np.arange(8)))


def test_quartic_diagonal_rule():
    # operator-algebra oracle: <n|(b+b†)^4|n> = 6n^2 + 6n + 3; the truncation
    # cuts the up-up-down-down path for the top two levels, so check n < dim-2
    lam = 0.03 * W
    dim = 10
    h = duffing_hamiltonian(W, lam, dim).data
    n = np.arange(dim - 2)
    expected = W * n + 0.5 * lam * (6 * n**2 + 6 * n + 3)
    assert np.allclose(np.diag(h).real[: dim - 2], expected, rtol=1e-13)


def test_hamiltonian_hermitian():
    h = duffing_hamiltonian(W, 0.1 * W, 12)
    assert h.is_hermitian()


def test_truncation_too_small():
    with pytest.raises(TruncationError):
        duffing_hamiltonian(W, 0.0, 3)


def test_spectrum_harmonic_x10():
    s = duffing_spectrum(W, 0.0, dim=16, dim_trust=4)
    assert abs(s.X[1, 0]) == pytest.approx(1 / np.sqrt(2), rel=1e-12)
    assert np.all(np.diff(s.energies) > 0)


def test_spectrum_first_order_gap():
    lam = 1e-5 * W
    s = duffing_spectrum(W, lam, dim=24, dim_trust=4)
    gap = s.energies[1] - s.energies[0]
    assert gap == pytest.approx(W + 6 * lam, rel=1e-6)


def test_spectrum_x10_perturbative():
    # second-order perturbation oracle: the leading eigenvector correction is
    # |0'> = |0> - (lam/2w)(3 sqrt2 |2> + ...), giving
    # X10 = 1/sqrt2 - (3/sqrt2)(lam/w) + O((lam/w)^2)
    lam = 1e-5 * W
    s = duffing_spectrum(W, lam, dim=24, dim_trust=4)
    predicted = 1 / np.sqrt(2) - (3 / np.sqrt(2)) * (lam / W)
    assert abs(s.X[1, 0]) == pytest.approx(predicted, abs=5e-9)


def test_spectrum_delta_antisymmetric():
    s = duffing_spectrum(W, PAPER_RATIO * W, dim=16, dim_trust=4)
    assert np.array_equal(s.delta, -s.delta.T)


def test_spectrum_rejects_non_hermitian():
    bad = Operator(SpaceDescriptor((8,)), np.triu(np.ones((8, 8))))
    with pytest.raises(ValueError):
        spectrum(bad, 2)


def test_spectrum_dim_trust_bounds():
    h = duffing_hamiltonian(W, 0.0, 8)
    with pytest.raises(ValueError):
        spectrum(h, 5)  # > dim - 4
    with pytest.raises(ValueError):
        spectrum(h, 1)


def test_qubit_subspace_harmonic():
    q = qubit_subspace(duffing_spectrum(W, 0.0, 16, 4))
    assert q.omega_q == pytest.approx(W, rel=1e-12)
    assert q.X10 == pytest.approx(1 / np.sqrt(2), rel=1e-12)
    # harmonic (X^2)_nn = n + 1/2 -> Z coefficient (1/2 - 3/2)/2 = -1/2
    assert q.Z_coeff == pytest.approx(-0.5, rel=1e-10)


def test_qubit_subspace_z_real_and_x_block():
    q = qubit_subspace(duffing_spectrum(W, PAPER_RATIO * W, 16, 4))
    assert np.isfinite(q.Z_coeff)
    # parity: diagonal deflection elements vanish for the symmetric potential
    assert abs(q.X_block[0, 0]) < 1e-12
    assert abs(q.X_block[1, 1]) < 1e-12


def test_completeness():
    s = duffing_spectrum(W, PAPER_RATIO * W, dim=16, dim_trust=4)
    xsq = s.X @ s.X
    direct = s.eigvecs.conj().T @ np.linalg.matrix_power(
        (np.diag(np.sqrt(np.arange(1, 16)), 1) + np.diag(np.sqrt(np.arange(1, 16)), -1)) / np.sqrt(2), 2
    ) @ s.eigvecs
    for n in range(4):
        for k in range(4):
            assert abs(xsq[n, k] - direct[n, k]) <= 1e-10


def test_parity_selection_rule():
    # at negligible lam the eigenstates keep harmonic parity: X_nm = 0 for
    # same-parity level pairs
    s = duffing_spectrum(W, 1e-8 * W, dim=16, dim_trust=4)
    for n in range(4):
        for m in range(4):
            if (n - m) % 2 == 0 and n != m:
                assert abs(s.X[n, m]) < 1e-6


def test_truncation_convergence_levels():
    # measured: 12 -> 16 changes E0..E3 by 3.6e-7 (top level dominates),
    # 16 -> 24 by 3.1e-10
    drift_12_16 = truncation_convergence(W, PAPER_RATIO * W, 4, 12, 16)
    drift_16_24 = truncation_convergence(W, PAPER_RATIO * W, 4, 16, 24)
    assert drift_12_16 < 1e-6
    assert drift_16_24 < 1e-8


def test_phase_convention_deterministic():
    a = duffing_spectrum(W, PAPER_RATIO * W, 16, 4)
    b = duffing_spectrum(W, PAPER_RATIO * W, 16, 4)
    assert np.array_equal(a.eigvecs, b.eigvecs)
    assert np.all(np.diag(a.eigvecs).real >= 0)
