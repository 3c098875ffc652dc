import math

import numpy as np
import pytest

from conftest import random_density
from lgps import (
    TwoQubitModel,
    build_two_qubit_scenario,
    halfpi_reduced_state,
    joint_probability,
    k3,
    k3_curve,
    markov_product_residual,
    paper_measurement_plan,
    sequential_oracle,
)
from lgps.errors import DomainError, UsageError
from lgps.scenarios import (
    MINUS,
    PLUS,
    exchange_hamiltonian,
    halfpi_index,
    k3_closed_form,
    model_process_state,
    phi_basis,
    psi_states,
    rotated_basis,
)


def test_hamiltonian_swaps_single_excitation():
    h = exchange_hamiltonian(2.0)
    pm = np.kron(PLUS, MINUS)
    mp = np.kron(MINUS, PLUS)
    assert np.allclose(h @ pm, 2.0 * mp)
    assert np.allclose(h @ np.kron(PLUS, PLUS), 0)


def test_model_validation():
    with pytest.raises(DomainError):
        TwoQubitModel.from_entries(1, 1, 1, 0.5, 0.6)
    with pytest.raises(DomainError):
        TwoQubitModel.from_entries(1, 1, 1, 0.5, 0.5, 0.6)
    m = TwoQubitModel.from_entries(2.0, 0.25, 0.5, 0.3, 0.7, 0.1 + 0.2j)
    assert m.theta1 == 0.5 and m.theta2 == 1.0
    assert m.c == 0.1 + 0.2j


def test_bases_are_orthonormal():
    for b in (rotated_basis(0.7), phi_basis(0), phi_basis(1)):
        cols = np.array(b).T
        assert np.allclose(cols.conj().T @ cols, np.eye(2))


def test_rotated_basis_at_zero_is_plus_minus():
    b = rotated_basis(0.0)
    assert np.allclose(b[0], PLUS) and np.allclose(b[1], MINUS)


@pytest.mark.parametrize("angles", [(0.4, 1.1), (math.pi / 2, math.pi / 2), (2.0, -0.3)])
def test_process_state_matches_pure_components(rng, angles):
    rho = random_density(rng, 2)
    ps = model_process_state(TwoQubitModel.at_angles(*angles, rho))
    pm, pp = psi_states(*angles)
    ref = np.kron(rho, 4 * (np.outer(pm, pm.conj()) + np.outer(pp, pp.conj())))
    assert np.abs(ps.matrix - ref).max() < 1e-12


def test_leading_coefficient_at_equal_angles():
    pm, _ = psi_states(0.8, 0.8)
    assert pm[0] == pytest.approx(1 / (2 * math.sqrt(2)))


def test_halfpi_index():
    assert halfpi_index(math.pi / 2) == 0
    assert halfpi_index(3 * math.pi / 2) == 1
    assert halfpi_index(-math.pi / 2) == -1
    assert halfpi_index(1.0) is None


@pytest.mark.parametrize("k", [0, 1, 2])
def test_halfpi_reduction(rng, k):
    t = (k + 0.5) * math.pi
    red = halfpi_reduced_state(TwoQubitModel.at_angles(t, t, random_density(rng, 2)))
    assert red.k == k
    assert red.form_residual < 1e-12
    assert red.link_identity_residual < 1e-12
    out = red.first_step_output()
    assert out.shape == (2, 2)


def test_halfpi_reduction_rejects_other_angles():
    with pytest.raises(UsageError):
        halfpi_reduced_state(TwoQubitModel.at_angles(1.0, 1.0))


def test_k3_at_pi_over_six():
    m = TwoQubitModel.at_angles(math.pi / 2, math.pi / 2)
    rep = k3(model_process_state(m), paper_measurement_plan(math.pi / 6, 0))
    assert rep.K3 == pytest.approx(1.5, abs=1e-12)
    assert not rep.lg_satisfied


def test_curve_matches_closed_form(rng):
    m = TwoQubitModel.at_angles(math.pi / 2, math.pi / 2, random_density(rng, 2))
    grid = np.linspace(-math.pi, math.pi, 37)
    curve = k3_curve(m, grid)
    assert curve.max_deviation < 1e-12
    par = k3_curve(m, grid, workers=4)
    assert [r.K3 for _, r in par.points] == [r.K3 for _, r in curve.points]


def test_curve_needs_k_off_halfpi():
    with pytest.raises(UsageError):
        k3_curve(TwoQubitModel.at_angles(1.0, 1.0), [0.0])
    k3_curve(TwoQubitModel.at_angles(1.0, 1.0), [0.0], k=1)


def test_closed_form_violation_region():
    assert k3_closed_form(math.pi / 4) == pytest.approx(1.0)
    assert k3_closed_form(0.3) > 1


def test_plan_rejects_out_of_range_theta():
    with pytest.raises(DomainError):
        paper_measurement_plan(4.0)


def test_model_oracle_agreement(rng):
    m = TwoQubitModel.at_angles(0.9, 2.1, random_density(rng, 2))
    plan = paper_measurement_plan(0.4)
    a = joint_probability(model_process_state(m), plan).p
    b = sequential_oracle(build_two_qubit_scenario(m), plan).p
    assert np.abs(a - b).max() < 1e-12


@pytest.mark.parametrize("theta1", [0.0, math.pi, 2 * math.pi])
def test_integer_pi_first_step_is_markovian(rng, theta1):
    m = TwoQubitModel.at_angles(theta1, 0.7, random_density(rng, 2))
    assert markov_product_residual(model_process_state(m)) < 1e-10


def test_halfpi_first_step_has_memory():
    m = TwoQubitModel.at_angles(math.pi / 2, 0.7)
    assert markov_product_residual(model_process_state(m)) > 1e-3
