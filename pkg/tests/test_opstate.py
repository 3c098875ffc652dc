import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import haar_unitary, random_density
from lgps import LabeledOperator, ShapeError, choi_state, max_entangled_link, op_inner, partial_contract, tensor_product
from lgps.errors import DomainError, LabelError
from lgps.opstate import (
    contract_all,
    default_tol,
    dephase,
    expand,
    is_density_matrix,
    labeled,
    orthonormal_basis,
    partial_trace,
    permute,
    reconstruct,
    sandwich,
)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def complex_matrices(d):
    return st.builds(lambda re, im: re + 1j * im, arrays(float, (d, d), elements=finite), arrays(float, (d, d), elements=finite))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(complex_matrices))
def test_expand_reconstruct_round_trip(m):
    assert np.abs(reconstruct(expand(m)) - m).max() < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda d: st.tuples(complex_matrices(d), complex_matrices(d))))
def test_inner_product_conjugate_symmetric(pair):
    a, b = pair
    assert abs(op_inner(a, b) - np.conj(op_inner(b, a))) < 1e-9


def test_inner_product_is_trace_form():
    a = np.array([[1, 2j], [0, 3]])
    b = np.array([[0, 1], [1j, 2]])
    assert op_inner(a, b) == pytest.approx(np.trace(a.conj().T @ b))


def test_inner_product_shape_mismatch():
    with pytest.raises(ShapeError):
        op_inner(np.eye(2), np.eye(3))


def test_link_is_sum_of_matrix_unit_pairs():
    d = 3
    phi = max_entangled_link(d)
    ref = sum(np.kron(np.eye(d)[:, [i]] @ np.eye(d)[[j]], np.eye(d)[:, [i]] @ np.eye(d)[[j]]) for i in range(d) for j in range(d))
    assert np.allclose(phi, ref)
    assert np.trace(phi) == pytest.approx(d)


def test_choi_of_identity_is_link():
    assert np.allclose(choi_state([np.eye(2)], 2), max_entangled_link(2))


def test_choi_trace_preserving_marginal(rng):
    u = haar_unitary(rng, 4)
    env = np.array([1, 0])
    kraus = [np.kron(np.eye(2), e[None, :].conj()) @ u @ np.kron(np.eye(2), env[:, None]) for e in np.eye(2)]
    c = labeled(["A", "S"], [2, 2], choi_state(kraus, 2))
    assert np.allclose(partial_trace(c, "S").matrix, np.eye(2))


def test_choi_rejects_wrong_shapes():
    with pytest.raises(ShapeError):
        choi_state([np.eye(3)], 2)
    with pytest.raises(ShapeError):
        choi_state([], 2)


def test_labeled_operator_is_read_only():
    op = labeled(["A"], [2], np.eye(2))
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 5


def test_labeled_operator_validates():
    with pytest.raises(ShapeError):
        labeled(["A", "B"], [2, 2], np.eye(3))
    with pytest.raises(LabelError):
        labeled(["A", "A"], [2, 2], np.eye(4))


def test_unknown_label_message_is_plain():
    op = labeled(["A"], [2], np.eye(2))
    with pytest.raises(LabelError) as err:
        partial_trace(op, "B")
    assert "B" in str(err.value)


def test_partial_contract_of_product(rng):
    a, b = random_density(rng, 2), random_density(rng, 3)
    op = tensor_product(labeled(["A"], [2], a), labeled(["B"], [3], b))
    dual = random_density(rng, 2)
    out = partial_contract(op, "A", dual)
    assert out.labels == ("B",)
    assert np.allclose(out.matrix, op_inner(dual, a) * b)


def test_partial_contract_order_independent(rng):
    mats = [random_density(rng, 2) for _ in range(3)]
    op = tensor_product(*(labeled([lab], [2], m) for lab, m in zip("ABC", mats)))
    duals = [random_density(rng, 2) for _ in range(2)]
    one = partial_contract(partial_contract(op, "A", duals[0]), "C", duals[1])
    two = partial_contract(partial_contract(op, "C", duals[1]), "A", duals[0])
    assert np.allclose(one.matrix, two.matrix)


def test_contract_all_matches_sequential(rng):
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    op = labeled(["A", "B", "C"], [2, 2, 2], g)
    ds = [random_density(rng, 2) for _ in range(3)]
    full = contract_all(op, np.kron(np.kron(ds[0], ds[1]), ds[2]))
    step = partial_contract(partial_contract(partial_contract(op, "A", ds[0]), "B", ds[1]), "C", ds[2])
    assert complex(step.matrix[0, 0]) == pytest.approx(full)


def test_permute_round_trip(rng):
    g = rng.normal(size=(12, 12))
    op = labeled(["A", "B"], [3, 4], g)
    back = permute(permute(op, ["B", "A"]), ["A", "B"])
    assert np.array_equal(back.matrix, op.matrix)


def test_permute_swaps_kron_factors(rng):
    a, b = random_density(rng, 2), random_density(rng, 3)
    op = labeled(["A", "B"], [2, 3], np.kron(a, b))
    assert np.allclose(permute(op, ["B", "A"]).matrix, np.kron(b, a))


def test_sandwich_and_dephase(rng):
    r = random_density(rng, 2)
    op = labeled(["A"], [2], r)
    u = haar_unitary(rng, 2)
    assert np.allclose(sandwich(op, "A", u).matrix, u @ r @ u.conj().T)
    d = dephase(op, "A", np.eye(2))
    assert np.allclose(d.matrix, np.diag(np.diag(r)))


def test_density_checks():
    assert is_density_matrix(np.eye(2) / 2)
    assert not is_density_matrix(np.diag([1.2, -0.2]))


def test_orthonormal_basis_rejects_skewed():
    with pytest.raises(DomainError):
        orthonormal_basis([[1, 0], [1, 1]])


def test_default_tol_env(monkeypatch):
    monkeypatch.setenv("LGPS_TOL", "1e-6")
    assert default_tol() == 1e-6
    monkeypatch.setenv("LGPS_TOL", "-1")
    with pytest.raises(DomainError):
        default_tol()
    monkeypatch.delenv("LGPS_TOL")
    assert default_tol() == 1e-10


def test_operator_arithmetic(rng):
    a = labeled(["A"], [2], random_density(rng, 2))
    b = labeled(["A"], [2], random_density(rng, 2))
    assert np.allclose((a + b - b).matrix, a.matrix)
    assert isinstance(a.scaled(2.0), LabeledOperator)
    with pytest.raises(LabelError):
        a + labeled(["B"], [2], np.eye(2))
