import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import haar_unitary, random_density, random_instrument, random_plan, random_scenario
from lgps import (
    Instrument,
    ProcessState,
    Scenario,
    build_process_state,
    markov_product_state,
    n_point_operation,
    reduce_process_state,
    sequential_oracle,
    joint_probability,
)
from lgps.errors import DomainError, InvalidInstrumentError, ShapeError, UsageError
from lgps.opstate import choi_state, labeled, max_entangled_link
from lgps.process import (
    check_process_state,
    hamiltonian_unitary,
    prefix_probability,
    probability,
    process_labels,
)


def test_labels():
    assert process_labels(3) == ("S1", "A1", "S2", "A2", "S3")
    assert process_labels(1) == ("S1",)


def test_hamiltonian_unitary_matches_series():
    h = np.array([[1.0, 0.5j], [-0.5j, -0.3]])
    tau = 0.7
    ref = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, 40):
        term = term @ (-1j * tau * h) / k
        ref = ref + term
    assert np.allclose(hamiltonian_unitary(h, tau), ref, atol=1e-13)


def test_hamiltonian_must_be_hermitian():
    with pytest.raises(DomainError):
        hamiltonian_unitary(np.array([[0, 1], [0, 0]]), 1.0)


def test_scenario_validation():
    with pytest.raises(ShapeError):
        Scenario(np.eye(2) / 2, np.eye(2) / 2, (np.eye(2),))
    with pytest.raises(DomainError):
        Scenario(np.eye(2) / 2, np.eye(1), ()).validate()
    with pytest.raises(DomainError):
        Scenario(np.eye(2), np.eye(1), (np.eye(2),)).validate()
    with pytest.raises(DomainError):
        Scenario(np.eye(2) / 2, np.eye(1), (2 * np.eye(2),)).validate()


def test_instrument_construction():
    inst = Instrument.computational(3)
    assert inst.values == (1.0, -1.0, -1.0)
    assert inst.n_outcomes == 3
    assert inst.is_dichotomic()
    assert not Instrument.computational(3, (1.0, 0.0, -1.0)).is_dichotomic()
    assert Instrument.computational(2).is_dichotomic()
    with pytest.raises(InvalidInstrumentError):
        Instrument.computational(2, (1.0,))
    with pytest.raises(UsageError):
        Instrument.unmeasured().projector(0)
    with pytest.raises(DomainError):
        Instrument.computational(2).projector(2)


def test_process_state_is_valid(rng):
    for _ in range(10):
        ps = build_process_state(random_scenario(rng, n_steps=rng.integers(1, 4)))
        check_process_state(ps)


def test_process_state_rejects_bad_labels():
    with pytest.raises(UsageError):
        ProcessState(("S1", "S2"), (2, 2), np.eye(4))
    with pytest.raises(ShapeError):
        ProcessState(("S1", "A1", "S2"), (2, 2, 3), np.eye(12))


def test_identity_process_is_rho_times_links():
    rho = np.diag([0.6, 0.4]).astype(complex)
    ps = build_process_state(Scenario(rho, np.eye(1), (np.eye(2), np.eye(2))))
    ref = np.kron(np.kron(rho, max_entangled_link(2)), max_entangled_link(2))
    assert np.allclose(ps.matrix, ref)


def test_probabilities_sum_to_one(rng):
    ps = build_process_state(random_scenario(rng))
    t = joint_probability(ps, random_plan(rng))
    assert t.total() == pytest.approx(1.0, abs=1e-12)
    assert (t.p >= -1e-12).all()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3), st.sampled_from([1, 2, 3]))
def test_process_state_agrees_with_sequential_oracle(seed, n_steps, de):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, d=2, de=de, n_steps=n_steps)
    ps = build_process_state(s)
    plan = [random_instrument(rng, 2) if rng.random() < 0.8 else Instrument.unmeasured() for _ in range(n_steps + 1)]
    a = joint_probability(ps, plan).p
    b = sequential_oracle(s, plan).p
    assert np.abs(a - b).max() < 1e-10


def test_qutrit_oracle(rng):
    s = random_scenario(rng, d=3, de=2, n_steps=2)
    plan = random_plan(rng, d=3)
    assert np.abs(joint_probability(build_process_state(s), plan).p - sequential_oracle(s, plan).p).max() < 1e-10


def test_n_point_operation_requires_matching_outcomes():
    plan = [Instrument.computational(2), Instrument.unmeasured()]
    with pytest.raises(UsageError):
        n_point_operation(plan, [0], 2)
    with pytest.raises(UsageError):
        n_point_operation(plan, [None, None], 2)
    with pytest.raises(UsageError):
        n_point_operation(plan, [0, 1], 2)


def test_reduced_state_carries_prefix_probability(rng):
    s = random_scenario(rng)
    ps = build_process_state(s)
    plan = random_plan(rng)
    t = joint_probability(ps, plan)
    for x in range(2):
        red = reduce_process_state(ps, [(plan[0], x)])
        assert red.labels == ("S2", "A2", "S3")
        assert prefix_probability(red) == pytest.approx(t.p[x].sum(), abs=1e-12)
    with pytest.raises(UsageError):
        reduce_process_state(ps, [(plan[0], 0), (plan[1], 0), (plan[2], 0)])


def test_probability_rejects_wrong_plan_length(rng):
    ps = build_process_state(random_scenario(rng))
    with pytest.raises(UsageError):
        probability(ps, [Instrument.computational(2)] * 2, [0, 0])


def test_markov_product_equals_memoryless_build(rng):
    rho = random_density(rng, 2)
    # fresh environment at every step gives a memoryless process
    us = [haar_unitary(rng, 4) for _ in range(2)]
    e0 = np.diag([1.0, 0.0])
    chois = []
    for u in us:
        kraus = [np.kron(np.eye(2), e[None, :]) @ u @ np.kron(np.eye(2), np.array([[1.0], [0.0]])) for e in np.eye(2)]
        chois.append(choi_state(kraus, 2))
    ps = markov_product_state(chois, rho)
    check_process_state(ps)
    plan = random_plan(rng)
    for x in np.ndindex(2, 2, 2):
        seq = rho
        p = 1.0
        for j, inst in enumerate(plan):
            proj = inst.projector(x[j])
            p *= np.trace(proj @ seq).real
            if j < 2:
                out = proj @ seq @ proj / max(np.trace(proj @ seq).real, 1e-300)
                big = us[j] @ np.kron(out, e0) @ us[j].conj().T
                seq = big.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        assert probability(ps, plan, list(x)).real == pytest.approx(p, abs=1e-12)


def test_markov_product_rejects_bad_steps():
    with pytest.raises(DomainError):
        markov_product_state([2 * max_entangled_link(2)], np.eye(2) / 2)
    with pytest.raises(ShapeError):
        markov_product_state([np.eye(9)], np.eye(2) / 2)
    with pytest.raises(DomainError):
        markov_product_state([], np.eye(2) / 2)


def test_check_process_state_flags_unnormalized(rng):
    ps = build_process_state(random_scenario(rng))
    with pytest.raises(DomainError):
        check_process_state(ps.with_matrix(2 * ps.matrix))
