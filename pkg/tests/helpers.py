"""Scenario builders shared by several test modules."""

import numpy as np

from lgps import Instrument, Scenario

Z = [np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)]


def _qubit_permutation(f):
    """Unitary on S (x) E1 (x) E2 sending |s e1 e2> to |f(s, e1, e2)>."""
    u = np.zeros((8, 8), dtype=complex)
    for i in range(8):
        s, e1, e2 = (i >> 2) & 1, (i >> 1) & 1, i & 1
        a, b, c = f(s, e1, e2)
        u[4 * a + 2 * b + c, i] = 1
    return u


COPY_TWICE = _qubit_permutation(lambda s, e1, e2: (s, e1 ^ s, e2 ^ s))
SWAP_S_E1 = _qubit_permutation(lambda s, e1, e2: (e1, s, e2))


def z_instrument():
    return Instrument.projective(Z, (1.0, -1.0))


def conditional_reset_scenario(rho0, v):
    """Environment records S's z value at step 1 and feeds ``v`` of it back at step 2.

    Two environment qubits copy the value; the second one is never read
    again, which decoheres the record so the memory is classical.
    """
    e0 = np.zeros((4, 4), dtype=complex)
    e0[0, 0] = 1
    u2 = np.kron(v, np.eye(4)) @ SWAP_S_E1
    return Scenario(rho0, e0, (COPY_TWICE, u2))


def conditional_reset_components(rho0, v):
    """Expected decomposition over the recorded value y on (S1,A1) | (S2,A2) | (S3)."""
    comps = []
    for y in range(2):
        p = np.outer(Z[y], Z[y])
        comps.append((0.5, 2 * np.kron(rho0, p.conj()), np.kron(p, np.eye(2)), v @ p @ v.conj().T))
    return comps
