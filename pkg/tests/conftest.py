import itertools
import random

import pytest

from cascad.circuit import Circuit


def random_circuit(seed: int, num_pis: int = 6, num_gates: int = 40,
                   not_prob: float = 0.4) -> Circuit:
    """Random AIG: each new AND picks two earlier signals, possibly inverted."""
    rng = random.Random(seed)
    c = Circuit()
    for _ in range(num_pis):
        c.add_pi()
    for _ in range(num_gates):
        a = rng.randrange(len(c))
        b = rng.randrange(len(c))
        if rng.random() < not_prob:
            a = c.add_not(a)
        if rng.random() < not_prob:
            b = c.add_not(b)
        c.add_and(a, b)
    # output: the last gate (deepest by construction bias)
    c.set_outputs([len(c) - 1])
    return c


def eval_circuit(circuit: Circuit, pi_values: dict[int, bool]) -> dict[int, bool]:
    """One-pattern-at-a-time reference interpreter (oracle for simulate)."""
    from cascad.circuit import GateKind
    values: dict[int, bool] = {}
    for i, g in enumerate(circuit.gates):
        if g.kind is GateKind.PI:
            values[i] = pi_values[i]
        elif g.kind is GateKind.CONST0:
            values[i] = False
        elif g.kind is GateKind.NOT:
            values[i] = not values[g.fanins[0]]
        elif g.kind is GateKind.VIRTUAL_DIV:
            continue
        else:
            values[i] = values[g.fanins[0]] and values[g.fanins[1]]
    return values


def all_input_rows(circuit: Circuit):
    """(row_index, pi_values) in PI-index-major binary counting order."""
    pis = circuit.primary_inputs
    m = len(pis)
    for r in range(1 << m):
        yield r, {pis[j]: bool((r >> (m - 1 - j)) & 1) for j in range(m)}


def enum_cnf_sat(num_vars: int, clauses) -> bool:
    for bits in itertools.product([False, True], repeat=num_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in cl) for cl in clauses):
            return True
    return False


def random_3cnf(rng: random.Random, num_vars: int, ratio: float = 4.3):
    m = max(1, int(num_vars * ratio))
    return [[rng.choice([1, -1]) * v for v in rng.sample(range(1, num_vars + 1), 3)]
            for _ in range(m)]


@pytest.fixture
def toy_and():
    """c = a AND b over two PIs."""
    c = Circuit()
    a, b = c.add_pi(), c.add_pi()
    g = c.add_and(a, b)
    c.set_outputs([g])
    return c, a, b, g
