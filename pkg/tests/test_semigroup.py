import numpy as np
import pytest

from zenolab.metrics import diamond_bracket, relative_entropy
from zenolab.opalg import (
    I2, X, Y, Z, HilbertSpace, Superoperator, ket, partial_trace, projector, random_density,
    tensor,
)
from zenolab.scenarios import build_chain, build_two_qubit, two_qubit_e0
from zenolab.semigroup import (
    GeneratorError, LindbladSpec, apply_to_operator, assemble, channel_at, complete_depolarize,
    dephasing_generator, depolarize_sites, evolve, fixed_point_split, gksl_dissipator,
    hamiltonian_part, projection_chain, replacement_generator, rotated_projector,
    spec_from_model, zeno_generator, zeno_limit,
)

Q1 = HilbertSpace([2])
Q2 = HilbertSpace([2, 2])


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_hamiltonian_part_examples():
    assert np.allclose(hamiltonian_part(np.zeros((2, 2)), Q1).matrix, 0)
    lh = hamiltonian_part(Z / 2, Q1)
    plus = projector((ket("0") + ket("1")) / np.sqrt(2))
    assert np.allclose(channel_at(lh, 2 * np.pi)(plus), plus, atol=1e-12)
    assert not np.allclose(channel_at(lh, np.pi)(plus), plus)
    vals = np.sort_complex(np.linalg.eigvals(hamiltonian_part(Z, Q1).matrix))
    assert np.allclose(vals, [-2j, 0, 0, 2j])


def test_hamiltonian_must_be_hermitian():
    with pytest.raises(GeneratorError):
        hamiltonian_part(np.array([[0, 1], [0, 0]], dtype=complex), Q1)


def test_replacement_generator_examples(rng):
    assert np.allclose(replacement_generator(Superoperator.identity(Q1)).matrix, 0)
    s = replacement_generator(depolarize_sites(Q2, [0]))
    rho = random_density(4, rng)
    fixed = channel_at(s, 50.0)(rho)
    assert np.allclose(fixed, np.kron(I2 / 2, partial_trace(rho, [2, 2], [1])), atol=1e-12)
    half = channel_at(s, np.log(2))(rho)
    target = 0.5 * rho + 0.5 * np.kron(I2 / 2, partial_trace(rho, [2, 2], [1]))
    assert np.allclose(half, target, atol=1e-12)


def test_replacement_generator_rejects_non_projector():
    with pytest.raises(GeneratorError):
        replacement_generator(Superoperator.conjugation(X, Q1))


def test_dephasing_generator_examples(rng):
    assert np.allclose(dephasing_generator(I2, Q1).matrix, 0)
    s = dephasing_generator(Z, Q1)
    rho = random_density(2, rng)
    out = channel_at(s, 0.3)(rho)
    assert np.isclose(out[0, 1], np.exp(-0.6) * rho[0, 1])
    assert np.isclose(out[0, 0], rho[0, 0])
    diag = np.diag([0.3, 0.7]).astype(complex)
    assert np.allclose(channel_at(s, 2.0)(diag), diag)


def test_gksl_examples():
    assert np.allclose(gksl_dissipator([], Q1).matrix, 0)
    g = 0.7
    damp = gksl_dissipator([np.sqrt(g) * np.array([[0, 1], [0, 0]], dtype=complex)], Q1)
    for t in (0.1, 1.0, 4.0):
        out = channel_at(damp, t)(projector(ket("1")))
        assert np.isclose(out[1, 1].real, np.exp(-g * t))
    dep = gksl_dissipator([np.sqrt(g / 4) * p for p in (X, Y, Z)], Q1)
    ref = replacement_generator(complete_depolarize(Q1)) * g
    assert np.allclose(dep.matrix, ref.matrix, atol=1e-10)


def test_spec_validation():
    with pytest.raises(GeneratorError):
        LindbladSpec(Q1, Z, ((Superoperator.identity(Q1), 1.0),))
    with pytest.raises(GeneratorError):
        LindbladSpec(Q1, Z, ((dephasing_generator(Z, Q1), -1.0),))
    with pytest.raises(GeneratorError):
        spec_from_model({"factors": [2], "stochastic": [{"kind": "bogus", "target": "Z"}]})


def test_empty_spec_is_zero():
    assert np.allclose(assemble(LindbladSpec(Q1, np.zeros((2, 2)), ())).matrix, 0)


def test_model_forms():
    model = {"factors": [2, 2], "hamiltonian_terms": [{"pauli_string": "ZX", "coefficient": 0.5}],
             "stochastic": [{"kind": "replace", "target": [0], "weight": 3.0}]}
    l = assemble(spec_from_model(model))
    ref = hamiltonian_part(tensor(Z, X) / 2, Q2) + 3.0 * replacement_generator(depolarize_sites(Q2, [0]))
    assert np.allclose(l.matrix, ref.matrix)
    g = {"factors": [2], "stochastic": [{"kind": "gksl", "target": [{"pauli_string": "Z",
                                                                     "coefficient": 0.5}]}]}
    assert np.allclose(assemble(spec_from_model(g)).matrix,
                       gksl_dissipator([0.5 * Z], Q1).matrix)


def test_chain_model_terms():
    spec = build_chain(4, 1.0)
    h = np.zeros((16, 16), dtype=complex)
    for j in range(3):
        for p in (X, Y):
            ops = [I2] * 4
            ops[j] = ops[j + 1] = p
            h += 2 * np.pi * tensor(*ops)
    assert np.allclose(spec.hamiltonian, h)


def test_evolve_examples(rng):
    s = replacement_generator(complete_depolarize(Q1))
    rho = random_density(2, rng)
    assert np.allclose(evolve(s, rho, 0.0), rho)
    assert np.allclose(evolve(s, rho, 0.8), np.exp(-0.8) * rho + (1 - np.exp(-0.8)) * I2 / 2)
    l0 = assemble(build_two_qubit(0.0))
    r2 = random_density(4, rng)
    assert np.allclose(evolve(l0, r2, 4 * np.pi), r2, atol=1e-10)
    with pytest.raises(ValueError):
        evolve(s, rho, -1.0)


def test_channel_at_examples():
    s = replacement_generator(complete_depolarize(Q1))
    assert np.allclose(channel_at(s, 0.0).matrix, np.eye(4))
    l = assemble(build_two_qubit(2.0))
    assert np.allclose((channel_at(l, 0.3) @ channel_at(l, 0.5)).matrix,
                       channel_at(l, 0.8).matrix, atol=1e-9)
    t = 0.4
    w = np.sort(np.linalg.eigvalsh(channel_at(s, t).choi()))
    expect = np.sort([(1 + 3 * np.exp(-t)) / 4] + [(1 - np.exp(-t)) / 4] * 3)
    assert np.allclose(w, expect)


@pytest.mark.parametrize("builder", [lambda: build_two_qubit(1.5), lambda: build_chain(3, 2.0)])
def test_channels_are_cptp(builder):
    l = assemble(builder())
    for t in (0.01, 0.1, 1.0, 10.0):
        assert channel_at(l, t).is_cptp(1e-8)


def test_fixed_point_of_local_depolarizing(rng):
    s = replacement_generator(depolarize_sites(Q2, [0]))
    split = fixed_point_split(s)
    rho = random_density(4, rng)
    assert np.allclose(split.projector(rho), np.kron(I2 / 2, partial_trace(rho, [2, 2], [1])))
    assert not split.has_rotation
    assert np.isclose(split.decay_gap, 1.0)


def test_two_qubit_fixed_point_keeps_conserved_x(rng):
    # I (x) X commutes with Z (x) X and survives the replacement of qubit A,
    # so the long-time state keeps <X_B>
    split = fixed_point_split(assemble(build_two_qubit(1.0)))
    rho = random_density(4, rng)
    xb = np.trace(np.kron(I2, X) @ rho).real
    assert np.allclose(split.projector(rho), np.kron(I2 / 2, (I2 + xb * X) / 2), atol=1e-12)
    e = split.projector
    assert np.allclose((e @ e).matrix, e.matrix, atol=1e-8)


def test_pure_rotation_split():
    split = fixed_point_split(hamiltonian_part(Z, Q1))
    assert np.allclose(split.projector.matrix, np.eye(4), atol=1e-10)
    assert split.has_rotation
    rho = np.array([[0.6, 0.3], [0.3, 0.4]], dtype=complex)
    assert np.allclose(split.fixed_projector(rho), np.diag([0.6, 0.4]))
    assert np.allclose(split.rotation(0.7).matrix, channel_at(hamiltonian_part(Z, Q1), 0.7).matrix)


def test_split_commutes_and_converges(rng):
    l = assemble(build_chain(2, 1.0))
    split = fixed_point_split(l)
    e = split.projector
    ch = channel_at(l, 0.37)
    assert np.allclose((e @ ch).matrix, (ch @ e).matrix, atol=1e-8)
    big_t = 50 / split.decay_gap
    diff = channel_at(l, big_t) - split.rotation(big_t)
    assert diamond_bracket(diff).upper <= 1e-6


def test_zeno_generator_examples():
    l = assemble(build_two_qubit(0.0))
    assert np.allclose(zeno_generator(Superoperator.identity(Q2), l).matrix, l.matrix)
    e0 = depolarize_sites(Q2, [0])
    assert np.allclose(apply_to_operator(e0, tensor(Z, X) / 2), 0)
    assert np.allclose(zeno_generator(e0, l).matrix, 0, atol=1e-12)
    chain = build_chain(4, 1.0)
    e0c = depolarize_sites(chain.space, [0])
    hz = apply_to_operator(e0c, chain.hamiltonian)
    expect = np.zeros((16, 16), dtype=complex)
    for j in (1, 2):
        for p in (X, Y):
            ops = [I2] * 4
            ops[j] = ops[j + 1] = p
            expect += 2 * np.pi * tensor(*ops)
    assert np.allclose(hz, expect, atol=1e-12)


def test_zeno_limit_is_projected():
    l = assemble(build_two_qubit(0.0))
    e0 = depolarize_sites(Q2, [0])
    assert np.allclose(zeno_limit(e0, l, 1.0).matrix, e0.matrix, atol=1e-12)


def test_rotated_projector_examples():
    e0 = depolarize_sites(Q2, [0])
    h = tensor(Z, X) / 2
    assert np.allclose(rotated_projector(e0, h, 0.0).matrix, e0.matrix)
    hc = tensor(I2, Z)
    assert np.allclose(rotated_projector(e0, hc, 0.9).matrix, e0.matrix, atol=1e-12)
    et = rotated_projector(e0, h, 0.3)
    assert np.allclose((et @ et).matrix, et.matrix, atol=1e-10)
    u = np.cos(0.15) * np.eye(4) - 1j * np.sin(0.15) * tensor(Z, X)
    direct = Superoperator.conjugation(u, Q2) @ e0 @ Superoperator.conjugation(u.conj().T, Q2)
    assert np.allclose(et.matrix, direct.matrix, atol=1e-12)


def test_projection_chain_examples():
    e0 = depolarize_sites(Q2, [0])
    h = tensor(Z, X) / 2
    assert np.allclose(projection_chain(e0, h, 1.0, 1).matrix,
                       (rotated_projector(e0, h, 1.0) @ e0).matrix)
    hc = tensor(I2, Z)
    for k in (1, 5):
        assert np.allclose(projection_chain(e0, hc, 1.0, k).matrix, e0.matrix, atol=1e-12)
    with pytest.raises(ValueError):
        projection_chain(e0, h, 1.0, 0)


def test_commuting_hamiltonian_leaves_decay_unchanged(rng):
    # [S, i[H, .]] = 0: the Hamiltonian only rotates inside the fixed algebra
    h = tensor(I2, Z)
    s = replacement_generator(depolarize_sites(Q2, [0]))
    with_h = s + hamiltonian_part(h, Q2)
    e = depolarize_sites(Q2, [0])
    for _ in range(5):
        rho = random_density(4, rng)
        for t in (0.2, 1.0):
            r_t = channel_at(hamiltonian_part(h, Q2), t)
            d1 = relative_entropy(channel_at(with_h, t)(rho), (r_t @ e)(rho))
            d2 = relative_entropy(channel_at(s, t)(rho), e(rho))
            assert abs(d1 - d2) < 1e-9


def test_projection_chain_rate():
    # limit R_{exp(i(E0(H) - H))} E0, valid here because E0(H) = 0 commutes with H
    h = build_two_qubit(1.0).hamiltonian
    e0 = two_qubit_e0()
    w, v = np.linalg.eigh(apply_to_operator(e0, h) - h)
    limit = Superoperator.conjugation((v * np.exp(1j * w)) @ v.conj().T, Q2) @ e0
    d = {k: diamond_bracket(projection_chain(e0, h, 1.0, k) - limit).upper for k in (64, 128, 256)}
    # leading coefficient of C/k + D/k^2 from the two coarse points
    c = 2 * 128 * d[128] - 64 * d[64]
    assert d[256] <= c / 256
    assert d[64] > d[128] > d[256]
