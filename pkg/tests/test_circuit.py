import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barren_lab.circuit import (
    GATE_NAMES, CircuitInvariantError, CircuitSchemaError, EnsembleSpec, MalformedCircuitJSON,
    Observable, circuit_to_dict, deserialize, entangler_pairs, brick_example_circuit, format_float,
    observable_matrix, parse_observable, sample_circuit, sample_codes, serialize,
)
from barren_lab.matkernel import I2, Z, kron


def test_sample_deterministic():
    spec = EnsembleSpec(1, 1, samples=1, master_seed=7)
    assert serialize(sample_circuit(spec, 0)) == serialize(sample_circuit(spec, 0))


def test_distinct_indices_distinct_streams():
    spec = EnsembleSpec(3, 4, samples=10, master_seed=7)
    assert serialize(sample_circuit(spec, 0)) != serialize(sample_circuit(spec, 1))


def test_index_out_of_range():
    with pytest.raises(IndexError):
        sample_codes(EnsembleSpec(2, 2, samples=3), 3)


def test_full_identity_replacement_has_no_parameters():
    spec = EnsembleSpec(3, 4, replacement_mode="identity", replacement_fraction=1.0, samples=2)
    c = sample_circuit(spec, 1)
    assert c.num_params == 0
    assert all(s.axis == "ID" for _, _, s in c.slots())


def test_replacement_count_exact():
    spec = EnsembleSpec(4, 5, replacement_mode="hadamard", replacement_fraction=0.25, samples=5)
    for i in range(5):
        codes, theta = sample_codes(spec, i)
        assert (codes == GATE_NAMES.index("H")).sum() == 5
        assert np.all(theta[codes >= 3] == 0.0)


def test_brick_layout_matches_four_qubit_example():
    spec = EnsembleSpec(4, 3, samples=1)
    c = sample_circuit(spec, 0)
    for layer in c.layers:
        assert set(layer.entanglers) == {(0, 1), (2, 3), (1, 2)}
    assert entangler_pairs("brick", 4)[:2] == ((0, 1), (2, 3))
    assert entangler_pairs("brick", 4)[2:] == ((1, 2),)


def test_other_patterns():
    assert entangler_pairs("ladder", 4) == ((0, 1), (1, 2), (2, 3))
    assert entangler_pairs("ring", 4) == ((0, 1), (1, 2), (2, 3), (3, 0))
    assert entangler_pairs("ring", 2) == ((0, 1),)
    assert entangler_pairs("none", 4) == ()


def test_axis_frequencies_binomial():
    spec = EnsembleSpec(10, 30, samples=100, master_seed=11)
    codes = np.concatenate([sample_codes(spec, i)[0].ravel() for i in range(100)])
    assert codes.size == 30_000
    sigma = math.sqrt(codes.size * (1 / 3) * (2 / 3))
    for axis in range(3):
        assert abs((codes == axis).sum() - codes.size / 3) <= 3 * sigma


def test_theta_moments():
    spec = EnsembleSpec(10, 100, samples=100, master_seed=5)
    theta = np.concatenate([sample_codes(spec, i)[1].ravel() for i in range(100)])
    assert theta.size == 100_000
    assert theta.min() >= -2 * np.pi and theta.max() < 2 * np.pi
    var_t = 4 * np.pi**2 / 3
    assert abs(theta.mean()) <= 3 * math.sqrt(var_t / theta.size)
    # Var(theta^2) = E[theta^4] - E[theta^2]^2 with E[theta^4] = (2 pi)^4 / 5
    var_t2 = (2 * np.pi) ** 4 / 5 - var_t**2
    assert abs((theta**2).mean() - var_t) <= 3 * math.sqrt(var_t2 / theta.size)


def test_observable_matrix_examples():
    assert np.allclose(observable_matrix("ZZ"), kron(Z, Z))
    assert np.allclose(observable_matrix("ZI"), kron(Z, I2))
    assert np.allclose(observable_matrix("IIII"), np.eye(16))


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet="IXYZ", min_size=1, max_size=4))
def test_observable_squares_to_identity(s):
    m = observable_matrix(s)
    assert np.allclose(m @ m, np.eye(m.shape[0]))
    assert np.allclose(m, m.conj().T)


def test_observable_parse_errors():
    with pytest.raises(ValueError):
        Observable("ZQ")
    with pytest.raises(ValueError):
        parse_observable("ZZZ", 2)


@pytest.mark.parametrize(
    "text,n,expected",
    [
        ("Z^n", 3, "ZZZ"),
        ("Z^2I^2", 4, "ZZII"),
        ("(ZI)^3", 6, "ZIZIZI"),
        ("Z^2I^*", 5, "ZZIII"),
        ("XYZ", None, "XYZ"),
    ],
)
def test_observable_shorthands(text, n, expected):
    assert parse_observable(text, n).pauli_string == expected


def test_z_on_and_support():
    o = Observable.z_on(4, [0, 2])
    assert o.pauli_string == "ZIZI"
    assert o.support == (0, 2)


def test_brick_example_round_trip():
    c = brick_example_circuit(theta=np.linspace(-3, 3, 12), axes="XYZXYZXYZXYZ")
    text = serialize(c)
    back = deserialize(text)
    assert back == c
    assert serialize(back) == text


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), d=st.integers(1, 4),
       mode=st.sampled_from(["none", "identity", "hadamard"]))
def test_sampled_round_trip_bitwise(seed, n, d, mode):
    frac = 0.0 if mode == "none" else 0.5
    spec = EnsembleSpec(n, d, replacement_mode=mode, replacement_fraction=frac, master_seed=seed)
    c = sample_circuit(spec, 3)
    back = deserialize(serialize(c))
    assert back.theta == c.theta
    assert back == c


def test_floats_carry_17_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(2.0) == "2.0"
    assert float(format_float(math.pi)) == math.pi


def test_missing_layers_is_schema_error():
    obj = circuit_to_dict(brick_example_circuit())
    del obj["layers"]
    with pytest.raises(CircuitSchemaError):
        deserialize(json.dumps(obj))


def test_duplicate_param_is_invariant_error():
    obj = circuit_to_dict(brick_example_circuit())
    obj["layers"][0]["rotations"][1]["param"] = 0
    with pytest.raises(CircuitInvariantError):
        deserialize(json.dumps(obj))


def test_malformed_json():
    with pytest.raises(MalformedCircuitJSON):
        deserialize("{not json")


def test_bad_cz_pair_rejected():
    obj = circuit_to_dict(brick_example_circuit())
    obj["layers"][0]["entanglers"].append([1, 1])
    with pytest.raises(CircuitInvariantError):
        deserialize(json.dumps(obj))


def test_error_classes_are_distinct():
    assert len({CircuitSchemaError, CircuitInvariantError, MalformedCircuitJSON}) == 3
    assert not issubclass(CircuitSchemaError, CircuitInvariantError)


def test_ensemble_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(2, 2, replacement_mode="none", replacement_fraction=0.5)
    with pytest.raises(ValueError):
        EnsembleSpec(2, 2, entangler_pattern="star")
    with pytest.raises(ValueError):
        EnsembleSpec(0, 2)
