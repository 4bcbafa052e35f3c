import json
import math
import os
import sys

sys.path.insert(0, os.environ.get("CRNNN_PYMODULE_DIR", "."))

import _crnnn  # noqa: E402


def test_activations():
    assert _crnnn.activate("relu", -2.0) == 0.0
    assert math.isclose(
        _crnnn.activate("implicit_root", 0.0, h=1.0, q=3), 0.5 ** (1 / 3), rel_tol=1e-14
    )
    # derivative matches central differences
    eps = 1e-6
    fd = (
        _crnnn.activate("smoothed_relu", 0.4 + eps, h=0.7)
        - _crnnn.activate("smoothed_relu", 0.4 - eps, h=0.7)
    ) / (2 * eps)
    assert math.isclose(_crnnn.activate_derivative("smoothed_relu", 0.4, h=0.7), fd, rel_tol=1e-8)


def test_compile_and_simulate_matches_forward():
    params = _crnnn.random_params_json([2, 3, 2], seed=5)
    net_text = _crnnn.compile_to_text(params)
    assert "->" in net_text
    assert _crnnn.validate_compilation(params, trials=5, seed=1) <= 1e-12

    d = [0.3, 0.8]
    result = _crnnn.simulate(net_text, inputs=d, t_end=50.0)
    assert result["species"][:3] == ["X_1_0", "X_1_1", "X_1_2"]
    out = _crnnn.forward_output(params, d)
    # last two dynamic species are the output layer
    assert all(
        abs(a - b) <= 1e-6 for a, b in zip(result["final_state"][-2:], out)
    )


def test_gradients_shape():
    params = _crnnn.random_params_json([3, 4, 2], seed=7)
    g = _crnnn.gradients(params, [0.1, 0.2, 0.3], [1.0, 10.0])
    assert len(g["weights"]) == 2
    assert len(g["weights"][0]) == 4 and len(g["weights"][0][0]) == 3
    assert len(g["biases"][1]) == 2


def test_verify_reports():
    params = _crnnn.random_params_json([2, 2], seed=9)
    report = json.loads(
        _crnnn.verify_equivalence_json(params, [0.4, 0.6], [0.0, 0.0], t_final=50.0, tol=1e-6)
    )
    assert report["passed"] is True

    witness = json.loads(_crnnn.counterexample_json())
    assert witness["expected_fail_by_design"] is True
    assert abs(witness["linear_slope"] - 1.0) < 1e-2


def test_errors_map_to_python():
    try:
        _crnnn.activate("no_such_kind", 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
