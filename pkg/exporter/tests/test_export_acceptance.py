"""Acceptance: exported files agree with the verifier's inference engine."""

import numpy as np
import jsonschema
from sklearn.neural_network import MLPClassifier

from modelexport import export, make_oracle_net, oracle_forward, oracle_input_shape, oracle_names
from saferadius.nn import MODEL_SCHEMA, forward, load_model

TOL = 1e-5


def _random_inputs(shape, count=10, seed=101):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(count,) + tuple(shape))


def _trained_mlp(seed=5):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, size=(150, 4))
    y = (x @ np.array([1.0, -2.0, 0.5, 1.5]) > 0.4).astype(int) + (x[:, 0] > 0.8)
    clf = MLPClassifier(hidden_layer_sizes=(6,), max_iter=800, random_state=0)
    clf.fit(x, y)
    return clf


def test_a10_export_fidelity(tmp_path):
    checked = []
    for name in oracle_names():
        path = tmp_path / f"{name}.json"
        manifest = make_oracle_net(name, path)
        doc = __import__("json").loads(path.read_text())
        jsonschema.validate(doc, MODEL_SCHEMA)
        net = load_model(path)
        reference = oracle_forward(name)
        for x in _random_inputs(oracle_input_shape(name)):
            expected = np.asarray(reference(x))
            got = forward(net, x)
            assert np.abs(got - expected).max() <= TOL
        assert manifest.sha256
        checked.append(name)

    clf = _trained_mlp()
    path = tmp_path / "trained.json"
    manifest = export(clf, path)
    doc = __import__("json").loads(path.read_text())
    jsonschema.validate(doc, MODEL_SCHEMA)
    net = load_model(path)
    xs = _random_inputs((4,))
    expected = clf.predict_proba(xs)
    got = np.stack([forward(net, x) for x in xs])
    assert np.abs(got - expected).max() <= TOL
    checked.append("sklearn-mlp")
    print(f"\n[A10] PASS export fidelity within {TOL} for {', '.join(checked)}")
