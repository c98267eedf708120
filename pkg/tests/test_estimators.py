import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from levelconf import config as cf
from levelconf import samples
from levelconf.domain import Domain
from levelconf.estimators import (ConformalModel, ExtendedConfigBuilder, LevelConfigExtractor,
                                  PolynomialRealizer)
from levelconf.extractor import extract


def test_params_round_trip():
    est = ConformalModel(func="z^2", margin=0.3, seed=4)
    p = est.get_params()
    assert p["func"] == "z^2" and p["margin"] == 0.3 and p["seed"] == 4
    twin = clone(est)
    assert twin.get_params() == p
    est.set_params(seed=9)
    assert est.seed == 9


def test_extractor_transform():
    out = LevelConfigExtractor(level=2.0).fit_transform(["z^2-1", "z^2"])
    assert cf.config_equal(out[0], extract("z^2-1", 2.0))
    canon = LevelConfigExtractor(level=2.0, canonical=True).transform(["z^2-1"])
    assert canon == [cf.canonical_form(out[0])]


def test_builder_transform():
    out = ExtendedConfigBuilder(margin=0.1).transform([("z^2-1", Domain.disk(0, 1.3))])
    assert cf.config_equal(out[0], extract("z^2-1", 2.0))


def test_realizer_predict_and_score():
    est = PolynomialRealizer(seed=1)
    with pytest.raises(NotFittedError):
        est.predict()
    targets = [extract("z^2-1", 2.0), extract("z^3", 1.0)]
    coeffs = est.fit(targets).predict()
    assert len(coeffs) == 2 and all(c is not None for c in coeffs)
    assert est.score(targets) == 1.0


def test_conformal_model_on_sine():
    ex = samples.sine_example()
    m = ConformalModel(func="sin(z)", margin=ex["margin"], anchor=ex["anchor"])
    with pytest.raises(NotFittedError):
        m.transform([0j])
    m.fit(ex["domain"])
    assert m.score() > -1e-9
    Z = np.array([0.1 + 0.1j, -0.5 + 0.3j, 0.4 - 0.2j])
    assert np.allclose(m.predict(Z), np.sin(Z), atol=1e-10)
    w = m.transform(Z)
    assert np.allclose(m.polynomial_(w), np.sin(Z), atol=1e-10)
