import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vantrees import families, prior as pri, report, tabular
from vantrees.errors import ConfigError, ModelDefinitionError
from vantrees.model import fisher_information


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_seventeen_digits_round_trip(x):
    assert float(report.fmt(x)) == x


def test_non_finite_values_are_quoted_in_json():
    text = report.dumps({"a": math.inf, "b": [1.0, math.nan], "c": np.float64(0.1)})
    data = json.loads(text)
    assert data == {"a": "inf", "b": [1.0, "nan"], "c": 0.1}


def test_flatten_and_records_csv():
    flat = report.flatten({"a": {"b": [1, 2]}, "c": None})
    assert flat == {"a.b[0]": 1, "a.b[1]": 2, "c": None}
    text = report.records_csv([{"x": 0.1, "ok": True}, {"x": 2.0, "y": None}])
    assert text == "x,ok,y\n0.10000000000000001,true,\n2,,\n"


def test_gaussian_table_round_trip(tmp_path):
    wide = families.gaussian_location(theta_range=(-3.0, 3.0))
    xs = np.linspace(-12, 12, 2401)
    g = families.gaussian_location(theta_range=(-3.0, 3.0))
    # write on a uniform x grid so the trapezoid measure applies
    path = tmp_path / "gauss.csv"
    thetas = np.linspace(-2, 2, 81)
    dens = np.exp(-0.5 * (xs[None, :] - thetas[:, None]) ** 2) / math.sqrt(2 * math.pi)
    rows = ([t, *d] for t, d in zip(thetas.tolist(), dens.tolist()))
    report.write_text(path, report.csv_text([tabular.MODEL_HEADER, *map(report.fmt, xs)], rows))
    m = tabular.load_tabulated_model(path)
    assert fisher_information(m, 0.1)[0, 0] == pytest.approx(1.0, abs=1e-5)
    assert wide.p == g.p == m.p


def test_bernoulli_atoms_round_trip(tmp_path):
    path = tabular.write_tabulated_model(tmp_path / "bern.csv", families.bernoulli(), np.linspace(0.05, 0.95, 91))
    m = tabular.load_tabulated_model(path)
    assert m.grid.kind == "discrete-atoms"
    assert fisher_information(m, 0.5)[0, 0] == pytest.approx(4.0, abs=1e-6)


def test_tabulated_prior_file(tmp_path):
    t = np.linspace(-1, 1, 401)
    path = tmp_path / "q.csv"
    report.write_text(path, report.csv_text(["theta", "q"], zip(t.tolist(), (15 / 16 * (1 - t**2) ** 2).tolist())))
    q = tabular.load_tabulated_prior(path)
    assert pri.prior_information(q)[0, 0] == pytest.approx(10.0, rel=2e-3)


def test_bad_tables(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("theta,x1\n0,1\n")
    with pytest.raises(ConfigError):
        tabular.load_tabulated_model(p)
    p.write_text("theta\\x,0,1\n0.1,0.5,0.6\n0.2,0.5,0.5\n0.3,0.5,0.5\n0.4,0.5,0.5\n# measure: atoms\n")
    with pytest.raises(ModelDefinitionError):
        tabular.load_tabulated_model(p)
    p.write_text("theta,q\n0,abc\n")
    with pytest.raises(ConfigError):
        tabular.load_tabulated_prior(p)
