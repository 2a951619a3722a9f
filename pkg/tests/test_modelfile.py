"""Model-file parsing, validation messages, scenarios, and round-trips."""

import textwrap

import numpy as np
import pytest

from lpsnet import (Deterministic, Exponential, HyperExponential2,
                    ModelFileError, apply_scenario, dump_model,
                    fit_two_moments, parse_model, load_model, tandem,
                    utilization)

TANDEM_TEXT = textwrap.dedent("""\
    nodes:
      - arrival_rate: 0.2333333333333333
        servers: 3
        service: {type: hyperexp2, mean: 1.0, scv: 4.0}
      - arrival_rate: 0.0
        servers: 7
        service: {type: hyperexp2, mean: 2.0, scv: 4.0}
    routing:
      - [0.0, 1.0]
      - [0.0, 0.0]
    scenarios:
      near_critical: {load: 0.95}
      light: {load: 0.3}
    """)


def test_parse_tandem():
    model, scenarios = parse_model(TANDEM_TEXT)
    assert len(model.nodes) == 2
    assert model.nodes[0].servers == 3
    assert model.nodes[1].service.mean == pytest.approx(2.0)
    assert model.nodes[1].service.scv == pytest.approx(4.0)
    assert model.routing[0, 1] == 1.0
    assert scenarios == {"near_critical": {"load": 0.95}, "light": {"load": 0.3}}


def test_parse_all_service_forms():
    text = textwrap.dedent("""\
        nodes:
          - arrival_rate: 0.1
            servers: 1
            service: {type: exponential, mean: 2.5}
          - arrival_rate: 0.0
            servers: 2
            service: {type: deterministic, value: 1.5}
          - arrival_rate: 0.0
            servers: 3
            service: {type: hyperexp2, p1: 0.6, rate1: 2.0, p2: 0.4, rate2: 0.5}
        routing:
          - [0.0, 0.5, 0.5]
          - [0.0, 0.0, 0.0]
          - [0.0, 0.0, 0.0]
        """)
    model, scenarios = parse_model(text)
    assert isinstance(model.nodes[0].service, Exponential)
    assert isinstance(model.nodes[1].service, Deterministic)
    h2 = model.nodes[2].service
    assert isinstance(h2, HyperExponential2)
    assert h2.p1 == 0.6 and h2.rate2 == 0.5
    assert scenarios == {}


def test_round_trip_exact():
    model, scenarios = parse_model(TANDEM_TEXT)
    text = dump_model(model, scenarios)
    again, scenarios2 = parse_model(text)
    assert scenarios2 == scenarios
    np.testing.assert_array_equal(again.arrival_rates, model.arrival_rates)
    np.testing.assert_array_equal(again.routing, model.routing)
    for a, b in zip(again.nodes, model.nodes):
        assert a.servers == b.servers
        assert type(a.service) is type(b.service)
        assert a.service.mean == b.service.mean
        assert a.service.second_moment == b.service.second_moment


def test_round_trip_from_constructed_model():
    m = tandem(0.7 / 3, [fit_two_moments(1.0, 10.0), Deterministic(2.0)], [2, 8])
    again, _ = parse_model(dump_model(m))
    np.testing.assert_array_equal(again.arrival_rates, m.arrival_rates)
    assert again.nodes[0].service == m.nodes[0].service
    assert again.nodes[1].service == m.nodes[1].service


def test_load_model_from_disk(tmp_path):
    p = tmp_path / "net.yaml"
    p.write_text(TANDEM_TEXT, encoding="utf-8")
    model, scenarios = load_model(str(p))
    assert len(model.nodes) == 2 and "light" in scenarios


def test_load_missing_file():
    with pytest.raises(ModelFileError, match="cannot read model file"):
        load_model("/nonexistent/net.yaml")


def test_yaml_syntax_error_reports_location():
    bad = "nodes:\n  - arrival_rate: 1\n   servers: [unclosed\n"
    with pytest.raises(ModelFileError, match=r"model\.yaml:\d+:\d+"):
        parse_model(bad, source="model.yaml")


def test_empty_document():
    with pytest.raises(ModelFileError, match="empty document"):
        parse_model("# only a comment\n")


def test_unknown_top_level_key():
    text = TANDEM_TEXT + "extras: 1\n"
    with pytest.raises(ModelFileError, match="extras"):
        parse_model(text)


def test_unknown_node_key_names_path():
    text = TANDEM_TEXT.replace("servers: 3", "servers: 3\n    color: red")
    with pytest.raises(ModelFileError, match=r"nodes\[0\].*color"):
        parse_model(text)


def test_missing_required_key_names_path():
    text = textwrap.dedent("""\
        nodes:
          - arrival_rate: 0.5
            service: {type: exponential, mean: 1.0}
        routing:
          - [0.0]
        """)
    with pytest.raises(ModelFileError, match=r"nodes\[0\].*servers"):
        parse_model(text)


@pytest.mark.parametrize("mutation, pattern", [
    ("arrival_rate: 0.2333333333333333", "arrival_rate: -1"),
    ("servers: 3", "servers: 0"),
    ("servers: 3", "servers: 2.5"),
    ("{type: hyperexp2, mean: 1.0, scv: 4.0}", "{type: hyperexp2, mean: 1.0, scv: 0.5}"),
    ("{type: hyperexp2, mean: 1.0, scv: 4.0}", "{type: lognormal, mean: 1.0}"),
    ("[0.0, 1.0]", "[0.0, 1.5]"),
    ("[0.0, 1.0]", "[0.0]"),
])
def test_bad_values_rejected(mutation, pattern):
    text = TANDEM_TEXT.replace(mutation, pattern)
    assert text != TANDEM_TEXT
    with pytest.raises(ModelFileError):
        parse_model(text)


def test_service_missing_type():
    text = TANDEM_TEXT.replace("type: hyperexp2, mean: 1.0, scv: 4.0",
                               "mean: 1.0, scv: 4.0")
    with pytest.raises(ModelFileError, match="'type'"):
        parse_model(text)


def test_routing_row_count_checked():
    text = TANDEM_TEXT.replace("  - [0.0, 0.0]\n", "")
    with pytest.raises(ModelFileError, match="routing"):
        parse_model(text)


def test_scenario_rescales_to_target_load():
    model, scenarios = parse_model(TANDEM_TEXT)
    scaled = apply_scenario(model, scenarios, "near_critical")
    _, rho = utilization(scaled)
    assert rho == pytest.approx(0.95, rel=1e-12)
    # Service laws and routing are untouched.
    assert scaled.nodes[0].service == model.nodes[0].service
    np.testing.assert_array_equal(scaled.routing, model.routing)


def test_scenario_none_is_identity():
    model, scenarios = parse_model(TANDEM_TEXT)
    assert apply_scenario(model, scenarios, None) is model


def test_unknown_scenario_lists_known_names():
    model, scenarios = parse_model(TANDEM_TEXT)
    with pytest.raises(ModelFileError, match="light.*near_critical|near_critical.*light"):
        apply_scenario(model, scenarios, "peak")


def test_scenario_bad_load_rejected():
    text = TANDEM_TEXT.replace("load: 0.95", "load: -0.5")
    with pytest.raises(ModelFileError, match=r"scenarios\.near_critical\.load"):
        parse_model(text)
