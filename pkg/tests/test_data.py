import json

import numpy as np
import pytest

from bidder_selection.data import (
    InstanceFileError,
    format_instance,
    format_number,
    load_instance,
    parse_instance,
    save_instance,
)
from bidder_selection.distributions import InvalidInstance, generate_lognormal_instance


@pytest.mark.parametrize(
    "value,expected",
    [(1, "1"), (0.2, "0.20000000000000001"), (0.0, "0"), (0.25, "0.25")],
)
def test_format_number(value, expected):
    assert format_number(value) == expected


def test_format_number_rejects_nan():
    with pytest.raises(InvalidInstance):
        format_number(float("nan"))


def test_format_instance(coin_instance):
    text = format_instance(coin_instance)

    assert text == (
        '{"n": 2, "k": 2, "weights": [1, 0], "distributions": ['
        '{"support": [0, 2], "probs": [0.5, 0.5]}, '
        '{"support": [0, 2], "probs": [0.5, 0.5]}]}'
    )
    assert json.loads(text)["k"] == 2


def test_save_and_load_generated_instance(tmp_path):
    instance = generate_lognormal_instance(12, 3, 4, grid_size=20)
    path = tmp_path / "instance.json"

    save_instance(instance, path)
    loaded = load_instance(path)

    assert loaded.n == instance.n
    assert loaded.k == instance.k
    np.testing.assert_array_equal(loaded.weights, instance.weights)
    for a, b in zip(loaded.distributions, instance.distributions):
        np.testing.assert_array_equal(a.support, b.support)
        np.testing.assert_array_equal(a.probs, b.probs)
    assert format_instance(loaded) == format_instance(instance)


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        '{"n": 1, "k": 1, "weights": [1]}',
        '{"n": 2, "k": 1, "weights": [1], '
        '"distributions": [{"support": [1], "probs": [1]}]}',
        '{"n": 1, "k": 1, "weights": [1], "distributions": [{"support": [1]}]}',
    ],
)
def test_parse_instance_rejects(text):
    with pytest.raises(InvalidInstance):
        parse_instance(text)


def test_load_missing_instance(tmp_path):
    with pytest.raises(InstanceFileError):
        load_instance(tmp_path / "missing.json")


def test_save_into_missing_directory(tmp_path, coin_instance):
    with pytest.raises(InstanceFileError):
        save_instance(coin_instance, tmp_path / "missing" / "instance.json")
