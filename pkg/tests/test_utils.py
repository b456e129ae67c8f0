import math

import pytest

from config import APP_CONFIG
from utils import coefficient_of_variation, gini, parse_grid, spearman, worker_count


def test_gini():
    assert gini([1.0, 1.0, 1.0, 1.0]) == pytest.approx(0.0)
    assert gini([0.0, 0.0, 0.0, 4.0]) == pytest.approx(0.75)
    assert gini([]) == 0.0
    assert gini([0.0, 0.0]) == 0.0


def test_coefficient_of_variation():
    assert coefficient_of_variation([2.0, 2.0]) == 0.0
    assert coefficient_of_variation([1.0, 3.0]) == pytest.approx(0.5)
    assert coefficient_of_variation([0.0, 0.0]) == 0.0


def test_spearman():
    assert spearman([0.1, 0.2, 0.3], [1.0, 5.0, 9.0]) == pytest.approx(1.0)
    assert spearman([0.3, 0.2, 0.1], [1.0, 5.0, 9.0]) == pytest.approx(-1.0)
    assert math.isnan(spearman([0.5, 0.5], [0.1, 0.9]))


def test_parse_grid():
    assert parse_grid('0:1:0.25') == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid('0,0.5, 1') == [0.0, 0.5, 1.0]
    assert parse_grid('0:1:0.1')[-1] == 1.0
    assert len(parse_grid('0:1:0.1')) == 11
    with pytest.raises(ValueError):
        parse_grid('0:1:0')


@pytest.mark.parametrize("raw, expected", [('4', 4), ('0', 1), ('-3', 1), ('many', 1)])
def test_worker_count(monkeypatch, raw, expected):
    monkeypatch.setenv(APP_CONFIG['workers_env'], raw)
    assert worker_count() == expected


def test_worker_count_default(monkeypatch):
    monkeypatch.delenv(APP_CONFIG['workers_env'], raising=False)
    assert worker_count() == 1
