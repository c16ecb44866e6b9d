"""Figure rendering writes real image files."""

from gaugefix.plots import (discard_rate_figure, failure_rate_figure,
                            render_sweep_figures)

ROWS = [
    {"L": 6, "eps": 0.001, "trials": 100, "failures": 2, "ci_lo": 0.002,
     "ci_hi": 0.07, "discard_rate": 0.05, "accepted_failures": 2,
     "max_spread": 2.0},
    {"L": 6, "eps": 0.01, "trials": 100, "failures": 20, "ci_lo": 0.13,
     "ci_hi": 0.29, "discard_rate": 0.1, "accepted_failures": 18,
     "max_spread": 3.0},
    {"L": 8, "eps": 0.001, "trials": 100, "failures": 0, "ci_lo": 0.0,
     "ci_hi": 0.04, "discard_rate": 0.02, "accepted_failures": 0,
     "max_spread": 1.0},
]


def test_failure_rate_figure(tmp_path):
    path = failure_rate_figure(ROWS, tmp_path / "f.png")
    assert path.exists()
    assert path.stat().st_size > 1000
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_discard_rate_figure(tmp_path):
    path = discard_rate_figure(ROWS, tmp_path / "d.png")
    assert path.exists() and path.stat().st_size > 1000


def test_render_all(tmp_path):
    paths = render_sweep_figures(ROWS, tmp_path)
    assert [p.name for p in paths] == ["failure_rate.png", "discard_rate.png"]
    assert all(p.exists() for p in paths)


def test_render_nothing_for_empty_rows(tmp_path):
    assert render_sweep_figures([], tmp_path) == []
    assert not list(tmp_path.iterdir())
