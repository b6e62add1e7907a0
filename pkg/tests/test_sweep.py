import math

import pytest

from fblec.errors import ConfigError
from fblec.sweep import (
    CSV_COLUMNS,
    PRESETS,
    SweepSpec,
    evaluate_cell,
    figure_preset,
    format_float,
    rows_to_csv,
    run_sweep,
    with_overrides,
)


def test_single_cell_sweep():
    spec = SweepSpec("rho_db", (10.0,), methods=("quadrature",), users=("noma_strong",))
    rows = run_sweep(spec)
    assert len(rows) == 1
    assert rows[0].user == "strong" and rows[0].scheme == "noma"
    assert rows[0].ec > 0


def test_row_count_and_order():
    spec = SweepSpec("theta", (0.001, 0.01, 0.1), {"rho_db": 10.0}, ("closed_form", "quadrature"),
                     users=("oma_weak", "noma_total"), samples=1000)
    rows = run_sweep(spec)
    assert len(rows) == spec.num_cells == 3 * 2 * 2
    keys = [(r.theta, r.scheme + "_" + r.user, r.method) for r in rows]
    assert keys[:4] == [
        (0.001, "oma_weak", "closed_form"),
        (0.001, "oma_weak", "quadrature"),
        (0.001, "noma_total", "closed_form"),
        (0.001, "noma_total", "quadrature"),
    ]


def test_fig1_cardinality():
    spec = figure_preset("fig1")
    assert spec.num_cells == 72
    assert spec.fixed["theta"] == 0.01


def test_presets_match_figures():
    assert figure_preset("fig4").fixed["rho_db"] == 20.0
    assert figure_preset("fig4").axis == "theta"
    assert (0.3, 0.7) in figure_preset("fig5").series[1]
    assert figure_preset("fig2").series == ("theta", (0.001, 0.01))
    fig3 = figure_preset("fig3")
    assert {"multiuser_noma", "multiuser_oma"} <= set(fig3.users)
    assert fig3.total_users == 12 and fig3.served_users == 6
    for name in PRESETS:
        assert figure_preset(name).num_cells > 0


def test_unknown_preset():
    with pytest.raises(ConfigError):
        figure_preset("fig9")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(axis="snr", grid=(1.0,)),
        dict(axis="rho_db", grid=()),
        dict(axis="rho_db", grid=(0.0, 10.0, 5.0)),
        dict(axis="rho_db", grid=(0.0,), methods=("exact",)),
        dict(axis="rho_db", grid=(0.0,), users=("everyone",)),
        dict(axis="rho_db", grid=(0.0,), fixed={"epsilon": 2.0}),
        dict(axis="rho_db", grid=(0.0,), fixed={"colour": 1}),
        dict(axis="rho_db", grid=(0.0,), series=("rho_db", (1.0,))),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ConfigError):
        SweepSpec(**kwargs)


def test_monte_carlo_reproducible_and_cell_local():
    spec = SweepSpec("rho_db", (0.0, 20.0), {"theta": 0.01}, ("monte_carlo",),
                     users=("noma_strong", "oma_weak"), samples=5000, master_seed=4)
    rows = run_sweep(spec)
    assert rows == run_sweep(spec)
    assert rows == run_sweep(spec, workers=3)
    cells = list(spec.cells())
    idx, params, user, method = cells[3]
    assert evaluate_cell(spec, idx, params, user, method) == rows[3]


def test_cell_errors_are_recorded_not_raised():
    spec = SweepSpec("rho_db", (10.0,), methods=("closed_form",), users=("multiuser_noma", "noma_strong"))
    rows = run_sweep(spec)
    assert math.isnan(rows[0].ec)
    assert rows[0].diag.startswith("error: DomainError")
    assert rows[0].num_pairs == 3
    assert rows[1].ec > 0


def test_csv_layout():
    spec = SweepSpec("rho_db", (0.0, 5.0), methods=("quadrature",), users=("noma_weak",))
    text = rows_to_csv(run_sweep(spec))
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    fields = lines[1].split(",")
    assert fields[:3] == ["noma", "weak", "quadrature"]
    assert len(fields[10].replace(".", "").lstrip("0")) <= 12


def test_format_float():
    assert format_float(1 / 3) == "0.333333333333"
    assert format_float(1e-6) == "1e-06"
    assert format_float(float("nan")) == "nan"


def test_series_is_outermost():
    spec = figure_preset("fig5")
    rows = run_sweep(with_overrides(spec, methods=("closed_form",)))
    alphas = [r.alpha1 for r in rows]
    assert alphas == sorted(alphas)
    assert len(rows) == 3 * 9 * 2
