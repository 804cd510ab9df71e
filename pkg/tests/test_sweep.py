import csv
import io
import math

import pytest

from src.core.errors import ConfigurationError, EmptyResultError
from src.core.models import TableTarget
from src.core.settings import get_settings, set_settings
from src.core.spectrum import CLOSED_FORM, NUMERIC
from src.core.sweep import COLUMNS, SweepSpec, run_sweep, table_report, write_rows
from src.examples.coupler import CASES, get_case


def _spec(case="k1", **kw):
    c = CASES[case]
    kw.setdefault("netlist", c.netlist(c.params))
    return SweepSpec(case=c.name, params=c.params, **kw)


@pytest.mark.parametrize("kw", [
    {"axis": "theta"},
    {"points": 1},
    {"methods": ("exact",)},
    {"methods": ()},
    {"stop": 7.0},
])
def test_spec_validation(kw):
    with pytest.raises(ConfigurationError):
        _spec(**kw)


def test_default_ranges_and_segments():
    assert _spec().stop_value == pytest.approx(2 * math.pi)
    assert _spec("kn").stop_value == pytest.approx(18 * math.pi)
    assert _spec("kn", axis="phi_Xb").stop_value == pytest.approx(2 * math.pi)
    both = _spec(axis="both", points=3).segments()
    assert len(both) == 2
    assert [pt[1] for pt in both[1]] == [math.pi] * 3
    fixed = _spec(axis="phi_Xb", points=2, phi_x=0.5).segments()
    assert fixed == [[(0.5, 0.0), (0.5, 2 * math.pi)]]


def test_closed_form_sweep_without_netlist():
    result = run_sweep(_spec(netlist=None, points=5))
    assert [r.method for r in result.rows] == [CLOSED_FORM] * 5
    assert any("no netlist" in n for n in result.notes)
    assert result.failures == 0
    assert result.metadata["case"] == "k1"


def test_rows_pair_up_and_agree_at_anchor_fluxes():
    result = run_sweep(_spec(points=9))
    assert len(result.rows) == 18
    assert [r.method for r in result.rows[:2]] == [CLOSED_FORM, NUMERIC]
    for closed, numeric in zip(result.rows[0::2], result.rows[1::2]):
        assert closed.phi_x == numeric.phi_x
        if math.isclose(closed.phi_x, 0.0) or math.isclose(closed.phi_x, math.pi):
            assert numeric.omega_r == pytest.approx(closed.omega_r, rel=1e-9)
            assert numeric.Delta == pytest.approx(closed.Delta, rel=1e-9)
            assert numeric.g_xx == pytest.approx(closed.g_xx, rel=1e-9, abs=1e-15)
    assert result.abs_max("g_xx", CLOSED_FORM) >= abs(result.rows[0].g_xx)


def test_results_do_not_depend_on_worker_count():
    set_settings(get_settings().with_overrides(chunk_size=4))
    serial = run_sweep(_spec(points=13, methods=(NUMERIC,), jobs=1))
    threaded = run_sweep(_spec(points=13, methods=(NUMERIC,), jobs=3))
    assert serial.rows == threaded.rows


def test_added_inductance_case_skips_closed_forms():
    result = run_sweep(_spec("add", points=3))
    assert all(r.method == NUMERIC for r in result.rows)
    assert any("added-inductance" in n for n in result.notes)


def test_every_point_failing_is_an_error():
    c = CASES["k1"]
    spec = SweepSpec(case="k1", params=c.params.with_overrides({"L": 20.0}), points=3)
    with pytest.raises(EmptyResultError):
        run_sweep(spec)


def test_failed_points_stay_in_the_result():
    c = CASES["k1"]
    # the qubit turns double-welled at phi_Xb = pi for a weak inductive load
    params = c.params.with_overrides({"ej_q": 30.0})
    result = run_sweep(SweepSpec(case="k1", params=params, axis="both", points=3))
    failed = [r for r in result.rows if not r.well_ok]
    assert failed and all(r.phi_Xb == math.pi for r in failed)
    assert failed[0].error.startswith("double_well")


def test_csv_output():
    result = run_sweep(_spec(netlist=None, points=3))
    rows = list(csv.reader(io.StringIO(result.to_csv())))
    assert tuple(rows[0]) == COLUMNS
    assert len(rows) == 4
    first = dict(zip(COLUMNS, rows[1]))
    assert first["method"] == CLOSED_FORM
    assert first["well_ok"] == "true"
    assert first["error"] == ""
    assert float(first["g_xx"]) == pytest.approx(result.rows[0].g_xx, rel=1e-11)


def test_document_output(tmp_path):
    result = run_sweep(_spec(netlist=None, points=3))
    doc = result.to_document()
    assert doc.case == "k1" and len(doc.rows) == 3
    assert doc.schema_version == "1.0"
    path = tmp_path / "sweep.json"
    result.save(path, "json")
    assert '"schema_version"' in path.read_text()
    with pytest.raises(ConfigurationError):
        result.save(tmp_path / "sweep.xml", "xml")


def test_write_rows_formats_floats():
    buf = io.StringIO()
    write_rows([["a", 1, 0.1 + 0.2]], ("name", "n", "x"), buf)
    assert buf.getvalue() == "name,n,x\na,1,0.3\n"


# -----------------------------------------------------------------------------
# Design tables
# -----------------------------------------------------------------------------
def test_table_target_checks():
    value = TableTarget("g", "g", "MHz", value=50.0, tol=2.0)
    assert value.check(51.5) and not value.check(52.5) and not value.check(None)
    assert value.describe() == "50 +/- 2 MHz"
    bound = TableTarget("a", "a", "%", hi=0.6)
    assert bound.check(0.1) and not bound.check(0.7) and not bound.check(math.nan)
    assert bound.describe() == "<= 0.6 %"
    assert TableTarget("b", "b", "", lo=1.7, hi=2.3).describe() == "[1.7, 2.3]"


def test_cases_lookup():
    assert set(CASES) == {"k1", "kn", "add"}
    assert get_case("add").params.has_added_inductance
    with pytest.raises(ConfigurationError):
        get_case("k2")
    k1 = get_case("k1")
    assert k1.with_params(k1.params.with_overrides({"L": 4.0})).params.L == 4.0
    assert "tree devoret" in k1.netlist(k1.params)


@pytest.mark.slow
def test_k1_table_report():
    report = table_report(CASES["k1"], points=21)
    computed = report.computed
    assert computed["g_xx_max"] == pytest.approx(51.27, abs=0.05)
    assert computed["L_crit"] == pytest.approx(5.449, abs=0.005)
    assert computed["L_max"] == pytest.approx(4.577, abs=0.002)
    assert computed["boost"] is not None and computed["boost"] > 1
    rows = {t.key: passed for t, _, passed in report.rows}
    # g_xx and both inductance limits land outside the reference targets
    assert not rows["g_xx_max"]
    assert not rows["L_max"]
    assert not rows["L_crit"]
    doc = report.to_document()
    assert doc.case == "k1" and len(doc.rows) == len(CASES["k1"].targets)


@pytest.mark.slow
def test_kn_table_report():
    report = table_report(CASES["kn"], points=21)
    assert report.computed["g_zx_max"] > 0
    assert report.computed["g_zz_max"] < report.computed["g_xx_max"]


@pytest.mark.slow
def test_add_table_report():
    report = table_report(CASES["add"], points=81)
    computed = report.computed
    rows = {t.key: passed for t, _, passed in report.rows}
    # couplings are sweep maxima, not the values at k pi / 2
    assert computed["g_zx_max"] == pytest.approx(10.25, abs=0.3)
    assert computed["g_xz_max"] == pytest.approx(0.45, abs=0.05)
    assert rows["g_zx_max"] and rows["g_xz_max"]
    assert 3.0 < computed["k_crit"] < 3.5
    # the resonator anharmonicity peaks at phi_x = k pi, above the reference bound
    assert computed["alpha_rel_r_max"] == pytest.approx(0.028, abs=0.002)
    assert not rows["alpha_rel_r_max"]
    assert computed["boost"] is not None and computed["boost"] > 1
