import json
import math

import numpy as np
import pytest

from moldelays.analysis import (FitResult, fit_g, fit_power_law, g_model_shape,
                                gauss_newton, probe_delay, probe_table,
                                reproduce_tables, side_average,
                                side_difference, stereo_probe_scan)
from moldelays.constants import (ANGSTROM_TO_BOHR, AU_TIME_TO_AS,
                                 ev_to_hartree)
from moldelays.rabbit import MolecularDelayRecord
from moldelays.wigner import DelayTable, WignerDelayRecord

EPS = ev_to_hartree(4.35)
LADDER = [800.0, 1600.0, 3200.0, 6400.0, 12800.0]


def _wig_record(eps, theta, x_ref, tau):
    return WignerDelayRecord(energy=eps, theta=theta, x_ref=x_ref, tau_as=tau,
                             deps=1e-3, reference_kind="coulomb", gauge="length")


def _mol_record(lam, theta, tau, eps=EPS, q2=22):
    return MolecularDelayRecord(lambda_nm=lam, base_order=q2, eps=eps,
                                theta=theta, phase=0.0, tau_mol_as=tau,
                                method="tdse")


def test_probe_delay_difference_and_guards():
    mol = _mol_record(800.0, 0, -103.4)
    wig = _wig_record(EPS, 0, 0.0, -0.5)
    rec = probe_delay(mol, wig)
    assert rec.tau_probe_as == pytest.approx(-102.9)
    with pytest.raises(ValueError):
        probe_delay(mol, _wig_record(EPS + 0.01, 0, 0.0, -0.5))
    with pytest.raises(ValueError):
        probe_delay(mol, _wig_record(EPS, 180, 0.0, -0.5))


def test_probe_zero_when_equal():
    rec = probe_delay(_mol_record(800.0, 0, 5.0), _wig_record(EPS, 0, 0.0, 5.0))
    assert rec.tau_probe_as == 0.0


def _synthetic_tables(x_refs):
    """Wigner table obeying the analytic origin-shift law exactly, plus one
    molecular pair; both sides at the benchmark energy."""
    tau0 = {0: -1.2, 180: 7.7}
    wig = []
    for x in x_refs:
        for th, cos_t in ((0, 1.0), (180, -1.0)):
            shift = -cos_t * x / math.sqrt(2 * EPS) * AU_TIME_TO_AS
            wig.append(_wig_record(EPS, th, x, tau0[th] + shift))
    mol = [_mol_record(800.0, 0, -103.4), _mol_record(800.0, 180, -111.0)]
    return DelayTable(records=wig), mol


def test_side_average_independent_of_origin():
    x_refs = [-0.4, 0.0, 0.4]
    table, mol = _synthetic_tables(x_refs)
    probe = probe_table(mol, table, x_refs)
    averages = []
    for x in x_refs:
        pair = {r.theta: r for r in probe if abs(r.x_ref - x) < 1e-12}
        averages.append(side_average(pair))
    assert max(averages) - min(averages) < 1e-10


def test_stereo_probe_linear_in_origin():
    """Delta tau_probe(x) - Delta tau_probe(x0) = -2 (x - x0)/sqrt(2 eps)."""
    x_refs = [-0.4, 0.0, 0.4]
    table, mol = _synthetic_tables(x_refs)
    probe = probe_table(mol, table, x_refs)
    diffs = {}
    for x in x_refs:
        pair = {r.theta: r for r in probe if abs(r.x_ref - x) < 1e-12}
        diffs[x] = side_difference(pair)
    for x in x_refs[1:]:
        expected = -2.0 * (x - x_refs[0]) / math.sqrt(2 * EPS) * AU_TIME_TO_AS
        assert diffs[x] - diffs[x_refs[0]] == pytest.approx(expected, abs=0.2)


def test_gauss_newton_converges_on_nonlinear_model():
    xdata = np.linspace(0, 4, 30)
    true = 2.5 * np.exp(-0.7 * xdata)

    def residual(p):
        return p[0] * np.exp(-p[1] * xdata) - true

    def jac(p):
        return np.stack([np.exp(-p[1] * xdata),
                         -p[0] * xdata * np.exp(-p[1] * xdata)], axis=1)

    p, r = gauss_newton(residual, jac, [1.0, 1.0])
    assert p == pytest.approx([2.5, 0.7], abs=1e-9)
    assert np.max(np.abs(r)) < 1e-9


def test_g_model_sanity_point():
    # Z = 0.83, eps = 4.35 eV, 800 nm: about -96.6 as under the action reading
    g = 0.83 * g_model_shape(EPS, 800.0, "action")
    assert g == pytest.approx(-96.6, abs=0.5)
    literal = 0.83 * g_model_shape(EPS, 800.0, "literal")
    assert abs(literal) > 1000.0  # the literal reading is an order off the data


def test_fit_g_exact_recovery():
    y = [0.81 * g_model_shape(EPS, lam) for lam in LADDER]
    fit = fit_g(LADDER, y, EPS)
    assert fit.parameters["Z"] == pytest.approx(0.81, abs=1e-10)
    assert fit.rel_error < 1e-10
    assert not fit.flagged


def test_fit_g_needs_four_points():
    with pytest.raises(ValueError):
        fit_g(LADDER[:3], [1, 2, 3], EPS)


def test_fit_power_law_exact_recovery():
    y = [3.0 * (lam / 800.0) ** -1.0 for lam in LADDER]
    fit = fit_power_law(LADDER, y)
    assert fit.parameters["p"] == pytest.approx(1.0, abs=1e-10)
    assert fit.parameters["amplitude"] == pytest.approx(3.0 * 800.0, rel=1e-9)


def test_fit_power_law_drops_noise_floor_samples():
    y = [10.0, 5.0, 2.5, 1.25, 0.01]
    with pytest.warns(UserWarning):
        fit = fit_power_law(LADDER, y, noise_floor=0.05)
    assert fit.parameters["p"] == pytest.approx(1.0, abs=1e-9)


def test_stereo_probe_scan_marks_canonical():
    x_refs = [-0.3, 0.1]
    table, mol = _synthetic_tables(x_refs)
    probe = probe_table(mol, table, x_refs)
    rows = stereo_probe_scan(probe, canonical_x_ref=0.1)
    assert len(rows) == 2
    assert [r["canonical"] for r in sorted(rows, key=lambda r: r["xref_angstrom"])] \
        == [False, True]


def test_reproduce_tables_empty_inputs(tmp_path):
    summary = reproduce_tables(tmp_path, {}, DelayTable(records=[]), [], [], {}, {})
    assert "wigner delay table" in summary["missing_inputs"]
    assert "molecular delay records" in summary["missing_inputs"]
    with open(tmp_path / "summary.json") as fh:
        on_disk = json.load(fh)
    assert on_disk["missing_inputs"] == summary["missing_inputs"]


def test_reproduce_tables_full(tmp_path):
    x_refs = [x * ANGSTROM_TO_BOHR for x in (-0.2, 0.0, 0.2)]
    table, mol = _synthetic_tables(x_refs)
    probe = probe_table(mol, table, x_refs)
    g_fits = {22: FitResult("g_eps", {"Z": 0.80}, 0.02, np.zeros(5))}
    p_fits = {22: FitResult("power_law", {"amplitude": 3.0, "p": 0.9}, 0.05, np.zeros(5))}
    summary = reproduce_tables(tmp_path, {"EI_eV": 29.8}, table, mol, probe,
                               g_fits, p_fits)
    assert (tmp_path / "table_wigner_delays.csv").exists()
    assert (tmp_path / "table_molecular_delays.csv").exists()
    assert summary["deviations"]["wigner_max_as"] < 1.5
    assert summary["fits"]["Z"]["22"]["value"] == 0.80
