"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the criterion
lines inline.  Criterion 2 contains one sub-assertion that is knowingly
red (see the strict xfail below): the distinguished eigenvalue of the
kappa = -2 surface admits a third independent solution, so the tabulated
dimension-2 value is unattainable by a correct solver.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from qeforge import affine
from qeforge.dsl import ScalarField
from qeforge.fields import LinearPullbackField
from qeforge.verifier import run_scenario

OFFDIAG = np.array([[0.0, 1.0], [1.0, 0.0]])


def announce(criterion: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{criterion}] {status}{suffix}")


def residual_table(report, name):
    return [rec.residuals[name] for rec in report.points
            if name in rec.residuals]


def test_criterion_01_curvature_conventions():
    """S_kappa Ricci and recurrence closed forms, relative error <= 1e-9."""
    worst = 0.0
    for kappa in (1.0, -2.0, 3.0):
        surface = affine.s_kappa(kappa)
        for p in surface.sample_points(8, seed=21):
            s = p.sum()
            rho = affine.affine_ricci(surface, p)["rho"]
            rho_expected = kappa / s ** 2 * OFFDIAG
            rel = np.max(np.abs(rho - rho_expected)) / np.max(np.abs(rho_expected))
            worst = max(worst, rel)
            rec = affine.recurrence_form(surface, p)
            omega_expected = -(2.0 + kappa) / s * np.ones(2)
            # kappa = -2 has omega = 0 exactly; scale against the natural
            # 1/s magnitude of the family there
            scale = max(np.max(np.abs(omega_expected)), 1.0 / s)
            worst = max(worst, np.max(np.abs(rec["omega"] - omega_expected)) / scale)
    ok = worst <= 1e-9
    announce("C01 curvature conventions", ok, f"worst rel err {worst:.2e}")
    assert ok


def test_criterion_02_eigenspace_dimensions():
    """Theorem 7.4 eigenspace dimensions (integers), prolongation order 4."""
    p = [0.9, 0.8]
    s2 = affine.s_kappa(2.0)
    flat = affine.type_A({})
    cells = {
        ("kappa=2", 3.0): (affine.dim_E(s2, p, 3.0).dim_E, 1),
        ("kappa=2", 0.0): (affine.dim_E(s2, p, 0.0).dim_E, 1),
        ("kappa=2", -1.0): (affine.dim_E(s2, p, -1.0).dim_E, 0),
        ("kappa=2", 1.7): (affine.dim_E(s2, p, 1.7).dim_E, 0),
        ("kappa=-2", 0.0): (affine.dim_E(affine.s_kappa(-2.0), p, 0.0).dim_E, 1),
        ("flat", -1.0): (affine.dim_E(flat, p, -1.0).dim_E, 3),
        ("flat", 0.7): (affine.dim_E(flat, p, 0.7).dim_E, 3),
        ("flat", 2.0): (affine.dim_E(flat, p, 2.0).dim_E, 3),
    }
    bad = {key: got for key, (got, want) in cells.items() if got != want}
    ok = not bad
    announce("C02 eigenspace dimensions", ok,
             "8/8 stated cells (kappa=-2, mu=-1 cell tracked separately)")
    assert ok, bad


@pytest.mark.xfail(
    strict=True,
    reason="reference-value defect: the eigenspace also contains "
           "x1*x2/(x1+x2), so the germ dimension is 3, not the tabulated 2; "
           "the kappa=-2 surface is the Lorentzian hyperbolic plane "
           "(strongly projectively flat) and must attain the maximal "
           "dimension n+1 = 3.")
def test_criterion_02_defective_cell_kappa_minus2():
    surface = affine.s_kappa(-2.0)
    got = affine.dim_E(surface, [0.9, 0.8], -1.0).dim_E
    announce("C02 kappa=-2 mu=-1 cell", got == 2,
             f"tabulated value 2, solver finds {got} (third solution "
             f"x1*x2/(x1+x2) verified)")
    assert got == 2


def test_criterion_03_type_a_trichotomy():
    """Twenty seeded random Type A instances, 60/60 cells of the rank table."""
    rng = np.random.RandomState(7)
    labels = ("11^1", "11^2", "12^1", "12^2", "22^1", "22^2")
    p = [0.3, -0.4]
    hits = 0
    for _ in range(20):
        consts = {lab: float(x) for lab, x in
                  zip(labels, rng.uniform(-1.0, 1.0, 6))}
        surface = affine.type_A(consts)
        rank = affine.affine_ricci(surface, p)["rank_s"]
        for mu in (-1.0, 0.31, 1.7):
            expected = 3 if (mu == -1.0 or rank == 0) else (
                2 if rank == 1 else 0)
            if affine.dim_E(surface, p, mu).dim_E == expected:
                hits += 1
    ok = hits == 60
    announce("C03 Type A trichotomy", ok, f"{hits}/60 cells")
    assert ok


SCENARIO_MATRIX = [
    ("thm13_case1_skappa", {"kappa": 1.0}),
    ("thm13_case1_skappa", {"kappa": 2.0}),
    ("thm13_case1_ode", {}),
    ("thm13_case2", {"C": 1.0}),
    ("thm13_case2", {"C": -0.5}),
    ("conf_einstein_example52", {}),
    ("asd_nilpotent", {}),
]


@pytest.fixture(scope="module")
def scenario_reports():
    return {(sid, tuple(sorted(params.items()))):
            run_scenario(sid, params, points=16, seed=42)
            for sid, params in SCENARIO_MATRIX}


def test_criterion_04_quasi_einstein_residuals(scenario_reports):
    worst = {}
    for (sid, key), report in scenario_reports.items():
        worst[(sid, key)] = max(residual_table(report, "gqe_residual"))
    bad = {k: v for k, v in worst.items() if v > 1e-8}
    ok = not bad
    announce("C04 quasi-Einstein residuals", ok,
             f"worst {max(worst.values()):.2e} over "
             f"{len(worst)} scenarios x 16 points")
    assert ok, bad


def test_criterion_05_duality_verdicts(scenario_reports):
    checks = []
    for (sid, key), report in scenario_reports.items():
        params = dict(key)
        if sid.startswith("thm13_case1") or sid == "thm13_case2":
            checks.append(max(residual_table(report, "w_minus")) <= 1e-8)
        if sid == "thm13_case2" or (
                sid == "thm13_case1_skappa" and params.get("kappa") != -2.0):
            checks.append(min(residual_table(report, "w_plus")) >= 1e-4)
        if sid == "asd_nilpotent":
            checks.append(max(residual_table(report, "w_plus")) <= 1e-8)
            checks.append(min(residual_table(report, "w_minus")) >= 1e-4)
            checks.append(max(residual_table(report, "tau_abs")) <= 1e-9)
    ok = all(checks)
    announce("C05 duality verdicts", ok, f"{sum(checks)}/{len(checks)} verdicts")
    assert ok


def test_criterion_06_isotropic_structure(scenario_reports):
    worst_lambda = 0.0
    worst_pattern = 0.0
    for (sid, key), report in scenario_reports.items():
        if report.notes.get("isotropy_verdict") != "isotropic":
            continue
        worst_lambda = max(worst_lambda,
                           max(residual_table(report, "lambda_tau4")))
        worst_pattern = max(worst_pattern,
                            max(residual_table(report, "ricci_pattern")))
    ok = worst_lambda <= 1e-7 and worst_pattern <= 1e-7
    announce("C06 isotropic structure", ok,
             f"lambda-tau/4 {worst_lambda:.2e}, Ricci pattern "
             f"{worst_pattern:.2e}")
    assert ok


def test_criterion_07_gqe_identity_suite(scenario_reports):
    report = scenario_reports[("thm13_case2", (("C", 1.0),))]
    worst = max(max(residual_table(report, f"gqe_identity_{k}")) for k in range(1, 6))
    ex52 = scenario_reports[("conf_einstein_example52", ())]
    eta0_worst = max(residual_table(ex52, "gqe_identity_5"))
    ok = worst <= 1e-6 and eta0_worst <= 1e-6
    announce("C07 structural identity suite", ok,
             f"case2 worst {worst:.2e}, eta=0 item(5) {eta0_worst:.2e}")
    assert ok


def test_criterion_08_cotton_cross_oracle():
    start = time.time()
    report = run_scenario("thm13_case2", {"C": 1.0, "cotton_cross": True},
                          points=8, seed=42)
    elapsed = time.time() - start
    worst = max(residual_table(report, "cotton_cross"))
    ok = worst <= 1e-7 and elapsed <= 60.0
    announce("C08 Cotton cross-oracle", ok,
             f"worst {worst:.2e} in {elapsed:.1f}s")
    assert ok


def test_criterion_09_ode_fidelity():
    sup = 0.0
    for mu in (2.0, 3.0):
        fld = affine.solve_e26(mu, 1.0, (1.0, mu, mu * (mu - 1.0)), 2.0,
                               steps=1024)
        for t in np.linspace(1.0, 2.0, 257):
            sup = max(sup, abs(fld.eval([t], 0).value - t ** mu))
    mu = 0.8
    v = ScalarField("1+0.3*x1^2", ["x1"])
    surface = affine.wong_nilpotent("0.3*x1", "1+0.3*x1^2")
    f_line = affine.solve_fhat(mu, v, 0.5, (0.0, 0.2), 1.5, steps=1024)
    f_hat = LinearPullbackField(f_line, (1.0, 0.0))
    worst_res = 0.0
    for x1 in np.linspace(0.55, 1.45, 16):
        res = affine.gqe_affine_residual(surface, f_hat, mu, [x1, 0.2])
        worst_res = max(worst_res, np.max(np.abs(res)))
    ok = sup <= 1e-8 and worst_res <= 1e-8
    announce("C09 ODE fidelity", ok,
             f"t^mu sup err {sup:.2e}, affine residual {worst_res:.2e}")
    assert ok


def test_criterion_10_scalar_invariant():
    report = run_scenario("ansatz_phi_e26", {"mu": 2.0}, points=16, seed=42)
    worst = max(residual_table(report, "e_formula"))
    report_m1 = run_scenario("ansatz_phi_e26", {"mu": -1.0}, points=16, seed=42)
    worst_m1 = max(residual_table(report_m1, "e_formula"))
    ok = worst <= 1e-7 and worst_m1 <= 1e-7
    announce("C10 scalar invariant", ok,
             f"formula dev {worst:.2e}, mu=-1 value {worst_m1:.2e}")
    assert ok


def test_criterion_11_ad_integrity():
    from test_dsl import _random_expression, central_differences
    from qeforge.jets import _space

    rng = np.random.RandomState(1234)
    coords = ["x1", "x2", "x3"]
    worst = 0.0
    for _ in range(30):
        field = ScalarField(_random_expression(rng), coords)
        point = rng.uniform(0.4, 1.2, 3)
        jet = field.eval(point, 3)
        for alpha in _space(3, 3).alphas:
            fd = central_differences(field.eval_value, point, alpha)
            stored = jet.partial(alpha)
            rel = abs(stored - fd) / max(1.0, abs(fd), abs(stored))
            worst = max(worst, rel)
    ok = worst <= 1e-4
    announce("C11 AD integrity", ok, f"worst rel dev {worst:.2e} (30 exprs)")
    assert ok


def test_criterion_12_determinism(tmp_path):
    outputs = []
    for name in ("r1.json", "r2.json"):
        path = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "qeforge.cli", "verify",
             "--scenario", "thm13_case2", "--seed", "7", "--points", "6",
             "--json", str(path)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1]
    announce("C12 determinism", ok,
             f"{len(outputs[0])} bytes, byte-identical={ok}")
    assert ok
