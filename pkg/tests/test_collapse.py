import numpy as np
import pytest

from dcl.harness.collapse import (Dataset, FitError, algebraic_decay_pc, collapse_quality, crossing_point,
                                  fit_collapse, quality)


def power_law_data(seed=0, noise=0.01, pc=0.5, bnu=0.34, nu=2.0, sizes=(64, 128, 256, 512)):
    rng = np.random.default_rng(seed)
    rows = []
    for T in sizes:
        for p in np.linspace(0.3, 0.7, 21):
            y = 2 / (1 + np.exp((p - pc) * T ** (1 / nu))) * T ** -bnu
            rows.append((p, T, y * (1 + noise * rng.standard_normal()), noise * y))
    return Dataset.from_rows(rows)


def step_data(pd=0.12, omega=1.0, sizes=(32, 64, 128)):
    # the sharpest step still spans several grid points
    rows = []
    for L in sizes:
        for p in np.linspace(0.0, 0.3, 121):
            rows.append((p, L, 2 / (1 + np.exp((p - pd) * L ** omega / 3)), 0.01))
    return Dataset.from_rows(rows)


def test_synthetic_power_law_recovery():
    fit = fit_collapse(power_law_data(), "power_law", n_boot=3, seed=1)
    assert fit["p_c"] == pytest.approx(0.50, abs=0.01)
    assert fit["beta_over_nu"] == pytest.approx(0.34, abs=0.02)
    assert fit["nu"] == pytest.approx(2.0, abs=0.2)
    assert set(fit.errors) == {"p_c", "beta_over_nu", "nu"}
    assert fit.Q >= 0


def test_step_recovery():
    fit = fit_collapse(step_data(), "step")
    assert fit["p_d"] == pytest.approx(0.12, abs=0.005)
    assert fit["omega"] == pytest.approx(1.0, abs=0.1)
    fit = fit_collapse(step_data(omega=0.5), "step")
    assert fit["omega"] == pytest.approx(0.5, abs=0.1)


def test_fixed_parameters_are_respected():
    fit = fit_collapse(power_law_data(), "power_law", fixed={"nu": 2.0})
    assert fit["nu"] == 2.0


def test_quality_scale_consistency():
    d = power_law_data(noise=0.0).with_floor(rel=0.01)
    prm = {"p_c": 0.52, "beta_over_nu": 0.3, "nu": 1.8}
    scaled = Dataset(d.p, d.size, 3 * d.y, 3 * d.dy)
    assert quality(scaled, "power_law", prm) == pytest.approx(quality(d, "power_law", prm))
    a = fit_collapse(d, "power_law", rounds=3)
    b = fit_collapse(scaled, "power_law", rounds=3)
    assert a.params == b.params


def test_perfect_collapse_has_small_quality():
    d = power_law_data(noise=0.0).with_floor(rel=0.01)
    good = quality(d, "power_law", {"p_c": 0.5, "beta_over_nu": 0.34, "nu": 2.0})
    bad = quality(d, "power_law", {"p_c": 0.4, "beta_over_nu": 0.1, "nu": 1.0})
    # Q of order one or below means agreement within errors
    assert good < 1 < bad


def test_collapse_quality_without_overlap_is_inf():
    x = np.array([0.0, 1.0, 10.0, 11.0])
    g = np.array([1, 1, 2, 2])
    assert collapse_quality(x, x, np.ones(4), g) == np.inf


def test_degenerate_inputs():
    d = power_law_data(sizes=(64,))
    with pytest.raises(FitError):
        fit_collapse(d, "power_law")
    with pytest.raises(FitError):
        fit_collapse(power_law_data(sizes=(64, 128)), "power_law")
    with pytest.raises(FitError):
        fit_collapse(power_law_data(noise=0.0), "power_law")  # zero errors
    with pytest.raises(FitError):
        fit_collapse(power_law_data(), "exponential")
    few = Dataset.from_rows([(p, T, 1.0, 0.1) for T in (8, 16, 32) for p in (0.1, 0.2, 0.3)])
    with pytest.raises(FitError):
        fit_collapse(few, "power_law")


def test_crossing_of_step_family():
    med, spread, xs = crossing_point(step_data(pd=0.137))
    assert med == pytest.approx(0.137, abs=0.005)
    assert len(xs) == 3


def test_identical_curves_have_no_crossing():
    rows = [(p, L, 1 - p, 0.01) for L in (8, 16) for p in np.linspace(0, 1, 11)]
    with pytest.raises(FitError, match="no crossing"):
        crossing_point(Dataset.from_rows(rows))


def test_crossing_needs_two_sizes():
    with pytest.raises(FitError):
        crossing_point(Dataset.from_rows([(p, 8, p, 0.1) for p in (0.1, 0.2)]))


def decay_family(pvals=(0.3, 0.4, 0.45, 0.55, 0.6, 0.7)):
    # log-log curvature -0.1 (p - 0.5): saturating below 0.5, accelerating above
    p, T, y, dy = [], [], [], []
    for pv in pvals:
        for t in (4, 8, 16, 32, 64, 128, 256):
            lt = np.log(t)
            val = 2 * np.exp(-0.34 * lt - 0.1 * (pv - 0.5) * (lt - np.log(32)) ** 2)
            p.append(pv)
            T.append(t)
            y.append(val)
            dy.append(0.002 * val)
    return p, T, y, dy


def test_algebraic_decay_curvature():
    est = algebraic_decay_pc(*decay_family())
    assert est.method == "curvature"
    assert est.p_c == pytest.approx(0.5, abs=1e-6)
    assert est.beta_over_nu == pytest.approx(0.34, abs=1e-6)


def test_algebraic_decay_chi2():
    est = algebraic_decay_pc(*decay_family((0.3, 0.4, 0.5, 0.6)), method="chi2")
    assert est.p_c == 0.5
    assert est.beta_over_nu == pytest.approx(0.34, abs=1e-6)


def test_algebraic_decay_failures():
    p, T, y, dy = decay_family((0.3, 0.4))
    with pytest.raises(FitError):
        algebraic_decay_pc(p, T, y, dy)
    with pytest.raises(FitError):
        algebraic_decay_pc(p, T, y, dy, method="chi2")
    with pytest.raises(FitError):
        algebraic_decay_pc(*decay_family(), method="guess")


def test_dataset_from_csv(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("p,T,L,mean_I,sem_I,engine\n0.1,4,8,2,0,a\n0.2,4,8,1.5,0.1,a\n0.2,4,8,1.0,0.1,b\n")
    d = Dataset.from_csv(path, where={"engine": "a"})
    assert d.p.tolist() == [0.1, 0.2]
    assert d.with_floor(abs_=0.05).dy.tolist() == [0.05, 0.1]
