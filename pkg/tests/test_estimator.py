"""Finite differences and the parameter-recovery chain.

Exact expectations come from the commutator oracle; stencil-order claims
are checked on synthetic polynomial records whose dyadic grid makes the
stencil arithmetic exact in floating point.
"""

import math

import numpy as np
import pytest

from jcprobe import (
    CavityStateSpec,
    ConfigError,
    CouplingTooSmallError,
    DerivativeSet,
    DetuningZeroError,
    DispersiveParams,
    EstimateOptions,
    EstimateReport,
    GridIncompatibleError,
    HamiltonianParams,
    InvalidStepError,
    NegativeRadicandError,
    OmegaUnidentifiableError,
    SimulationConfig,
    TomographyRecord,
    analytic_derivatives,
    build_dispersive_hamiltonian,
    build_jc_hamiltonian,
    consistency_check,
    estimate_a,
    estimate_g,
    estimate_omega,
    estimate_photon_statistics,
    estimate_quadrature_means,
    estimate_report,
    estimate_variance_matrix,
    finite_difference_derivatives,
    run_estimate,
    run_simulate,
)
from conftest import S1_D1, S1_D2


def oracle_set(a=1.0, omega=1.0, g=1.0, cavity=None, dim=50, dispersive=False):
    """DerivativeSet holding exact oracle tensors (delta is a placeholder)."""
    cavity = cavity if cavity is not None else CavityStateSpec.coherent(1.0)
    if dispersive:
        H = build_dispersive_hamiltonian(DispersiveParams(a, omega, g, dim))
    else:
        H = build_jc_hamiltonian(HamiltonianParams(a, omega, g, dim))
    rep = analytic_derivatives(H, cavity)
    return DerivativeSet(d1=rep.d1, d2=rep.d2, stencil="oracle", delta=1e-3)


def polynomial_record():
    """Record with series t (upper), t^2 (lower), 1 - t^2 (diagonal).

    The dyadic grid 0, 0.25, 0.5, 0.75 makes every stencil combination
    exact in binary floating point.
    """
    times = np.array([0.0, 0.25, 0.5, 0.75])
    series = np.empty((3, 3, 4))
    for i in range(3):
        for k in range(3):
            if i == k:
                series[i, k] = 1.0 - times**2
            elif i < k:
                series[i, k] = times
            else:
                series[i, k] = times**2
    return TomographyRecord(times=times, series=series, meta={})


class TestFiniteDifferences:
    def test_polynomial_exactness_forward2(self):
        d = finite_difference_derivatives(polynomial_record(), "forward2", 0.25)
        assert d.d1[0, 1] == 1.0 and d.d1[0, 2] == 1.0 and d.d1[1, 2] == 1.0
        assert d.d1[1, 0] == 0.0 and d.d1[2, 0] == 0.0 and d.d1[2, 1] == 0.0
        assert d.d1[0, 0] == 0.0
        assert d.d2[0, 1] == 0.0 and d.d2[1, 0] == 2.0
        assert d.d2[0, 0] == -2.0 and d.d2[1, 1] == -2.0 and d.d2[2, 2] == -2.0

    def test_polynomial_exactness_central2(self):
        times = np.array([-0.25, 0.0, 0.25])
        series = np.empty((3, 3, 3))
        for i in range(3):
            for k in range(3):
                series[i, k] = times if i != k else 1.0 - times**2
        rec = TomographyRecord(times=times, series=series, meta={})
        d = finite_difference_derivatives(rec, "central2", 0.25)
        assert d.d1[0, 1] == 1.0
        assert d.d2[0, 0] == -2.0
        assert d.d2[0, 1] == 0.0

    def test_forward_on_minimal_grid(self, s1_record):
        d = finite_difference_derivatives(s1_record)
        assert d.stencil == "forward2"
        assert d.delta == pytest.approx(0.01)

    def test_central_requires_negative_times(self, s1_record):
        with pytest.raises(GridIncompatibleError):
            finite_difference_derivatives(s1_record, "central2")

    def test_central_on_symmetric_grid(self):
        cfg = SimulationConfig(
            kind="jc",
            a=1.0,
            omega=1.0,
            g=1.0,
            dim=50,
            cavity=CavityStateSpec.coherent(1.0),
            delta=0.01,
            steps=2,
            include_negative=True,
        )
        d = finite_difference_derivatives(run_simulate(cfg), "central2")
        np.testing.assert_allclose(d.d1, S1_D1, atol=2e-3)
        np.testing.assert_allclose(d.d2, S1_D2, atol=5e-3)

    def test_missing_nodes_rejected(self, s1_record):
        with pytest.raises(GridIncompatibleError):
            finite_difference_derivatives(s1_record, "forward2", delta=0.013)

    def test_bad_step_rejected(self, s1_record):
        with pytest.raises(InvalidStepError):
            finite_difference_derivatives(s1_record, "forward2", delta=-0.01)
        with pytest.raises(InvalidStepError):
            finite_difference_derivatives(s1_record, "forward2", delta=0.0)

    def test_unknown_stencil_rejected(self, s1_record):
        with pytest.raises(ConfigError):
            finite_difference_derivatives(s1_record, "forward4")

    def test_s1_derivatives_near_oracle(self, s1_record, s1_oracle):
        """Reference setup at delta=0.01: both tensors within 2% coarse scale."""
        d = finite_difference_derivatives(s1_record)
        assert np.max(np.abs(d.d1 - s1_oracle.d1)) < 0.02 * np.max(np.abs(s1_oracle.d1))
        assert np.max(np.abs(d.d2 - s1_oracle.d2)) < 0.02 * np.max(np.abs(s1_oracle.d2))

    def test_stencil_order_against_oracle(self, s1_hamiltonian, s1_oracle):
        """Entrywise convergence to the oracle is second order or better."""
        deltas = [0.04, 0.02, 0.01, 0.005]
        errors = []
        for delta in deltas:
            cfg = SimulationConfig(
                kind="jc",
                a=1.0,
                omega=1.0,
                g=1.0,
                dim=50,
                cavity=CavityStateSpec.coherent(1.0),
                delta=delta,
                steps=4,
            )
            d = finite_difference_derivatives(run_simulate(cfg))
            errors.append(
                np.stack([np.abs(d.d1 - s1_oracle.d1), np.abs(d.d2 - s1_oracle.d2)])
            )
        errors = np.array(errors)  # (delta, tensor, i, k)
        log_d = np.log(deltas)
        # Aggregate error decays at the stencil order.
        agg = errors.reshape(len(deltas), -1).max(axis=1)
        agg_slope = np.polyfit(log_d, np.log(agg), 1)[0]
        assert 1.8 < agg_slope < 2.2
        # No entry decays slower; symmetric entries may decay faster.
        for t in range(2):
            for i in range(3):
                for k in range(3):
                    entry = errors[:, t, i, k]
                    if entry[0] <= 1e-7:
                        continue
                    slope = np.polyfit(log_d, np.log(entry), 1)[0]
                    assert slope > 1.8, f"tensor {t} entry ({i},{k}) order {slope:.2f}"


class TestScalarEstimators:
    def test_a_from_oracle(self):
        assert estimate_a(oracle_set()) == pytest.approx(1.0, abs=1e-12)

    def test_a_free_qubit(self):
        """g=0 with a=2.5 recovered through the full FD chain."""
        cfg = SimulationConfig(
            kind="jc",
            a=2.5,
            omega=1.0,
            g=0.0,
            dim=8,
            cavity=CavityStateSpec.fock(0),
            delta=0.01,
            steps=4,
        )
        d = finite_difference_derivatives(run_simulate(cfg))
        assert estimate_a(d) == pytest.approx(2.5, rel=1e-3)

    def test_a_zero_tensor(self):
        d = DerivativeSet(np.zeros((3, 3)), np.zeros((3, 3)), "oracle", 1e-3)
        assert estimate_a(d) == 0.0

    def test_g_from_frozen_diagonal(self):
        """Diagonal (-2, -6, -8) with a=1 gives g = 1."""
        d2 = np.diag([-2.0, -6.0, -8.0])
        d = DerivativeSet(np.zeros((3, 3)), d2, "oracle", 1e-3)
        assert estimate_g(d, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_g_decoupled_radicand_vanishes(self):
        a = 1.4
        d2 = np.diag([-a * a, -a * a, 0.0])
        d = DerivativeSet(np.zeros((3, 3)), d2, "oracle", 1e-3)
        assert estimate_g(d, a) == 0.0

    def test_g_negative_radicand_raises(self):
        d2 = np.diag([-4.0, -4.0, 0.0])
        d = DerivativeSet(np.zeros((3, 3)), d2, "oracle", 1e-3)
        with pytest.raises(NegativeRadicandError):
            estimate_g(d, 1.0)

    def test_g_clamp_window(self):
        d2 = np.diag([-1.0 - 5e-9, -1.0 - 4e-9, 0.0])
        d = DerivativeSet(np.zeros((3, 3)), d2, "oracle", 1e-3)
        assert estimate_g(d, 1.0) == 0.0

    def test_multimode_g_is_root_sum_of_squares(self):
        """Two modes with g = (0.6, 0.8) in vacuum estimate to 1."""
        from jcprobe import ModeSpec

        cfg = SimulationConfig(
            kind="multimode",
            a=1.0,
            modes=(ModeSpec(1.0, 0.6, 20), ModeSpec(1.0, 0.8, 20)),
            cavity=CavityStateSpec.fock(0),
            delta=0.01,
            steps=4,
        )
        d = finite_difference_derivatives(run_simulate(cfg))
        g_hat = estimate_g(d, estimate_a(d))
        assert g_hat == pytest.approx(1.0, rel=0.02)


class TestQuadratureMeans:
    def test_s1_means(self):
        x, p = estimate_quadrature_means(oracle_set(), 1.0)
        assert x == pytest.approx(math.sqrt(2), abs=1e-10)
        assert p == pytest.approx(0.0, abs=1e-10)

    def test_imaginary_amplitude(self):
        d = oracle_set(cavity=CavityStateSpec.coherent(1j))
        x, p = estimate_quadrature_means(d, 1.0)
        assert x == pytest.approx(0.0, abs=1e-10)
        assert p == pytest.approx(math.sqrt(2), abs=1e-10)

    def test_vacuum_means_vanish(self):
        d = oracle_set(cavity=CavityStateSpec.fock(0))
        x, p = estimate_quadrature_means(d, 1.0)
        assert abs(x) < 1e-12 and abs(p) < 1e-12

    def test_tiny_coupling_rejected(self):
        with pytest.raises(CouplingTooSmallError):
            estimate_quadrature_means(oracle_set(), 1e-9)


class TestOmega:
    def test_s1_x_route(self):
        assert estimate_omega(oracle_set(), 1.0) == pytest.approx(1.0, abs=1e-10)

    def test_p_route_same_answer(self):
        d = oracle_set(a=1.0, omega=1.6, g=0.9, cavity=CavityStateSpec.coherent(1j))
        assert estimate_omega(d, 1.0) == pytest.approx(1.6, abs=1e-10)

    def test_fock_state_unidentifiable(self):
        d = oracle_set(cavity=CavityStateSpec.fock(1))
        with pytest.raises(OmegaUnidentifiableError):
            estimate_omega(d, 1.0)

    def test_detuned_recovery_through_chain(self):
        cfg = SimulationConfig(
            kind="jc",
            a=1.0,
            omega=1.5,
            g=0.8,
            dim=50,
            cavity=CavityStateSpec.coherent(1.0),
            delta=0.01,
            steps=4,
        )
        report = run_estimate(run_simulate(cfg), EstimateOptions())
        assert report.omega_hat == pytest.approx(1.5, rel=0.01)


class TestVarianceMatrix:
    def test_s1_coherent(self):
        v = estimate_variance_matrix(oracle_set(), 1.0, 1.0)
        assert v.v_xx == pytest.approx(0.5, abs=1e-10)
        assert v.v_pp == pytest.approx(0.5, abs=1e-10)
        assert v.v_xp == pytest.approx(0.0, abs=1e-10)

    def test_fock1(self):
        """A single-photon state has V_xx = V_pp = 1.5."""
        d = oracle_set(cavity=CavityStateSpec.fock(1))
        v = estimate_variance_matrix(d, 1.0, 1.0)
        assert v.v_xx == pytest.approx(1.5, abs=1e-10)
        assert v.v_pp == pytest.approx(1.5, abs=1e-10)

    @pytest.mark.parametrize("nbar", [0.25, 0.5, 1.0])
    def test_thermal(self, nbar):
        d = oracle_set(cavity=CavityStateSpec.thermal(nbar))
        v = estimate_variance_matrix(d, 1.0, 1.0)
        assert v.v_xx == pytest.approx(nbar + 0.5, abs=1e-9)
        assert v.v_pp == pytest.approx(nbar + 0.5, abs=1e-9)

    def test_matrix_is_symmetric(self):
        v = estimate_variance_matrix(oracle_set(), 1.0, 1.0)
        mat = v.as_matrix()
        np.testing.assert_array_equal(mat, mat.T)

    def test_tiny_coupling_rejected(self):
        with pytest.raises(CouplingTooSmallError):
            estimate_variance_matrix(oracle_set(), 1.0, 1e-9)

    def test_uncertainty_bound_near_exact_input(self):
        """V_xx V_pp - V_xp^2 >= 1/4 on clean small-delta data."""
        cfg = SimulationConfig(
            kind="jc",
            a=1.0,
            omega=1.0,
            g=1.0,
            dim=50,
            cavity=CavityStateSpec.coherent(1.0),
            delta=0.005,
            steps=4,
        )
        report = run_estimate(run_simulate(cfg), EstimateOptions())
        det = report.v_xx * report.v_pp - report.v_xp**2
        assert det >= 0.25 - 0.01


class TestPhotonStatistics:
    def test_fock2_exact_inversion(self):
        """Dispersive Fock(2): shift expectation 0.975 inverts to (2, 0)."""
        d = oracle_set(a=1.0, omega=3.0, g=0.1, cavity=CavityStateSpec.fock(2), dim=12, dispersive=True)
        assert d.d1[1, 0] == pytest.approx(0.975, abs=1e-12)
        n_mean, n_var = estimate_photon_statistics(d, 1.0, 0.1, -2.0)
        assert n_mean == pytest.approx(2.0, abs=1e-9)
        assert n_var == pytest.approx(0.0, abs=1e-9)

    def test_coherent_is_poissonian(self):
        d = oracle_set(a=1.0, omega=3.0, g=0.1, cavity=CavityStateSpec.coherent(1.0), dim=30, dispersive=True)
        n_mean, n_var = estimate_photon_statistics(d, 1.0, 0.1, -2.0)
        assert n_mean == pytest.approx(1.0, abs=1e-8)
        assert n_var == pytest.approx(1.0, abs=1e-6)

    def test_vacuum(self):
        d = oracle_set(a=1.0, omega=3.0, g=0.1, cavity=CavityStateSpec.fock(0), dim=8, dispersive=True)
        n_mean, n_var = estimate_photon_statistics(d, 1.0, 0.1, -2.0)
        assert n_mean == pytest.approx(0.0, abs=1e-9)
        assert n_var == pytest.approx(0.0, abs=1e-9)

    def test_zero_detuning_rejected(self):
        with pytest.raises(DetuningZeroError):
            estimate_photon_statistics(oracle_set(), 1.0, 0.1, 0.0)

    def test_tiny_coupling_rejected(self):
        with pytest.raises(CouplingTooSmallError):
            estimate_photon_statistics(oracle_set(), 1.0, 1e-9, -2.0)


class TestConsistencyResiduals:
    def test_oracle_residuals_vanish(self, s1_oracle):
        d = DerivativeSet(s1_oracle.d1, s1_oracle.d2, "oracle", 1e-3)
        report = EstimateReport(a_hat=1.0, g_hat=1.0, omega_hat=1.0)
        residuals = consistency_check(d, report)
        assert residuals
        assert max(abs(r.value) for r in residuals) < 1e-12

    def test_fd_residuals_scale_with_delta_squared(self):
        worst = {}
        for delta in (0.02, 0.01):
            cfg = SimulationConfig(
                kind="jc",
                a=1.0,
                omega=1.0,
                g=1.0,
                dim=50,
                cavity=CavityStateSpec.coherent(1.0),
                delta=delta,
                steps=4,
            )
            report = run_estimate(run_simulate(cfg), EstimateOptions())
            worst[delta] = max(abs(r.value) for r in report.residuals)
            assert worst[delta] < 200 * delta**2
        assert worst[0.02] > worst[0.01]

    def test_sign_flip_fault_is_flagged(self, s1_record):
        """Flipping one series breaks antisymmetry at order one."""
        series = s1_record.series.copy()
        series[0, 1] = -series[0, 1]
        corrupted = TomographyRecord(
            times=s1_record.times.copy(), series=series, meta=dict(s1_record.meta)
        )
        d = finite_difference_derivatives(corrupted)
        report = EstimateReport(a_hat=estimate_a(d))
        residuals = {r.name: r.value for r in consistency_check(d, report)}
        assert abs(residuals["d1_antisymmetry_12"]) > 1.5

    def test_two_route_spread_reported(self):
        alpha = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
        cfg = SimulationConfig(
            kind="jc",
            a=1.0,
            omega=1.0,
            g=1.0,
            dim=50,
            cavity=CavityStateSpec.coherent(alpha),
            delta=0.01,
            steps=4,
        )
        report = run_estimate(run_simulate(cfg), EstimateOptions())
        names = {r.name for r in report.residuals}
        assert "omega_route_spread" in names


class TestEstimatorChainExactness:
    def test_oracle_input_reproduces_everything(self):
        """The full chain is exact (1e-10) when fed exact derivatives."""
        d = oracle_set()
        a = estimate_a(d)
        g = estimate_g(d, a)
        x, p = estimate_quadrature_means(d, g)
        omega = estimate_omega(d, a)
        v = estimate_variance_matrix(d, a, g)
        assert a == pytest.approx(1.0, abs=1e-10)
        assert g == pytest.approx(1.0, abs=1e-10)
        assert omega == pytest.approx(1.0, abs=1e-10)
        assert x == pytest.approx(math.sqrt(2), abs=1e-10)
        assert p == pytest.approx(0.0, abs=1e-10)
        assert v.v_xx == pytest.approx(0.5, abs=1e-10)
        assert v.v_pp == pytest.approx(0.5, abs=1e-10)
        assert v.v_xp == pytest.approx(0.0, abs=1e-10)


class TestReportOrchestration:
    def test_vacuum_record_omega_warning(self):
        cfg = SimulationConfig(
            kind="jc",
            a=1.0,
            omega=1.0,
            g=1.0,
            dim=20,
            cavity=CavityStateSpec.fock(0),
            delta=0.01,
            steps=4,
        )
        report = run_estimate(run_simulate(cfg), EstimateOptions())
        assert report.omega_hat is None
        assert any("omega" in w for w in report.warnings)
        assert report.v_xx == pytest.approx(0.5, rel=0.01)

    def test_dispersive_mode_uses_metadata(self):
        cfg = SimulationConfig(
            kind="dispersive",
            a=1.0,
            omega=3.0,
            g=0.1,
            dim=12,
            cavity=CavityStateSpec.fock(2),
            delta=0.002,
            steps=4,
        )
        report = run_estimate(run_simulate(cfg), EstimateOptions(dispersive=True))
        assert report.n_mean == pytest.approx(2.0, abs=0.01)
        assert report.a_hat == 1.0 and report.g_hat == 0.1

    def test_dispersive_mode_requires_knowns(self, s1_record):
        stripped = TomographyRecord(
            times=s1_record.times.copy(), series=s1_record.series.copy(), meta={}
        )
        with pytest.raises(ConfigError):
            estimate_report(stripped, dispersive=True)

    def test_report_json_round_trip(self, s1_record):
        report = estimate_report(s1_record)
        data = report.to_json_dict()
        for key in (
            "a_hat",
            "g_hat",
            "omega_hat",
            "x_mean",
            "p_mean",
            "v_xx",
            "v_pp",
            "v_xp",
            "n_mean",
            "n_var",
            "residuals",
        ):
            assert key in data
        back = EstimateReport.from_json_dict(data)
        assert back == report
