import pytest

from jointfreq.experiment import (
    ExperimentConfig,
    intrinsic_sparsity,
    run_sweep,
    run_trial,
    success_rate,
    trial_seed,
)


def _tiny_config(**overrides):
    defaults = dict(
        n=12,
        s_c=1,
        s_j=1,
        j_values=(2,),
        m_values=(12,),
        trials=1,
        base_seed=99,
        mode="both",
        rho=0.1,
        max_iters=8000,
        certificates=True,
        cert_grid=1024,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestSeeds:
    def test_deterministic(self):
        a = trial_seed(7, "joint", 4, 20, 3)
        b = trial_seed(7, "joint", 4, 20, 3)
        assert a == b

    def test_distinct_across_cells(self):
        seeds = {
            trial_seed(7, mode, j, m, idx)
            for mode in ("joint", "separate")
            for j in (1, 4)
            for m in (10, 20)
            for idx in range(3)
        }
        assert len(seeds) == 24


class TestIntrinsicSparsity:
    def test_paper_headline_value(self):
        assert intrinsic_sparsity(4, 2, 4) == 36


class TestRunTrial:
    def test_fully_observed_success(self):
        cfg = _tiny_config()
        rec = run_trial(cfg, "joint", 2, 12, seed=trial_seed(99, "joint", 2, 12, 0))
        assert rec.success
        assert rec.status == "converged"
        assert rec.max_rel_error <= 1e-6
        assert rec.cert_common_matched is not None

    def test_separate_mode_runs_per_signal(self):
        cfg = _tiny_config(mode="separate", certificates=False)
        rec = run_trial(cfg, "separate", 2, 12, seed=5)
        assert rec.mode == "separate"
        assert len(rec.rel_errors) == 2
        assert rec.success

    def test_l0_descriptor(self):
        cfg = _tiny_config()
        rec = run_trial(cfg, "joint", 2, 12, seed=1)
        assert rec.l0_atoms == cfg.s_c + cfg.s_j * 2


class TestRunSweep:
    def test_table_and_csv(self, tmp_path):
        cfg = _tiny_config(reproducible=True)
        result = run_sweep(cfg, out_dir=str(tmp_path))
        assert len(result.table) == 2  # both modes, one cell each
        for row in result.table:
            assert row["rate"] in (0.0, 1.0)
        assert (tmp_path / "sweep.csv").exists()
        with open(tmp_path / "trials.csv") as fh:
            lines = fh.read().splitlines()
        assert len(lines) == 1 + 2 * cfg.trials

    def test_reproducible_byte_identical(self, tmp_path):
        cfg = _tiny_config(reproducible=True, certificates=False)
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        run_sweep(cfg, out_dir=str(dir_a))
        run_sweep(cfg, out_dir=str(dir_b))
        for name in ("sweep.csv", "trials.csv"):
            with open(dir_a / name, "rb") as fa, open(dir_b / name, "rb") as fb:
                assert fa.read() == fb.read()

    def test_success_rate_lookup(self, tmp_path):
        cfg = _tiny_config(mode="joint", certificates=False)
        result = run_sweep(cfg)
        assert success_rate(result, "joint", 2, 12) in (0.0, 1.0)
        with pytest.raises(KeyError):
            success_rate(result, "separate", 2, 12)

    def test_dual_polynomial_dump(self, tmp_path):
        cfg = _tiny_config(mode="joint", dump_dual_polynomials=True)
        run_sweep(cfg, out_dir=str(tmp_path))
        assert (tmp_path / "dualpoly_J2_m12_t0.csv").exists()


class TestConfigValidation:
    def test_mode_checked(self):
        with pytest.raises(ValueError):
            _tiny_config(mode="parallel")

    def test_m_bounds(self):
        with pytest.raises(ValueError):
            _tiny_config(m_values=(13,))

    def test_trials_positive(self):
        with pytest.raises(ValueError):
            _tiny_config(trials=0)
