import pytest

import run_ablation
from src.schemas.train_schema import AblationMode

# accuracy points as fractions
FP_TARGET = 0.97
TERNARY_GAP = 0.015
REL_GAP = 0.0075
ORDER_TOLERANCE = 0.003


@pytest.mark.slow
class TestDeskScaleAblation:
    @pytest.fixture(scope="class")
    def medians(self, tmp_path_factory):
        rows = run_ablation.run_grid(tmp_path_factory.mktemp("ablation"), seeds=(0, 1, 2))
        assert len(rows) == 3
        return run_ablation.median_row(rows)

    def test_fp_baseline(self, medians):
        assert medians["fp"] >= FP_TARGET

    def test_all_ternary_fine_tune_gap(self, medians):
        assert medians["fp"] - medians[AblationMode.TW_ICS_FT.value] <= TERNARY_GAP + 1e-9

    def test_expansion_gap(self, medians):
        assert medians["fp"] - medians[AblationMode.TW_ICS_FT_REL.value] <= REL_GAP + 1e-9

    def test_mode_ordering(self, medians):
        modes = [m.value for m in run_ablation.ORDERED_MODES]
        for lower, upper in zip(modes, modes[1:]):
            assert medians[lower] <= medians[upper] + ORDER_TOLERANCE + 1e-9, (lower, upper, medians)


class TestAblationConfig:
    def test_fine_tune_modes_need_checkpoint(self, tmp_path):
        config = run_ablation.train_config(AblationMode.TW_ICS_FT, 0, tmp_path / "model_fp.tern")
        assert config.pretrained == str(tmp_path / "model_fp.tern")
        assert config.lr == run_ablation.FINE_TUNE_LR

    def test_expansion_mode_uses_two_branches(self, tmp_path):
        config = run_ablation.train_config(AblationMode.TW_ICS_FT_REL, 0, tmp_path / "model_fp.tern")
        assert config.t_ex == 2
        assert config.betas == [0.05, 0.1]

    def test_scratch_modes(self):
        config = run_ablation.train_config(AblationMode.TW_ICS, 1)
        assert config.pretrained is None
        assert config.lr == run_ablation.SCRATCH_LR
        assert config.first_last.value == "tern"

    def test_median_row(self):
        rows = [
            {"seed": s, "fp": fp, **{m.value: fp - 0.01 for m in run_ablation.TERNARY_MODES}}
            for s, fp in enumerate([0.9, 1.0, 0.95])
        ]
        medians = run_ablation.median_row(rows)
        assert medians["fp"] == pytest.approx(0.95)
        assert medians["tw"] == pytest.approx(0.94)
