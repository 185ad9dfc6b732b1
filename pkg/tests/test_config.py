
import pytest

from safer.config import (
    SaferConfig,
    WEIGHTS_V1,
    WEIGHTS_V2,
    granularity_ratio,
    validate_config,
)


class TestDefaults:
    def test_published_values(self):
        cfg = SaferConfig()
        assert cfg.limits.t_r == 0.1
        assert cfg.gate.beta == 2.0
        assert cfg.search.gamma == 0.05
        assert cfg.search.delta == 0.1
        assert cfg.search.n_v == cfg.search.n_omega == 50
        assert cfg.reward.lambda1 == 35.0
        assert cfg.reward.lambda2 == 10.0
        assert (WEIGHTS_V1.c1, WEIGHTS_V1.c2, WEIGHTS_V1.c3) == (0.4, 0.2, 0.4)
        assert (WEIGHTS_V2.c1, WEIGHTS_V2.c2, WEIGHTS_V2.c3) == (0.4, 0.4, 0.2)

    def test_granularity_ratio(self):
        assert granularity_ratio(SaferConfig()) == pytest.approx(0.5)


class TestFlatDict:
    def test_round_trip(self):
        cfg = SaferConfig()
        cfg.gate.beta = 3.0
        cfg.search.gamma = 0.07
        cfg.sac.hidden = (64, 64)
        rebuilt = SaferConfig.from_flat_dict(cfg.to_flat_dict())
        assert rebuilt.gate.beta == 3.0
        assert rebuilt.search.gamma == 0.07
        assert rebuilt.sac.hidden == (64, 64)
        assert rebuilt.to_flat_dict() == cfg.to_flat_dict()

    def test_namespaced_keys(self):
        flat = SaferConfig().to_flat_dict()
        assert "limits.v_max" in flat
        assert "gate.beta" in flat
        assert "cost.c1" in flat
        assert "reward.lambda1" in flat

    def test_unknown_key_rejected(self):
        with pytest.raises(KeyError):
            SaferConfig.from_flat_dict({"gate.nonsense": 1})
        with pytest.raises(KeyError):
            SaferConfig.from_flat_dict({"nonsense.beta": 1})
        with pytest.raises(KeyError):
            SaferConfig.from_flat_dict({"beta": 1})

    def test_file_round_trip(self, tmp_path):
        cfg = SaferConfig()
        cfg.cost.c2 = 0.4
        path = tmp_path / "cfg.json"
        cfg.save(str(path))
        assert SaferConfig.load(str(path)).cost.c2 == 0.4


class TestValidation:
    def test_defaults_clean(self):
        errors, warnings = validate_config(SaferConfig())
        assert errors == []
        assert warnings == []

    def test_beta_must_exceed_one(self):
        cfg = SaferConfig()
        cfg.gate.beta = 1.0
        errors, _ = validate_config(cfg)
        assert any("beta" in e for e in errors)

    def test_gamma_delta_bounds(self):
        cfg = SaferConfig()
        cfg.search.gamma = 0.0
        cfg.search.delta = 1.5
        errors, _ = validate_config(cfg)
        assert any("gamma" in e for e in errors)
        assert any("delta" in e for e in errors)

    def test_negative_limit(self):
        cfg = SaferConfig()
        cfg.limits.v_max = -1.0
        errors, _ = validate_config(cfg)
        assert any("v_max" in e for e in errors)

    def test_coarse_focused_search_warns(self):
        cfg = SaferConfig()
        cfg.search.gamma = 0.5
        cfg.search.delta = 0.1
        errors, warnings = validate_config(cfg)
        assert errors == []
        assert any("granularity" in w for w in warnings)

    def test_timing_budget_warning(self):
        cfg = SaferConfig()
        # 25 focused candidates at 10 ms each cannot fit in t_r = 0.1 s
        errors, warnings = validate_config(
            cfg, per_candidate_seconds=0.01, policy_inference_seconds=0.01
        )
        assert errors == []
        assert any("budget" in w for w in warnings)

    def test_timing_budget_ok(self):
        _, warnings = validate_config(
            SaferConfig(), per_candidate_seconds=1e-5, policy_inference_seconds=1e-3
        )
        assert warnings == []
