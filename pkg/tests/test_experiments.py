import json
import math
from pathlib import Path

import numpy as np
import pytest

from rgap import SampledFunction, build_suspension, measure, slope
from rgap.cli import main
from rgap.experiments import (
    ConfigError,
    band_domain,
    builder_from_config,
    cap_domain,
    cmd_model_profile,
    geodesic_ball_domain,
    random_connected_domain,
    random_lipschitz_function,
)


def write_toml(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


class TestGenerator:
    def test_nonvanishing_gradient_on_support(self):
        S = build_suspension(2, n_t=32, n_theta=16)
        rng = np.random.default_rng(0)
        for _ in range(10):
            u = random_lipschitz_function(S, rng)
            s = slope(u)
            sup = u.values > 0
            assert sup.any()
            assert np.all(s[sup] > 0)

    def test_deterministic_given_seed(self):
        S = build_suspension(2, n_t=16, n_theta=8)
        a = random_lipschitz_function(S, np.random.default_rng(5)).values
        b = random_lipschitz_function(S, np.random.default_rng(5)).values
        assert np.array_equal(a, b)


class TestDomains:
    def test_cap_measure(self):
        S = build_suspension(2, n_t=64, n_theta=8)
        cap = cap_domain(S, 0.5)
        assert measure(S, cap) == pytest.approx(0.5, abs=1e-12)

    def test_band_excludes_tip(self):
        S = build_suspension(2, n_t=64, n_theta=8)
        band = band_domain(S, 0.3, 0.5)
        assert S.coords[band, 0].min() > 0.5
        assert measure(S, band) == pytest.approx(0.3, abs=0.02)

    def test_band_unreachable_volume(self):
        S = build_suspension(2, n_t=32, n_theta=8)
        with pytest.raises(ConfigError):
            band_domain(S, 0.9, 3.0)

    def test_random_connected_hits_volume(self):
        S = build_suspension(2, n_t=32, n_theta=16)
        rng = np.random.default_rng(2)
        dom = random_connected_domain(S, 0.4, rng)
        assert measure(S, dom) == pytest.approx(0.4, abs=0.01)

    def test_geodesic_ball_at_tip_matches_cap_up_to_boundary_ring(self):
        S = build_suspension(2, n_t=64, n_theta=8)
        ball = set(geodesic_ball_domain(S, 0, 0.25).tolist())
        cap = set(cap_domain(S, 0.25).tolist())
        sym = ball.symmetric_difference(cap)
        assert len(sym) <= 2 * 8  # at most the two rings nearest the boundary
        assert measure(S, np.array(sorted(ball))) == pytest.approx(0.25, abs=0.01)


class TestBuilderConfig:
    def test_suspension(self):
        X = builder_from_config({"kind": "suspension", "N": 2.0,
                                 "n_t": 16, "n_theta": 8})
        assert X.tag == "suspension"

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            builder_from_config({"kind": "torus"})

    def test_missing_keys(self):
        with pytest.raises(ConfigError):
            builder_from_config({"kind": "model_interval", "K": 1.0})


class TestCLI:
    def test_model_profile_runs_and_is_deterministic(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", "K = 1.0\nN = 2.0\nv_count = 21\n")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["model-profile", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["model-profile", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "model_profile.csv").read_bytes() == \
               (out2 / "model_profile.csv").read_bytes()

    def test_exit_code_config_error(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", "K = -1.0\nN = 2.0\n")
        assert main(["model-profile", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 4

    def test_exit_code_missing_config(self, tmp_path):
        assert main(["model-profile", "--config", str(tmp_path / "nope.toml"),
                     "--out", str(tmp_path / "o")]) == 4

    def test_exit_code_bad_toml(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", "K = [unclosed\n")
        assert main(["model-profile", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 4

    def test_seed_required_for_randomized(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", """
count = 2
p = [2.0]
[space]
kind = "suspension"
N = 2.0
n_t = 16
n_theta = 8
""")
        assert main(["ps-check", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 4

    def test_ps_check_deterministic(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", """
count = 3
p = [2.0]
seed = 11
[space]
kind = "suspension"
N = 2.0
n_t = 16
n_theta = 8
""")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["ps-check", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["ps-check", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "ps_check.csv").read_bytes() == (out2 / "ps_check.csv").read_bytes()

    def test_override_changes_config(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", "K = 1.0\nN = 2.0\nv_count = 5\n")
        out = tmp_path / "o"
        assert main(["model-profile", "--config", str(cfg), "--out", str(out),
                     "--override", "v_count=9"]) == 0
        body = (out / "model_profile.csv").read_text().strip().splitlines()
        assert len(body) == 10  # header + 9 rows

    def test_manifest_written(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", "K = 1.0\nN = 2.0\nv_count = 5\n")
        out = tmp_path / "o"
        main(["model-profile", "--config", str(cfg), "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "model-profile"
        assert manifest["config"]["v_count"] == 5
        assert "generated_at" in manifest

    def test_rearrange_command(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", """
J = 32
[space]
kind = "model_interval"
K = 1.0
N = 2.0
n_cells = 32
[function]
kind = "radial_cos"
""")
        out = tmp_path / "o"
        assert main(["rearrange", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "rearranged.csv").read_text().strip().splitlines()
        assert rows[0] == "x,ustar"
        vals = [float(r.split(",")[1]) for r in rows[1:]]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_gap_check_runs(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", """
p = 2.0
v = 0.5
random_domains = 1
seed = 3
n_model = 512
[space]
kind = "suspension"
N = 2.0
n_t = 32
n_theta = 8
""")
        out = tmp_path / "o"
        assert main(["gap-check", "--config", str(cfg), "--out", str(out)]) == 0
        body = (out / "gap_check.csv").read_text()
        assert "cap," in body

    def test_almost_rigidity_runs(self, tmp_path):
        cfg = write_toml(tmp_path / "c.toml", """
N = 2.0
p = 2.0
v = 0.3
L_fractions = [1.0, 0.5]
n_cells = 256
n_model = 512
""")
        out = tmp_path / "o"
        assert main(["almost-rigidity-sweep", "--config", str(cfg),
                     "--out", str(out)]) == 0
        rows = (out / "almost_rigidity.csv").read_text().strip().splitlines()
        assert len(rows) == 3
        full = rows[1].split(",")
        half = rows[2].split(",")
        assert abs(float(full[5])) < float(half[5])
