"""End-to-end tests for the scenario-driven command line."""

from __future__ import annotations

import json
import math

from ammlab import __version__
from ammlab.cli import main, run_scenario, validate_scenario_data

UNI = {"id": "uni", "protocol": "uniswap", "reserves": [100, 100]}
BAL = {"id": "bal", "protocol": "balancer", "reserves": [100, 100], "weights": [0.8, 0.2]}
CRV = {"id": "crv", "protocol": "curve", "reserves": [100, 100], "amplification": 10}
DDO = {
    "id": "ddo",
    "protocol": "dodo",
    "reserves": [100, 100],
    "amplification": 0.5,
    "oracle_price": 1.0,
}


def write_scenario(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def read_csv_columns(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestVersion:
    def test_prints_package_version(self, capsys):
        assert main(["version"]) == 0
        assert capsys.readouterr().out == f"ammlab {__version__}\n"


class TestValidate:
    def test_valid_scenario_is_silent(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path,
            {
                "pools": [UNI, BAL, CRV, DDO],
                "actions": [{"action": "slippage_curve", "pool": "uni"}],
            },
        )
        assert main(["validate", str(path)]) == 0
        assert capsys.readouterr().out == ""

    def test_weights_must_sum_to_one(self, tmp_path, capsys):
        bad = dict(BAL, weights=[0.6, 0.6])
        path = write_scenario(tmp_path, {"pools": [bad], "actions": []})
        assert main(["validate", str(path)]) == 2
        assert "weights must sum to 1" in capsys.readouterr().out

    def test_undefined_pool_reference_is_named(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path,
            {"pools": [UNI], "actions": [{"action": "slippage_curve", "pool": "ghost"}]},
        )
        assert main(["validate", str(path)]) == 2
        assert "'ghost'" in capsys.readouterr().out

    def test_unparseable_file(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["validate", str(path)]) == 1
        assert "cannot parse scenario" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "absent.json")]) == 1

    def test_unknown_pool_keys_rejected(self):
        problems = validate_scenario_data(
            {"pools": [dict(UNI, fee=0.003)], "actions": []}
        )
        assert any("unknown keys" in p for p in problems)

    def test_divergence_on_dodo_rejected(self):
        problems = validate_scenario_data(
            {
                "pools": [DDO],
                "actions": [{"action": "divergence_curve", "pool": "ddo"}],
            }
        )
        assert any("does not apply to dodo" in p for p in problems)

    def test_duplicate_pool_ids_rejected(self):
        problems = validate_scenario_data({"pools": [UNI, UNI], "actions": []})
        assert any("duplicate pool id" in p for p in problems)

    def test_numeraire_cannot_appreciate(self):
        problems = validate_scenario_data(
            {
                "pools": [UNI],
                "actions": [{"action": "divergence_curve", "pool": "uni", "asset": 0}],
            }
        )
        assert any("numeraire" in p for p in problems)

    def test_slippage_grid_domain_enforced(self):
        problems = validate_scenario_data(
            {
                "pools": [UNI],
                "actions": [
                    {"action": "slippage_curve", "pool": "uni", "grid": [0.5, 0.96]}
                ],
            }
        )
        assert any("(0, 0.95]" in p for p in problems)


class TestRun:
    def test_constant_product_slippage_equals_the_grid(self, tmp_path):
        path = write_scenario(
            tmp_path,
            {
                "pools": [UNI],
                "actions": [
                    {
                        "action": "slippage_curve",
                        "pool": "uni",
                        "grid": {"start": 0.01, "stop": 0.9, "points": 50},
                    }
                ],
            },
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 0
        header, rows = read_csv_columns(out / "scenario_a000_slippage_uni.csv")
        assert header == ["grid", "value", "pool", "protocol", "hyperparameters"]
        assert len(rows) == 50
        for row in rows:
            grid, value = float(row[0]), float(row[1])
            assert abs(value - grid) <= 1e-12
            assert row[2:] == ["uni", "uniswap", "weights=0.5|0.5"]

    def test_empty_actions(self, tmp_path):
        path = write_scenario(tmp_path, {"pools": [UNI], "actions": []})
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 0
        receipts = out / "scenario_receipts.log"
        assert receipts.exists()
        assert receipts.read_bytes() == b""
        assert list(out.glob("*.csv")) == []

    def test_receipts_record_transitions(self, tmp_path):
        path = write_scenario(
            tmp_path,
            {
                "pools": [UNI],
                "actions": [
                    {
                        "action": "swap",
                        "pool": "uni",
                        "input_asset": 0,
                        "output_asset": 1,
                        "amount": 10,
                    },
                    {"action": "add_liquidity", "pool": "uni", "fraction": 0.1},
                ],
            },
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 0
        lines = (out / "scenario_receipts.log").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("action 000 swap pool=uni")
        assert "rule=invariant_preserved" in lines[0]
        assert lines[0].endswith("passed=yes")
        assert lines[1].startswith("action 001 add_liquidity pool=uni")
        assert "rule=spot_rates_preserved" in lines[1]
        assert lines[1].endswith("passed=yes")

    def test_swaps_move_the_state_forward(self, tmp_path):
        # two consecutive swaps run against the evolving state
        path = write_scenario(
            tmp_path,
            {
                "pools": [UNI],
                "actions": [
                    {"action": "swap", "pool": "uni", "amount": 10},
                    {"action": "swap", "pool": "uni", "amount": 10},
                ],
            },
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 0
        lines = (out / "scenario_receipts.log").read_text(encoding="utf-8").splitlines()
        first = float(lines[0].split("x_out=")[1].split()[0])
        second = float(lines[1].split("x_out=")[1].split()[0])
        assert math.isclose(first, 100.0 / 11.0, rel_tol=1e-12)
        assert second < first

    def test_unattainable_points_keep_partial_output(self, tmp_path, capsys):
        pool = dict(CRV, amplification=1e8)
        path = write_scenario(
            tmp_path,
            {
                "pools": [pool],
                "actions": [
                    {"action": "divergence_curve", "pool": "crv", "grid": [-0.5, 0.5]}
                ],
            },
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 3
        manifest = (out / "scenario_failures.txt").read_text(encoding="utf-8")
        assert "unattainable" in manifest
        csv_text = (out / "scenario_a000_divergence_loss_crv.csv").read_text(
            encoding="utf-8"
        )
        assert "nan" in csv_text

    def test_domain_error_during_execution(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path,
            {
                "pools": [UNI],
                "actions": [{"action": "swap", "pool": "uni", "amount": -150}],
            },
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 2
        assert "action 000 swap" in capsys.readouterr().err

    def test_parallel_must_be_positive(self, tmp_path, capsys):
        path = write_scenario(tmp_path, {"pools": [UNI], "actions": []})
        assert main(["run", str(path), "--parallel", "0", "--out", str(tmp_path)]) == 2
        assert "--parallel" in capsys.readouterr().err

    def test_validation_problems_block_execution(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path, {"pools": [dict(UNI, reserves=[100])], "actions": []}
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 2
        assert not out.exists()

    def test_output_directory_resolves_against_the_scenario_file(self, tmp_path):
        nested = tmp_path / "nested"
        nested.mkdir()
        path = write_scenario(
            nested,
            {
                "output": {"stem": "demo", "directory": "data"},
                "pools": [UNI],
                "actions": [],
            },
        )
        assert run_scenario(path) == 0
        assert (nested / "data" / "demo_receipts.log").exists()

    def test_out_flag_overrides_the_scenario_directory(self, tmp_path):
        path = write_scenario(
            tmp_path,
            {
                "output": {"stem": "demo", "directory": "data"},
                "pools": [UNI],
                "actions": [],
            },
        )
        override = tmp_path / "override"
        assert run_scenario(path, out_dir=override) == 0
        assert (override / "demo_receipts.log").exists()
        assert not (tmp_path / "data").exists()


class TestDeterminism:
    SCENARIO = {
        "output": {"stem": "det"},
        "pools": [UNI, BAL, CRV, DDO],
        "actions": [
            {"action": "swap", "pool": "crv", "amount": 17.5},
            {"action": "add_liquidity", "pool": "bal", "fraction": 0.25},
            {
                "action": "compare",
                "pools": ["uni", "bal", "crv", "ddo"],
                "kind": "slippage",
            },
            {"action": "divergence_curve", "pool": "crv", "grid": [-0.5, 0.21, 1.0]},
            {"action": "cross_section", "pool": "uni"},
        ],
    }

    def collect(self, directory):
        return {
            p.name: p.read_bytes() for p in sorted(directory.iterdir())
        }

    def test_reruns_and_parallelism_are_byte_identical(self, tmp_path):
        path = write_scenario(tmp_path, self.SCENARIO)
        outputs = []
        for name, parallel in (("one", 1), ("two", 1), ("eight", 8)):
            out = tmp_path / name
            assert run_scenario(path, out_dir=out, parallel=parallel) == 0
            outputs.append(self.collect(out))
        assert outputs[0] == outputs[1]
        assert outputs[0] == outputs[2]
        # four comparison series plus two single-pool series plus the log
        assert sum(1 for name in outputs[0] if name.endswith(".csv")) == 6
