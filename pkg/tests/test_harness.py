import json

import pytest

from speclab import cli, harness


class TestRunSuite:
    def test_unknown_suite(self):
        with pytest.raises(harness.HarnessError, match="valid:"):
            harness.run_suite("ell4", "foo")

    def test_unknown_instance(self):
        with pytest.raises(FileNotFoundError):
            harness.run_suite("nonexistent-label", "surface")

    def test_surface_report_schema(self):
        report = harness.run_suite("ell4", "surface")
        doc = report.as_dict()
        assert doc["instance"] == "ell4" and doc["suite"] == "surface"
        assert doc["pass"] is True
        for check in doc["checks"]:
            for key in ("name", "paper_eq", "lhs", "rhs", "abs_err",
                        "rel_err", "tol", "pass"):
                assert key in check
            assert len(check["lhs"]) == 2
        json.loads(report.to_json())

    def test_tau_requires_residue_free(self):
        with pytest.raises(harness.HarnessError, match="residue-free"):
            harness.run_suite("g2-23", "tau")

    def test_determinism(self):
        r1 = harness.run_suite("ell4", "scaling")
        r2 = harness.run_suite("ell4", "scaling")
        for c1, c2 in zip(r1.checks, r2.checks):
            assert c1.name == c2.name
            assert c1.lhs == c2.lhs and c1.rhs == c2.rhs

    def test_tolerance_override(self):
        report = harness.run_suite("ell4", "scaling", tol_override=1e-16)
        assert not report.passed  # absurdly tight override must gate


class TestDescribe:
    def test_ell4(self):
        doc = harness.describe("ell4")
        c = doc["counts"]
        assert (c["p"], c["genus"], c["r"], c["dim"]) == (4, 1, 8, 8)
        assert doc["genericity"]["ok"]

    def test_g2_5(self):
        doc = harness.describe("g2-5")
        c = doc["counts"]
        assert (c["p"], c["genus"], c["r"], c["dim"]) == (6, 2, 12, 11)


class TestSweep:
    def test_empty_eps_list(self):
        with pytest.raises(harness.HarnessError, match="empty"):
            harness.sweep_epsilon("ell4", "omega", "A1", [])

    def test_unknown_functional(self):
        with pytest.raises(harness.HarnessError, match="unknown functional"):
            harness.sweep_epsilon("ell4", "zeta", "A1", [1e-3])

    def test_csv_shape(self):
        rows = harness.sweep_epsilon("ell4", "omega", "A1", [1e-3, 5e-4])
        csv = harness.sweep_to_csv(rows)
        lines = csv.strip().splitlines()
        assert lines[0].startswith("eps,")
        assert len(lines) == 3


class TestCLI:
    def test_describe(self, capsys):
        rc = cli.main(["describe", "--instance", "ell4"])
        assert rc == 0
        out = capsys.readouterr().out
        assert '"genus": 1' in out

    def test_verify_exit_codes(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        rc = cli.main(["verify", "--instance", "ell4", "--suite", "scaling",
                       "--report", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["pass"] is True
        rc2 = cli.main(["verify", "--instance", "ell4", "--suite", "foo"])
        assert rc2 == 2

    def test_sweep_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        rc = cli.main(["sweep", "--instance", "ell4", "--functional", "omega",
                       "--coord", "A1", "--eps-list", "1e-3,5e-4",
                       "--out", str(out)])
        assert rc == 0
        assert out.read_text().startswith("eps,")


class TestSweepNoiseFloor:
    def test_tiny_eps_flags_floor(self):
        rows = harness.sweep_epsilon("ell4", "omega", "A1",
                                     [1e-3, 1e-7, 5e-8])
        assert any(r["floor"] for r in rows[1:])


class TestFileInstances:
    def test_describe_from_file(self, tmp_path):
        from speclab.instances import dump_instance, load_instance
        spec = load_instance("ell4")
        path = tmp_path / "inst.json"
        path.write_text(dump_instance(spec))
        doc = harness.describe(str(path))
        assert doc["counts"]["genus"] == 1
