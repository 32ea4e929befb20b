import json
import tempfile
from io import StringIO
from pathlib import Path

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        super().setUp()
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = Path(tmp.name)

    def call(self, *args):
        out, err = StringIO(), StringIO()
        call_command(*[str(a) for a in args], stdout=out, stderr=err)
        return out.getvalue()

    def assert_exit_code(self, code, *args):
        with self.assertLogs("spectral", level="ERROR"):
            with self.assertRaises(CommandError) as ctx:
                self.call(*args)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def write_json(self, name, payload):
        path = self.dir / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def make_fixture(self, stem="fixture", *extra):
        self.call(
            "fixture", "--scales", 3, 5, 2, "--n-per-bin", 150, "--bins", 3, "--missingness", 0.1,
            "--a-start", 0.5, "--a-end", 2.0, "--seed", 11, "--out-dir", self.dir, "--stem", stem, *extra,
        )
        return self.dir / f"{stem}.csv", self.dir / f"{stem}_schema.json"


class FixtureCommandTests(CommandTestCase):
    def test_fixture_is_byte_identical_across_runs(self):
        first = self.make_fixture("a")
        second = self.make_fixture("b")
        for a, b in zip(first, second):
            self.assertEqual(a.read_bytes(), b.read_bytes())
        table = pd.read_csv(first[0], dtype=str, keep_default_na=False)
        self.assertEqual(list(table.columns), ["id", "year", "WTSSPS", "party", "q1", "q2", "q3"])
        self.assertEqual(len(table), 450)

    def test_spec_file_and_overrides(self):
        spec = self.write_json("spec.json", {"scales": [2, 2], "n_per_bin": 10, "bins": 2, "topic": "aborto"})
        self.call("fixture", "--spec", spec, "--bins", 1, "--out-dir", self.dir)
        schema = json.loads((self.dir / "fixture_schema.json").read_text(encoding="utf-8"))
        self.assertEqual([s["topics"] for s in schema], [["aborto"], ["aborto"]])
        self.assertEqual(len(pd.read_csv(self.dir / "fixture.csv")), 10)

    def test_invalid_spec_exits_with_validation_code(self):
        self.assert_exit_code(1, "fixture", "--scales", 1, "--n-per-bin", 10, "--bins", 1, "--out-dir", self.dir)
        spec = self.write_json("spec.json", [1, 2])
        self.assert_exit_code(1, "fixture", "--spec", spec, "--out-dir", self.dir)


class AnalyzeCommandTests(CommandTestCase):
    def test_json_to_stdout(self):
        data, schema = self.make_fixture()
        result = json.loads(self.call("analyze", "--data", data, "--schema", schema, "--group-var", "party"))
        self.assertEqual([b["bin"] for b in result["bins"]], ["1990-1995", "1995-2000", "2000-2005"])
        self.assertIn("party", result["series"]["groups"])
        self.assertIsNotNone(result["series"]["trace_concentration"])

    def test_multiple_outputs(self):
        data, schema = self.make_fixture()
        self.call(
            "analyze", "--data", data, "--schema", schema, "--norm", "frobenius",
            "--out", self.dir / "r.json", "--out", self.dir / "r.csv", "--out", self.dir / "r.svg",
        )
        flat = pd.read_csv(self.dir / "r.csv")
        nested = json.loads((self.dir / "r.json").read_text(encoding="utf-8"))
        self.assertEqual(len(flat), 3)
        self.assertEqual(nested["config"]["norm"], "frobenius")
        self.assertAlmostEqual(flat.loc[0, "headline"], nested["bins"][0]["index"]["norm_frobenius"], delta=1e-12)
        self.assertIn(b"<svg", (self.dir / "r.svg").read_bytes())

    def test_bootstrap_option(self):
        data, schema = self.make_fixture()
        result = json.loads(self.call(
            "analyze", "--data", data, "--schema", schema, "--bootstrap-b", 30, "--seed", 4,
        ))
        for b in result["bins"]:
            self.assertEqual(b["bootstrap"]["B"], 30)
            self.assertLessEqual(b["bootstrap"]["ci_low"], b["bootstrap"]["ci_high"])

    def test_missing_schema_file(self):
        data, _ = self.make_fixture()
        self.assert_exit_code(1, "analyze", "--data", data, "--schema", self.dir / "nope.json")

    def test_invalid_options(self):
        data, schema = self.make_fixture()
        self.assert_exit_code(1, "analyze", "--data", data, "--schema", schema, "--bin-width-years", 0)
        self.assert_exit_code(1, "analyze", "--data", data, "--schema", schema, "--out", self.dir / "r.xlsx")
        self.assert_exit_code(1, "analyze", "--data", data, "--schema", schema, "--group-var", "region")

    def test_runtime_failure_exit_code(self):
        data = self.dir / "flat.csv"
        data.write_text("year,WTSSPS,q1\n1990,1,1\n1991,1,1\n", encoding="utf-8")
        schema = self.write_json("schema.json", [{"question_id": "q1", "ordered_codes": [1, 2]}])
        error = self.assert_exit_code(2, "analyze", "--data", data, "--schema", schema)
        self.assertIn("[1990-1995]", str(error))


class DecomposeCommandTests(CommandTestCase):
    def test_trace_concentration(self):
        matrices = self.write_json("m.json", [
            {"bin": "a", "sigma": [[2, 0], [0, 1]]},
            {"bin": "b", "sigma": [[4, 0], [0, 2]]},
        ])
        result = json.loads(self.call("decompose", "trace-concentration", "--matrices", matrices))
        series = result["series"]
        self.assertEqual(series["bins"], ["a", "b"])
        self.assertAlmostEqual(series["observed"][1], 4.0)
        self.assertAlmostEqual(series["variance_only"][1], 4.0)
        self.assertAlmostEqual(series["concentration_only"][1], 2.0)
        self.assertEqual([c["bin"] for c in result["changes"]], ["a", "b"])

    def test_trace_concentration_rejects_asymmetric(self):
        matrices = self.write_json("m.json", [{"bin": "a", "sigma": [[1, 2], [0, 1]]}])
        self.assert_exit_code(1, "decompose", "trace-concentration", "--matrices", matrices)

    def test_groups(self):
        data, schema = self.make_fixture()
        self.call("decompose", "groups", "--data", data, "--schema", schema, "--group-var", "party",
                  "--out", self.dir / "g.json")
        result = json.loads((self.dir / "g.json").read_text(encoding="utf-8"))
        self.assertIsNone(result["series"]["trace_concentration"])
        series = result["series"]["groups"]["party"]
        self.assertEqual(series["group_var"], "party")
        self.assertEqual(len(series["within_only"]), len(series["observed"]))
        decomposition = result["bins"][0]["decompositions"]["party"]
        self.assertAlmostEqual(
            decomposition["pooled_rho"], decomposition["rho_within"] + decomposition["rho_between"], delta=1e-9,
        )

    def test_groups_requires_group_var(self):
        data, schema = self.make_fixture()
        self.assert_exit_code(1, "decompose", "groups", "--data", data, "--schema", schema)


class SimulateCommandTests(CommandTestCase):
    def test_sample_and_report_are_reproducible(self):
        model = self.write_json("model.json", {"a": 1.5, "beta": [1, 0.5], "gamma": [[1, 0], [0, 0.5]]})
        for name in ("a", "b"):
            self.call("simulate", "latent", "--model", model, "--n", 200, "--seed", 3, "--year", 2000,
                      "--out", self.dir / f"{name}.csv", "--report", self.dir / f"{name}.json")
        self.assertEqual((self.dir / "a.csv").read_bytes(), (self.dir / "b.csv").read_bytes())
        self.assertEqual((self.dir / "a.json").read_bytes(), (self.dir / "b.json").read_bytes())

        table = pd.read_csv(self.dir / "a.csv")
        self.assertEqual(list(table.columns), ["id", "year", "WTSSPS", "x1", "x2"])
        report = json.loads((self.dir / "a.json").read_text(encoding="utf-8"))
        self.assertEqual(report["population_covariance"], [[2.5, 0.75], [0.75, 0.875]])
        self.assertTrue(report["strict_increase"]["passed"])

    def test_invalid_model(self):
        model = self.write_json("model.json", {"a": 0, "beta": [1], "gamma": [[1]]})
        self.assert_exit_code(1, "simulate", "latent", "--model", model, "--n", 10, "--out", self.dir / "x.csv")

    def test_non_psd_gamma(self):
        model = self.write_json("model.json", {"a": 1, "beta": [1, 0], "gamma": [[1, 0], [0, -1]]})
        self.assert_exit_code(1, "simulate", "latent", "--model", model, "--n", 10, "--out", self.dir / "x.csv")


class VerifyCommandTests(CommandTestCase):
    def test_monotonicity_is_reproducible(self):
        args = ("verify", "monotonicity", "--cases", 20, "--strict-cases", 10, "--grid-points", 10, "--seed", 5)
        first = self.call(*args)
        self.assertEqual(first, self.call(*args))
        self.assertTrue(json.loads(first)["passed"])

    def test_asymptotics(self):
        out = self.dir / "asym.json"
        self.call("verify", "asymptotics", "--n-grid", 100, 1600, "--trials", 30,
                  "--normality-n", 200, "--normality-trials", 50, "--seed", 2, "--out", out)
        report = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(report["consistency"]["population_rho"], 2.0)
        self.assertEqual([row["n"] for row in report["consistency"]["rows"]], [100, 1600])
        self.assertEqual(report["normality"]["expected_variance"][0], 8.0)

    def test_asymptotics_skips_normality_for_repeated_eigenvalues(self):
        report = json.loads(self.call(
            "verify", "asymptotics", "--sigma-diag", 1, 1, "--n-grid", 100, "--trials", 5, "--seed", 2,
        ))
        self.assertIn("skipped", report["normality"])

    def test_asymptotics_rejects_zero_workers(self):
        self.assert_exit_code(1, "verify", "asymptotics", "--n-grid", 100, "--trials", 5, "--workers", 0)


class BootstrapCommandTests(CommandTestCase):
    def test_json_is_reproducible(self):
        data, schema = self.make_fixture()
        args = ("bootstrap", "--data", data, "--schema", schema, "--B", 40, "--seed", 8)
        first = self.call(*args)
        self.assertEqual(first, self.call(*args))
        rows = json.loads(first)["bins"]
        self.assertEqual(len(rows), 3)
        self.assertTrue(all(len(r["replicates"]) == 40 for r in rows))

    def test_csv_output(self):
        data, schema = self.make_fixture()
        out = self.dir / "boot.csv"
        self.call("bootstrap", "--data", data, "--schema", schema, "--B", 20, "--out", out)
        table = pd.read_csv(out)
        self.assertEqual(len(table), 3)
        self.assertNotIn("replicates", table.columns)
        self.assertTrue((table["ci_low"] <= table["ci_high"]).all())

    def test_svg_is_not_supported(self):
        data, schema = self.make_fixture()
        self.assert_exit_code(1, "bootstrap", "--data", data, "--schema", schema, "--out", self.dir / "b.svg")

    def test_explicit_zero_replicates_is_rejected(self):
        data, schema = self.make_fixture()
        out = self.dir / "b.json"
        self.assert_exit_code(1, "bootstrap", "--data", data, "--schema", schema, "--B", 0, "--out", out)
        self.assert_exit_code(1, "bootstrap", "--data", data, "--schema", schema, "--level", 0)
        self.assertFalse(out.exists())
