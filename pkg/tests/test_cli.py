"""
End-to-end tests of the command-line subcommands.
"""

import csv
import filecmp
import json
import math
import os
import tempfile
import unittest

from cli import build_parser, config_from_args, main
from comparison_functions import ComparisonFunction, FunctionClass, KLFunction, to_record
from counterexample import SYSTEM_SOURCE
from estimate_checker import EstimateForm, EstimateSpec

IDENTITY = ComparisonFunction.identity()


def read_table(path: str) -> list[dict]:
    with open(path) as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


class TestCommandLine(unittest.TestCase):
    """Subcommands run through cli.main."""

    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.linear = self.write("linear.txt", "n=1 m=1\ndx1 = -x1 + u1\n")
        self.counterexample = self.write("counterexample.txt", SYSTEM_SOURCE)
        iiss = EstimateSpec(EstimateForm.IISS, {"alpha": IDENTITY, "beta": KLFunction.exponential(), "sigma": IDENTITY})
        self.iiss = self.write("iiss.json", iiss.to_record().model_dump_json())
        iss = EstimateSpec(EstimateForm.ISS, {"beta": KLFunction.exponential(), "gamma": IDENTITY})
        self.iss = self.write("iss.json", iss.to_record().model_dump_json())

    def write(self, name: str, text: str) -> str:
        path = os.path.join(self.directory, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def out(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def test_parse_tolerance_flags(self):
        """Test --tol-abs and --xi map onto RunConfig fields."""
        args = build_parser().parse_args(["simulate", "--system", "s.txt", "--xi", "1, 2", "--tol-abs", "1e-9"])
        config = config_from_args(args)
        self.assertEqual(config.xi, [1.0, 2.0])
        self.assertEqual(config.tolerances.atol, 1e-9)
        self.assertEqual(config.tolerances.rtol, 1e-6)

    def test_simulate_linear(self):
        """Test x' = -x from 1 ends near e^-1."""
        out = self.out("simulate")
        self.assertEqual(main(["simulate", "--system", self.linear, "--xi", "1", "--horizon", "1", "--out", out]), 0)
        rows = read_table(os.path.join(out, "trajectory.csv"))
        self.assertAlmostEqual(float(rows[-1]["x1"]), math.exp(-1.0), delta=1e-6)
        with open(os.path.join(out, "status.json")) as f:
            status = json.load(f)
        self.assertEqual(status["status"]["status"], "completed")
        self.assertEqual(status["header"]["seed"], 0)

    def test_simulate_with_input_file(self):
        """Test an input CSV drives the simulation."""
        signal = self.write("u.csv", "t,v1\n0,1\n")
        out = self.out("forced")
        self.assertEqual(main(["simulate", "--system", self.linear, "--xi", "0", "--input", signal,
                               "--horizon", "2", "--out", out]), 0)
        rows = read_table(os.path.join(out, "trajectory.csv"))
        self.assertAlmostEqual(float(rows[-1]["x1"]), 1.0 - math.exp(-2.0), delta=1e-6)
        self.assertEqual(float(rows[-1]["u1"]), 1.0)

    def test_simulate_escape(self):
        """Test finite escape exits with 2 and records the escape time."""
        system = self.write("blowup.txt", "n=1 m=0\ndx1 = x1^2\n")
        out = self.out("escape")
        self.assertEqual(main(["simulate", "--system", system, "--xi", "1", "--horizon", "2", "--out", out]), 2)
        with open(os.path.join(out, "status.json")) as f:
            status = json.load(f)["status"]
        self.assertEqual(status["status"], "finite-escape")
        self.assertAlmostEqual(status["escape_time"], 1.0, delta=1e-3)

    def test_malformed_system(self):
        """Test a parse error exits with 1 and leaves no output."""
        system = self.write("bad.txt", "n=1 m=0\ndx1 = -y1\n")
        out = self.out("bad")
        self.assertEqual(main(["simulate", "--system", system, "--xi", "1", "--out", out]), 1)
        self.assertFalse(os.path.exists(out))

    def test_check_holds_and_violated(self):
        """Test exit 0 for a true IISS estimate and 3 for the counterexample witness."""
        out = self.out("check-linear")
        self.assertEqual(main(["check", "--system", self.linear, "--spec", self.iiss, "--xi", "1", "--out", out]), 0)
        self.assertTrue(os.path.exists(os.path.join(out, "report.json")))

        signal = self.write("half-pi.csv", f"t,v1\n0,{repr(math.pi / 2)}\n")
        xi = f"{repr(math.pi / 2 + 1.0)},{repr(math.pi / 2)}"
        out = self.out("check-counterexample")
        self.assertEqual(main(["check", "--system", self.counterexample, "--spec", self.iss, "--xi", xi,
                               "--input", signal, "--horizon", "50", "--out", out]), 3)
        with open(os.path.join(out, "report.json")) as f:
            report = json.load(f)
        self.assertEqual(report["report"]["verdict"], "violated")
        self.assertEqual(report["witness_file"], "witness.json")
        self.assertTrue(os.path.exists(os.path.join(out, "witness_input.csv")))

    def test_check_with_incomplete_spec(self):
        """Test a spec without beta exits with 1."""
        spec = self.write("incomplete.json", json.dumps({"form": "IISS", "slots": {}}))
        self.assertEqual(main(["check", "--system", self.linear, "--spec", spec, "--xi", "1",
                               "--out", self.out("incomplete")]), 1)

    def test_falsify_is_reproducible(self):
        """Test the same seed writes the same report."""
        runs = []
        for name in ("first", "second"):
            out = self.out(name)
            code = main(["falsify", "--system", self.linear, "--spec", self.iiss, "--budget", "6", "--seed", "4",
                         "--horizon", "3", "--segments", "2", "--out", out])
            self.assertEqual(code, 0)
            runs.append(os.path.join(out, "report.json"))
        self.assertTrue(filecmp.cmp(*runs, shallow=False))

    def test_falsify_then_replay_witness(self):
        """Test a counterexample violation found by falsify replays through check --witness."""
        out = self.out("falsify")
        code = main(["falsify", "--system", self.counterexample, "--spec", self.iss, "--budget", "50",
                     "--radius", str(math.pi / 2 + 2.0), "--input-bound", str(math.pi / 2), "--segments", "1",
                     "--horizon", "50", "--out", out])
        self.assertEqual(code, 3)
        witness = os.path.join(out, "witness.json")
        self.assertEqual(main(["check", "--system", self.counterexample, "--spec", self.iss, "--witness", witness,
                               "--out", self.out("replay")]), 3)

    def test_functions_factor_posdef(self):
        """Test the exact factorization of r / (1 + r^2)."""
        rho = ComparisonFunction.expression("r/(1 + r^2)", FunctionClass.POSITIVE_DEFINITE)
        inputs = self.write("rho.json", json.dumps({"function": to_record(rho).model_dump(mode="json")}))
        out = self.out("posdef")
        self.assertEqual(main(["functions", "--construction", "factor-posdef", "--inputs", inputs, "--out", out]), 0)
        with open(os.path.join(out, "functions.json")) as f:
            output = json.load(f)["output"]
        self.assertEqual(output["status"], "pass")
        self.assertEqual(sorted(output["functions"]), ["rho1", "rho2"])
        with open(os.path.join(out, "certificates.json")) as f:
            self.assertEqual(json.load(f)["output"]["functions"], {})

    def test_functions_bound_family(self):
        """Test sigma for the family M r."""
        family = [to_record(ComparisonFunction.linear(float(m))).model_dump(mode="json") for m in (1, 2, 3)]
        grid = [0.25 * i for i in range(17)]
        inputs = self.write("family.json", json.dumps({"family": family, "grid": grid}))
        out = self.out("bound-family")
        self.assertEqual(main(["functions", "--construction", "bound-family", "--inputs", inputs, "--out", out]), 0)
        with open(os.path.join(out, "functions.json")) as f:
            self.assertIn("asymptotic_gain", json.load(f)["output"]["functions"])

    def test_functions_extend_writes_table(self):
        """Test the extension is tabulated over (s, r)."""
        family = [to_record(ComparisonFunction.linear(float(m))).model_dump(mode="json") for m in (1, 2)]
        inputs = self.write("extend.json", json.dumps({"family": family, "grid": [1.0, 2.0]}))
        out = self.out("extend")
        self.assertEqual(main(["functions", "--construction", "extend", "--inputs", inputs, "--out", out]), 0)
        rows = read_table(os.path.join(out, "extend.csv"))
        self.assertEqual(len(rows), 9 * 2)

    def test_counterexample(self):
        """Test the reproduction run succeeds and writes its tables."""
        out = self.out("counterexample")
        self.assertEqual(main(["counterexample", "--gain", "2*r", "--horizon", "20", "--out", out]), 0)
        for name in ("report.json", "witness.json", "trajectory.csv", "margins.csv"):
            self.assertTrue(os.path.exists(os.path.join(out, name)), name)


if __name__ == "__main__":
    unittest.main()
