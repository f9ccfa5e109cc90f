"""End-to-end checks of the command-line runner. Usage: cli_test.py <path-to-binary>"""

import csv
import json
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

BIN = None


def run(*args, expect=0):
    r = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    if r.returncode != expect:
        raise AssertionError(f"{args}: rc={r.returncode}, expected {expect}\n{r.stdout}\n{r.stderr}")
    return r


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj))
    return path


class Cli(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def cfg(self, name, obj):
        return write_json(self.tmp / name, obj)

    def test_simulate_is_deterministic(self):
        c = self.cfg("c.json", {"design": {"n": 60, "p": 10}})
        run("simulate", "--config", c, "--seed", 7, "--out", self.tmp / "a")
        run("simulate", "--config", c, "--seed", 7, "--out", self.tmp / "b")
        for f in ["X.csv", "y.csv", "beta_star.csv", "manifest.json"]:
            self.assertEqual((self.tmp / "a" / f).read_bytes(), (self.tmp / "b" / f).read_bytes(), f)
        rows = (self.tmp / "a" / "X.csv").read_text().splitlines()
        self.assertEqual(len(rows), 60)
        self.assertEqual(len(rows[0].split(",")), 10)
        self.assertEqual(json.loads((self.tmp / "a" / "manifest.json").read_text())["seed"], 7)
        ys = [float(v) for v in (self.tmp / "a" / "y.csv").read_text().split()]
        self.assertTrue(set(ys) <= {0.0, 1.0})

    def test_block_design_needs_two_p_rows(self):
        c = self.cfg("c.json", {"design": {"n": 15, "p": 10}})
        r = run("simulate", "--config", c, "--out", self.tmp / "o", expect=2)
        self.assertIn("error", r.stderr)

    def test_linear_family_gives_real_responses(self):
        c = self.cfg("c.json", {"family": "linear", "design": {"kind": "gaussian", "n": 50, "p": 4}})
        run("simulate", "--config", c, "--out", self.tmp / "o")
        ys = [float(v) for v in (self.tmp / "o" / "y.csv").read_text().split()]
        self.assertTrue(any(v != round(v) for v in ys))

    def test_unknown_keys_are_listed(self):
        c = self.cfg("c.json", {"seed": 1, "desgin": {}, "tilt": {"dampin": 0.3}})
        r = run("fit", "--config", c, "--out", self.tmp / "o", expect=2)
        self.assertIn("desgin", r.stderr)
        self.assertIn("tilt.dampin", r.stderr)

    def test_pairing_error(self):
        c = self.cfg("c.json", {"prior": {"kind": "gaussian"}})
        r = run("fit", "--config", c, "--method", "tilt", "--out", self.tmp / "o", expect=3)
        self.assertIn("pairing error", r.stderr)
        run("coverage", "--config", c, "--out", self.tmp / "o", expect=3)
        c2 = self.cfg("c2.json", {"family": "linear"})
        run("fit", "--config", c2, "--method", "jj", "--out", self.tmp / "o", expect=3)

    def test_fit_is_byte_identical_and_manifest_round_trips(self):
        c = self.cfg("c.json", {"design": {"n": 80, "p": 6}, "mc": {"n_samples": 500}})
        run("fit", "--config", c, "--seed", 11, "--out", self.tmp / "a")
        run("fit", "--config", c, "--seed", 11, "--out", self.tmp / "b")
        fa = (self.tmp / "a" / "fit.json").read_bytes()
        self.assertEqual(fa, (self.tmp / "b" / "fit.json").read_bytes())
        run("fit", "--config", self.tmp / "a" / "manifest.json", "--out", self.tmp / "c")
        self.assertEqual(fa, (self.tmp / "c" / "fit.json").read_bytes())
        self.assertEqual((self.tmp / "a" / "manifest.json").read_bytes(),
                         (self.tmp / "c" / "manifest.json").read_bytes())
        r = json.loads(fa)
        for k in ["method", "u", "elbo_or_logz_estimate", "converged", "iterations", "wallclock_seconds", "seed",
                  "solver_options"]:
            self.assertIn(k, r)
        self.assertEqual(len(r["u"]), 6)
        # A manifest from another command is refused.
        run("diagnose", "--config", self.tmp / "a" / "manifest.json", "--out", self.tmp / "d", expect=2)

    def test_tilt_on_zero_design(self):
        x = self.tmp / "X.csv"
        x.write_text("\n".join(["0,0,0"] * 5) + "\n")
        y = self.tmp / "y.csv"
        y.write_text("1\n0\n1\n1\n0\n")
        c = self.cfg("c.json", {"design": {"kind": "file", "X": str(x), "y": str(y)}})
        run("fit", "--config", c, "--out", self.tmp / "o")
        r = json.loads((self.tmp / "o" / "fit.json").read_text())
        self.assertEqual(r["u"], [0.0, 0.0, 0.0])
        self.assertTrue(r["converged"])
        self.assertEqual(r["iterations"], 1)

        run("diagnose", "--config", c, "--out", self.tmp / "d")
        d = json.loads((self.tmp / "d" / "diagnostics.json").read_text())
        for k in ["opnorm_xtx", "max_diag_xtx", "trace_A_sq_zero", "trace_A_sq_max", "score_norm"]:
            self.assertEqual(d[k], 0.0, k)

    def test_diagnose_identity_design(self):
        x = self.tmp / "X.csv"
        x.write_text("\n".join(",".join("3" if i == j else "0" for j in range(4)) for i in range(4)) + "\n")
        y = self.tmp / "y.csv"
        y.write_text("0\n1\n0\n1\n")
        c = self.cfg("c.json", {"design": {"kind": "file", "X": str(x), "y": str(y)}})
        run("diagnose", "--config", c, "--out", self.tmp / "d")
        d = json.loads((self.tmp / "d" / "diagnostics.json").read_text())
        self.assertAlmostEqual(d["opnorm_xtx"], 9.0, places=8)

    def test_evidence_rows_and_lower_bound(self):
        c = self.cfg("c.json", {"design": {"kind": "gaussian", "n": 30, "p": 6},
                                "mc": {"n_samples": 500}, "evidence": {"evaluation_samples": 4000}})
        run("evidence", "--config", c, "--replicates", 20, "--out", self.tmp / "e")
        rows = read_csv(self.tmp / "e" / "evidence.csv")
        self.assertEqual(len(rows), 20)
        self.assertEqual(list(rows[0].keys())[:8],
                         ["replicate", "p", "n", "method", "estimate", "se", "gap_per_p", "reference"])
        for row in rows:
            self.assertEqual(row["reference"], "enumeration")
            self.assertLessEqual(float(row["gap_per_p"]) * 6, 3 * float(row["se"]) + 1e-12)

    def test_evidence_gaussian_prior_against_quadrature(self):
        c = self.cfg("c.json", {"prior": {"kind": "gaussian"}, "design": {"kind": "gaussian", "n": 40, "p": 1},
                                "mc": {"n_samples": 2000}})
        run("evidence", "--config", c, "--replicates", 3, "--out", self.tmp / "e")
        rows = read_csv(self.tmp / "e" / "evidence.csv")
        self.assertEqual({r["method"] for r in rows}, {"gauss", "jj"})
        for row in rows:
            self.assertEqual(row["reference"], "quadrature")
            self.assertLessEqual(float(row["gap_per_p"]), 3 * float(row["se"]) + 1e-12)

    def test_evidence_oracle_capacity(self):
        c = self.cfg("c.json", {"design": {"n": 40, "p": 20}, "evidence": {"oracle": "exact"}})
        r = run("evidence", "--config", c, "--out", self.tmp / "e", expect=4)
        self.assertIn("capacity", r.stderr)
        run("evidence", "--config", c, "--method", "gibbs", "--out", self.tmp / "e", expect=3)

    def test_coverage(self):
        c = self.cfg("c.json", {"design": {"kind": "gaussian", "n": 200, "p": 8},
                                "gibbs": {"sweeps": 600, "burn_in": 100, "keep_every": 5}})
        run("coverage", "--config", c, "--seed", 5, "--out", self.tmp / "a")
        run("coverage", "--config", c, "--seed", 5, "--out", self.tmp / "b")
        a = (self.tmp / "a" / "coverage.json").read_bytes()
        self.assertEqual(a, (self.tmp / "b" / "coverage.json").read_bytes())
        r = json.loads(a)
        self.assertAlmostEqual(r["replicates"][0]["threshold"], 0.85)
        self.assertEqual(r["replicates"][0]["draws"], 4 * 100)
        self.assertTrue(0.0 <= r["replicates"][0]["exceedance"] <= 1.0)


if __name__ == "__main__":
    BIN = sys.argv.pop(1)
    unittest.main()
