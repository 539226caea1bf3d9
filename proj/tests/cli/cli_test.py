import json
import os
import subprocess
import sys
import tempfile
import unittest

BIN = None


def run(*args, check=True):
    p = subprocess.run([BIN, *args], capture_output=True, text=True)
    if check and p.returncode != 0:
        raise AssertionError(f"{args} exited {p.returncode}: {p.stderr}")
    return p


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.dir = tempfile.TemporaryDirectory()
        cls.mtx = os.path.join(cls.dir.name, "a.mtx")
        cls.stream = os.path.join(cls.dir.name, "a.txt")
        run("gen", "lowrank", "-m", "64", "-n", "100", "-k", "5", "--noise", "0.05", "--seed", "3", "--out", cls.mtx)
        run("gen", "lowrank", "-m", "64", "-n", "100", "-k", "5", "--noise", "0.05", "--seed", "3",
            "--format", "stream", "--out", cls.stream)

    @classmethod
    def tearDownClass(cls):
        cls.dir.cleanup()

    def test_batch_is_deterministic(self):
        a = run("batch", "--input", self.mtx, "-k", "5", "--eps", "0.5", "--seed", "7").stdout
        b = run("batch", "--input", self.mtx, "-k", "5", "--eps", "0.5", "--seed", "7").stdout
        self.assertEqual(a, b)
        self.assertEqual(json.loads(a)["ratio_kind"], "exact")

    def test_css_hard_pipeline(self):
        h = os.path.join(self.dir.name, "h.mtx")
        with open(h, "w") as f:
            f.write(run("gen", "css-hard", "-k", "1", "--phi", "6").stdout)
        r = json.loads(run("dist-css", "--input", h, "-k", "1", "--machines", "2", "--check").stdout)
        self.assertIn("ratio", r)
        self.assertTrue(r["checks_passed"])
        self.assertEqual(r["ledger"]["total"], r["ledger"]["phase_sum"])

    def test_stream_matches_batch(self):
        s = json.loads(run("stream-1p", "--input", self.stream, "-k", "5", "--eps", "0.5", "--trials", "9").stdout)
        b = json.loads(run("batch", "--input", self.mtx, "-k", "5", "--eps", "0.5", "--trials", "9").stdout)
        self.assertEqual(s["input"]["m"], b["input"]["m"])
        self.assertLessEqual(s["summary"]["median_ratio"], 1.5)
        self.assertLessEqual(b["summary"]["median_ratio"], 1.5)
        self.assertLessEqual(abs(s["ratio"] - b["ratio"]), 0.5)
        seeds = [r["seed"] for r in s["runs"]]
        self.assertEqual(seeds, sorted(seeds))

    def test_every_algorithm_passes_checks(self):
        for cmd, extra in [("dist-arb", ["--machines", "3"]), ("dist-css", ["--machines", "3"]),
                           ("dist-css-fast", ["--machines", "3"]), ("stream-1p", []),
                           ("stream-1p-fact", []), ("stream-2p", [])]:
            r = json.loads(run(cmd, "--input", self.stream, "-k", "3", "--check", *extra).stdout)
            self.assertTrue(r["checks_passed"], cmd)
            self.assertGreaterEqual(r["ratio"], 1 - 1e-9, cmd)

    def test_stream_from_stdin(self):
        with open(self.stream) as f:
            p = subprocess.run([BIN, "stream-2p", "--input", "-", "-k", "3"], stdin=f, capture_output=True, text=True)
        self.assertEqual(p.returncode, 0, p.stderr)
        a = json.loads(p.stdout)
        b = json.loads(run("stream-2p", "--input", self.stream, "-k", "3").stdout)
        self.assertEqual(a["ratio"], b["ratio"])
        self.assertEqual(a["input"]["format"], "stdin")

    def test_json_out(self):
        out = os.path.join(self.dir.name, "r.json")
        p = run("stream-2p", "--input", self.mtx, "-k", "2", "--json-out", out)
        with open(out) as f:
            self.assertEqual(json.load(f), json.loads(p.stdout))

    def test_exit_codes(self):
        self.assertEqual(run("batch", "--input", self.mtx, "--bogus", check=False).returncode, 64)
        self.assertEqual(run(check=False).returncode, 64)
        self.assertEqual(run("batch", "--input", os.path.join(self.dir.name, "none.mtx"), check=False).returncode, 2)
        self.assertEqual(run("batch", "--input", self.mtx, "-k", "0", check=False).returncode, 2)
        self.assertEqual(run("dist-css", "--input", self.mtx, "--partition", "arbitrary", check=False).returncode, 2)
        bad = os.path.join(self.dir.name, "bad.txt")
        with open(bad, "w") as f:
            f.write("2 2 1\n3 1 1\n")
        self.assertEqual(run("stream-1p", "--input", bad, check=False).returncode, 2)

    def test_check_subcommand(self):
        r = json.loads(run("check", "--input", self.stream, "-k", "5").stdout)
        self.assertTrue(r["checks_passed"])
        self.assertEqual(r["numeric_rank"], 64)


if __name__ == "__main__":
    BIN = sys.argv.pop(1)
    unittest.main()
