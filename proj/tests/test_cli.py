"""End-to-end checks of the qunet-cli binary: exit codes, output files and the report schema."""

import json
import os
import subprocess
import sys
import tempfile
import unittest

import jsonschema

CLI = None
SCHEMA = None


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("QUNET_MAX_DIM", None)
    if env:
        full_env.update(env)
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=full_env, timeout=300)


def read_states(path):
    """Parses a state file into a list of (dims, amplitudes)."""
    states = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("dims:"):
                states.append(([int(x) for x in line[5:].split(",")], []))
            else:
                re, im = line.split()
                states[-1][1].append(complex(float(re), float(im)))
    return states


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def run_json(self, *args):
        out = self.path("report.json")
        p = run("run", *args, "--json", out)
        self.assertEqual(p.returncode, 0, p.stderr)
        with open(out) as f:
            report = json.load(f)
        jsonschema.validate(report, SCHEMA)
        return report

    def test_many_to_one_enumerate(self):
        report = self.run_json("--protocol", "many-to-one", "--dims", "2,2", "--seed", "7", "--mode", "enumerate")
        # Two Bell measurements on 4-level qudits: 16 outcomes each.
        self.assertEqual(report["branch_count"], 256)
        self.assertEqual(len(report["branches"]), 256)
        self.assertGreaterEqual(report["min_fidelity"], 1 - 1e-9)
        self.assertAlmostEqual(sum(b["probability"] for b in report["branches"]), 1.0, delta=1e-9)

    def test_two_way_both_directions(self):
        report = self.run_json("--protocol", "two-way", "--dims", "2,3", "--seed", "1")
        self.assertEqual(report["resources"], {"shared_qudits": 2, "qudit_dim": 6, "xor_ancillas": 2})
        for branch in report["branches"]:
            self.assertEqual(len(branch["receiver_fidelities"]), 2)
            self.assertGreaterEqual(min(branch["receiver_fidelities"]), 1 - 1e-9)

    def test_every_protocol_matches_the_schema(self):
        self.run_json("--protocol", "one-to-many", "--dims", "2,3", "--seed", "2")
        self.run_json("--protocol", "many-to-many", "--dims", "2,3", "--recv-dims", "3,2", "--seed", "2",
                      "--mode", "sample")
        report = self.run_json("--protocol", "one-to-many", "--dims", "2,2", "--seed", "2", "--mode", "branch=5,1,0")
        self.assertEqual(report["branches"][0]["outcome"], [5, 1, 0])
        self.assertIn("final_state", report["branches"][0])
        self.assertEqual(len(report["transcript"]), 3)

    def test_json_on_stdout(self):
        p = run("run", "--protocol", "many-to-one", "--dims", "3", "--seed", "4", "--format", "json")
        self.assertEqual(p.returncode, 0, p.stderr)
        jsonschema.validate(json.loads(p.stdout), SCHEMA)

    def test_invalid_configurations_exit_2(self):
        cases = [
            ["run", "--dims", "1,2", "--seed", "1"],
            ["run", "--protocol", "sideways", "--dims", "2", "--seed", "1"],
            ["run", "--seed", "1"],
            ["run", "--dims", "2,2"],
            ["run", "--dims", "2,x", "--seed", "1"],
            ["run", "--dims", "2", "--seed", "1", "--mode", "often"],
            ["run", "--protocol", "two-way", "--dims", "2,2,2", "--seed", "1"],
            ["run", "--dims", "2", "--input", self.path("missing.txt")],
            ["frobnicate"],
        ]
        for args in cases:
            with self.subTest(args=args):
                p = run(*args)
                self.assertEqual(p.returncode, 2, p.stdout + p.stderr)
                self.assertTrue(p.stderr.strip())

    def test_capacity_exits_3(self):
        p = run("run", "--dims", "4,4", "--seed", "1", env={"QUNET_MAX_DIM": "10"})
        self.assertEqual(p.returncode, 3)
        self.assertIn("CapacityExceeded", p.stderr)
        p = run("run", "--dims", "3,3,3", "--seed", "1")
        self.assertEqual(p.returncode, 3)
        self.assertIn("BranchExplosion", p.stderr)

    def test_input_file(self):
        states = self.path("in.txt")
        with open(states, "w") as f:
            f.write("dims: 2\n0 0\n1 0\n\ndims: 3\n0 0\n0 0\n0 1\n")
        report = self.run_json("--dims", "2,3", "--input", states, "--mode", "branch=7,30")
        final = report["branches"][0]["final_state"]["amplitudes"]
        self.assertAlmostEqual(abs(complex(*final[5])), 1.0, delta=1e-12)
        with open(states, "w") as f:
            f.write("dims: 2\n1 0\n")
        self.assertEqual(run("run", "--dims", "2", "--input", states).returncode, 2)

    def test_identical_invocations_give_identical_bytes(self):
        for args in (["--protocol", "one-to-many", "--dims", "2,3", "--seed", "9", "--mode", "sample"],
                     ["--protocol", "many-to-one", "--dims", "2,3", "--seed", "9"]):
            a, b = self.path("a.json"), self.path("b.json")
            self.assertEqual(run("run", *args, "--json", a).returncode, 0)
            self.assertEqual(run("run", *args, "--json", b).returncode, 0)
            with open(a, "rb") as fa, open(b, "rb") as fb:
                self.assertEqual(fa.read(), fb.read())

    def test_transcript_replay(self):
        transcript = self.path("t.jsonl")
        base = ["--protocol", "many-to-many", "--dims", "2,3", "--recv-dims", "2,3", "--seed", "5"]
        p = run("run", *base, "--mode", "sample", "--transcript", transcript)
        self.assertEqual(p.returncode, 0, p.stderr)
        with open(transcript) as f:
            lines = f.read().splitlines()
        self.assertEqual(len(lines), 4)
        p = run("verify", "--replay", transcript, *base)
        self.assertEqual(p.returncode, 0, p.stderr)
        self.assertIn("PASS replay_determinism", p.stdout)

        tampered = self.path("bad.jsonl")
        first = json.loads(lines[0])
        first["payload"]["m"] = 99
        with open(tampered, "w") as f:
            f.write("\n".join([json.dumps(first)] + lines[1:]) + "\n")
        p = run("verify", "--replay", tampered, *base)
        self.assertEqual(p.returncode, 2)
        self.assertIn("TranscriptMismatch", p.stderr)

    def test_verify(self):
        summary = self.path("verify.json")
        p = run("verify", "--json", summary)
        self.assertEqual(p.returncode, 0, p.stdout + p.stderr)
        self.assertNotIn("FAIL", p.stdout)
        with open(summary) as f:
            self.assertTrue(json.load(f)["passed"])

        p = run("verify", "--inject-fault")
        self.assertEqual(p.returncode, 1)
        self.assertIn("verify failed: deterministic_success", p.stderr)

        p = run("verify", "--dims-matrix", "2,2;3")
        self.assertEqual(p.returncode, 0, p.stdout + p.stderr)

    def test_bell_table(self):
        out = self.path("bell2.txt")
        self.assertEqual(run("bell-table", "--d", "2", "--out", out).returncode, 0)
        states = read_states(out)
        self.assertEqual(len(states), 4)
        dims, amps = states[0]
        self.assertEqual(dims, [2, 2])
        h = 2 ** -0.5
        for got, want in zip(amps, [h, 0, 0, h]):
            self.assertAlmostEqual(abs(got - want), 0.0, delta=1e-15)

        out = self.path("bell3.txt")
        self.assertEqual(run("bell-table", "--d", "3", "--out", out).returncode, 0)
        states = read_states(out)
        self.assertEqual(len(states), 9)
        for i, (_, a) in enumerate(states):
            for j, (_, b) in enumerate(states):
                ip = sum(x.conjugate() * y for x, y in zip(a, b))
                self.assertAlmostEqual(abs(ip - (1 if i == j else 0)), 0.0, delta=1e-12)

        p = run("bell-table", "--d", "17")
        self.assertEqual(p.returncode, 2)
        self.assertIn("BadDimension", p.stderr)

    def test_pin_phases(self):
        p = run("pin-phases")
        self.assertEqual(p.returncode, 0, p.stderr)
        lines = p.stdout.splitlines()
        self.assertEqual(len(lines), 17)
        self.assertEqual(sum(line.endswith("survives") for line in lines), 1)
        self.assertEqual(lines[-1], "resolved: sender_phase=+ sender_shift=+ scope=upper_digits receiver_phase=-")


if __name__ == "__main__":
    CLI, schema_path = sys.argv[1], sys.argv[2]
    with open(schema_path) as f:
        SCHEMA = json.load(f)
    unittest.main(argv=[sys.argv[0], "-v"])
