#!/usr/bin/env python3
"""Runs every subcommand on a small synthetic dataset and validates the reports.

usage: validate_reports.py <protoexplain binary> <schema dir>
"""

import csv
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
import referencing

KINDS = [
    "calibration",
    "global_explanations",
    "local_explanation",
    "redundancy",
    "stats",
    "synthetic_dataset",
]


def load_registry(schema_dir):
    resources = []
    for path in sorted(schema_dir.glob("*.schema.json")):
        contents = json.loads(path.read_text())
        resources.append((contents["$id"], referencing.Resource.from_contents(contents)))
    return referencing.Registry().with_resources(resources)


class Runner:
    def __init__(self, tool):
        self.tool = tool

    def __call__(self, *args, expect=0):
        proc = subprocess.run([self.tool, *map(str, args)], capture_output=True, text=True)
        if proc.returncode != expect:
            sys.stderr.write(proc.stdout + proc.stderr)
            raise SystemExit(f"{args[0]} exited {proc.returncode}, expected {expect}")


def main():
    tool, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])
    registry = load_registry(schema_dir)
    validators = {}
    for kind in KINDS:
        schema = registry.contents(f"{kind}.schema.json")
        jsonschema.Draft202012Validator.check_schema(schema)
        validators[kind] = jsonschema.Draft202012Validator(schema, registry=registry)

    run = Runner(tool)
    seen = {kind: 0 for kind in KINDS}
    failures = 0

    with tempfile.TemporaryDirectory() as tmp:
        t = pathlib.Path(tmp)
        run("synth", "--classes", 2, "--per-class", 4, "--protos-per-class", 2, "--size", 32, "--out", t / "ds")
        images, protos = t / "ds" / "images", t / "ds" / "prototypes"
        run("calibrate", "--images", images, "--out", t / "cal")
        run("explain-global", "--images", images, "--prototypes", protos,
            "--calibration", t / "cal" / "calibration.json", "--contributions", "--out", t / "g1")
        run("explain-global", "--images", images, "--prototypes", protos,
            "--contrast", 0.45, "--saturation", 0.7, "--hue", 0.1, "--shape", 1, "--texture", 4, "--out", t / "g2")
        run("explain-local", "--image", images / "c000_000.png", "--prototypes", protos,
            "--prototype", 1, "--shape", 1, "--out", t / "l1")
        run("explain-local", "--images", images, "--prototypes", protos, "--all", "--shape", 1, "--out", t / "l2")
        run("redundancy", "--prototypes", protos, "--explanations", t / "g1" / "explanations.json",
            "--out", t / "r")
        run("stats", "--a", t / "g1" / "explanations.json", "--b", t / "g2" / "explanations.json", "--out", t / "s")

        for path in sorted(t.rglob("*.json")):
            if path.parent.name == "prototypes":
                continue
            report = json.loads(path.read_text())
            kind = report.get("kind")
            if kind not in validators:
                print(f"FAIL {path.relative_to(t)}: unknown kind {kind!r}")
                failures += 1
                continue
            errors = list(validators[kind].iter_errors(report))
            seen[kind] += 1
            for e in errors:
                print(f"FAIL {path.relative_to(t)}: {'/'.join(map(str, e.absolute_path))}: {e.message}")
            failures += bool(errors)

        with open(t / "l2" / "local.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        expected = 8 * 4
        if len(rows) != expected:
            print(f"FAIL local.csv: {len(rows)} rows, expected {expected}")
            failures += 1

    for kind, count in seen.items():
        if count == 0:
            print(f"FAIL no {kind} report was produced")
            failures += 1
        else:
            print(f"ok {kind}: {count} report(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
