#!/usr/bin/env python3
"""Runs every charflow subcommand on small workloads and checks the outputs.

Usage: validate_outputs.py CHARFLOW_EXE SOURCE_DIR

Checks: JSON outputs and manifests against docs/schemas, CSV header rows and
LF line endings, exit codes for config errors, and byte-identical reruns.
"""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

SMALL = [
    "--set", "numerics.mesh_cells=8",
    "--set", "numerics.mesh_samples=20000",
    "--set", "numerics.grid=40",
    "--set", "numerics.mc_samples=5000",
]

failures = []


def check(cond, what):
    if not cond:
        failures.append(what)
        print("FAIL", what)


def run(exe, args, cwd):
    return subprocess.run([exe, *args], cwd=cwd, capture_output=True, text=True)


def load_schema(src, name):
    return json.loads((src / "docs" / "schemas" / f"{name}.schema.json").read_text())


def validate(path, schema, what):
    try:
        jsonschema.validate(json.loads(path.read_text()), schema)
    except (jsonschema.ValidationError, json.JSONDecodeError, FileNotFoundError) as e:
        check(False, f"{what}: {e}")


def check_csv(path, header, what):
    data = path.read_bytes()
    check(b"\r" not in data, f"{what}: CRLF line ending")
    check(data.endswith(b"\n"), f"{what}: missing final newline")
    lines = data.decode().split("\n")
    check(lines[0] == header, f"{what}: header {lines[0]!r} != {header!r}")
    width = header.count(",") + 1
    check(all(line.count(",") + 1 == width for line in lines[1:-1]), f"{what}: ragged rows")
    check(len(lines) > 2, f"{what}: no data rows")


def main():
    exe = str(pathlib.Path(sys.argv[1]).resolve())
    src = pathlib.Path(sys.argv[2]).resolve()
    harmonic = str(src / "fixtures" / "rect_harmonic.json")
    stadium = str(src / "fixtures" / "stadium.json")
    manifest = load_schema(src, "manifest")

    commands = [
        ("trace.json", "trace", ["trace", "--config", harmonic, "--x", "0.5,0.5", "--samples", "20"]),
        ("trace.csv", None, ["trace", "--config", stadium, "--x", "0.2,0.3", "--samples", "20"]),
        ("classify.csv", None, ["classify", "--config", harmonic, "--samples", "40"]),
        ("mesh.json", "boundary-measure",
         ["boundary-measure", "--config", harmonic, "--side", "plus", "--cells", "6", "--n-mc", "20000"]),
        ("mesh.csv", None, ["boundary-measure", "--config", harmonic, "--side", "minus", "--cells", "6",
                            "--n-mc", "20000"]),
        ("evolve.csv", None, ["evolve", "--config", harmonic, "--t", "0.5", "--f0", "1 + x1", "--grid", "6x5"]),
        ("resolvent.csv", None, ["resolvent", "--config", stadium, "--lambda", "1", "--g", "1", "--grid", "5"]),
        ("bvp.json", "solve-bvp", ["solve-bvp", "--config", harmonic, "--lambda", "1", "--g", "1 + x1^2",
                                   "--u", "1", "--report", "green,norms", "--values", "bvp.csv", "--grid", "5",
                                   *SMALL]),
        ("check.json", "check", ["check", "--config", harmonic, "--suite", "bvp"]),
    ]
    headers = {
        "trace.csv": "s,x1,x2",
        "classify.csv": "index,piece,t,x1,x2,tag,gamma_minus_infinity,gamma_plus_infinity",
        "mesh.csv": "cell,piece,t0,t1,x1,x2,length,weight,weight_error,density,reference_density,"
                    "reference_weight,tag,opposite_time",
        "evolve.csv": "x1,x2,value",
        "resolvent.csv": "x1,x2,value",
        "bvp.csv": "x1,x2,value",
    }

    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        for out, schema, args in commands:
            for d in (a, b):
                r = run(exe, [*args, "--out", out], d)
                check(r.returncode == 0, f"{out}: exit {r.returncode}: {r.stderr.strip()}")
            pa, pb = pathlib.Path(a), pathlib.Path(b)
            if schema:
                validate(pa / out, load_schema(src, schema), out)
            validate(pa / f"{out}.manifest.json", manifest, f"{out} manifest")
            produced = json.loads((pa / f"{out}.manifest.json").read_text())["outputs"]
            for name in produced:
                check((pa / name).read_bytes() == (pb / name).read_bytes(), f"{name}: reruns differ")
                if name.endswith(".csv"):
                    check_csv(pa / name, headers[name], name)

        # Config errors: exit 2, message names the path or key, manifest still written.
        missing = str(pathlib.Path(a) / "no_such_config.json")
        r = run(exe, ["classify", "--config", missing, "--out", "err.csv"], a)
        check(r.returncode == 2, f"missing config: exit {r.returncode}")
        check(missing in r.stderr, "missing config: path not in message")
        validate(pathlib.Path(a) / "err.csv.manifest.json", manifest, "missing config manifest")

        r = run(exe, ["classify", "--config", harmonic, "--set", "numerics.stepp=0.1", "--out", "err2.csv"], a)
        check(r.returncode == 2, f"unknown key: exit {r.returncode}")
        check("numerics.stepp" in r.stderr, "unknown key: key not in message")

        r = run(exe, ["evolve", "--config", harmonic, "--t", "0.5", "--f0", "x7", "--out", "err3.csv"], a)
        check(r.returncode == 2, f"bad expression: exit {r.returncode}")

        # Numeric failure: exit 1 with an error record.
        r = run(exe, ["resolvent", "--config", harmonic, "--lambda", "-1", "--g", "1", "--out", "err4.csv"], a)
        check(r.returncode == 1, f"negative lambda: exit {r.returncode}")
        m = json.loads((pathlib.Path(a) / "err4.csv.manifest.json").read_text())
        check(m["status"] == "numeric_error" and m["error"]["kind"] == "NonpositiveLambda",
              "negative lambda: manifest error record")

        # --seed is recorded in the manifest.
        r = run(exe, ["boundary-measure", "--config", harmonic, "--cells", "4", "--n-mc", "5000", "--seed", "7",
                      "--out", "seeded.json"], a)
        check(r.returncode == 0, "seeded run")
        m = json.loads((pathlib.Path(a) / "seeded.json.manifest.json").read_text())
        check(m["seed"] == 7, "seed recorded in manifest")

    if failures:
        print(f"{len(failures)} failure(s)")
        return 1
    print("all CLI output checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
