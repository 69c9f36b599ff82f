"""Runs the CLI on a tiny experiment and a short benchmark, then validates both
reports against schemas/report.schema.json."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main() -> int:
    cli, schema_path, config = sys.argv[1], Path(sys.argv[2]), sys.argv[3]
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    with tempfile.TemporaryDirectory() as tmp:
        report = Path(tmp) / "report.json"
        bench = Path(tmp) / "bench.json"
        subprocess.run([cli, "eval", "--config", config, "--json", str(report), "--csv", str(Path(tmp) / "runs.csv")],
                       check=True)
        subprocess.run([cli, "bench", "--scenarios", "1", "--reps", "5", "--methods", "edm-doa,srp-doa",
                        "-o", str(bench)], check=True, stdout=subprocess.DEVNULL)
        failures = 0
        for path in (report, bench):
            doc = json.loads(path.read_text())
            errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
            for e in errors:
                print(f"{path.name}: {list(e.path)}: {e.message}")
            failures += len(errors)
            print(f"{path.name}: {'valid' if not errors else 'INVALID'} ({doc['kind']})")

        # a broken document must be rejected
        broken = json.loads(report.read_text())
        broken["groups"][0]["unit"] = "furlongs"
        if validator.is_valid(broken):
            print("schema accepted a malformed report")
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
