"""simulate -> estimate round trip through the CLI for both array modes."""

import json
import math
import subprocess
import sys
import tempfile
from pathlib import Path


def run(cli, *args):
    return subprocess.run([cli, *args], check=True, capture_output=True, text=True).stdout


def greedy(truth, est, dist):
    pairs, used_t, used_e = [], set(), set()
    cand = sorted((dist(t, e), i, j) for i, t in enumerate(truth) for j, e in enumerate(est))
    for d, i, j in cand:
        if i not in used_t and j not in used_e:
            used_t.add(i), used_e.add(j), pairs.append(d)
    return pairs


def main() -> int:
    cli = sys.argv[1]
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        run(cli, "simulate", "--mode", "distributed", "--distances", "2,2", "--seed", "3", "--duration", "2",
            "--wav", str(tmp / "p.wav"), "--truth", str(tmp / "p.json"))
        truth = json.loads((tmp / "p.json").read_text())["sources"]
        out = json.loads(run(cli, "estimate", "--wav", str(tmp / "p.wav"), "--scenario", str(tmp / "p.json"),
                             "--mode", "position", "--method", "edm", "--sources", "2"))
        errs = greedy(truth, [s["position"] for s in out["sources"]], lambda a, b: 100 * math.dist(a, b))
        ok = len(errs) == 2 and max(errs) < 5.0
        failures += not ok
        print(f"position round trip: errors_cm={[round(e, 2) for e in errs]} {'ok' if ok else 'FAILED'}")

        run(cli, "simulate", "--mode", "compact", "--distances", "2,3", "--seed", "5", "--duration", "2",
            "--wav", str(tmp / "d.wav"), "--truth", str(tmp / "d.json"))
        dirs = json.loads((tmp / "d.json").read_text())["truth"]["directions"]
        out = json.loads(run(cli, "estimate", "--wav", str(tmp / "d.wav"), "--scenario", str(tmp / "d.json"),
                             "--mode", "doa", "--method", "edm", "--sources", "2"))
        angle = lambda a, b: math.degrees(math.acos(max(-1.0, min(1.0, sum(x * y for x, y in zip(a, b))))))
        errs = greedy(dirs, [s["direction"] for s in out["sources"]], angle)
        ok = len(errs) == 2 and max(errs) < 4.0
        failures += not ok
        print(f"doa round trip: errors_deg={[round(e, 2) for e in errs]} {'ok' if ok else 'FAILED'}")

        csv = run(cli, "dump-curves", "--what", "cost", "--wav", str(tmp / "p.wav"), "--scenario", str(tmp / "p.json"))
        ok = csv.startswith("q,alpha,J\n") and csv.count("\n") > 100
        failures += not ok
        print(f"dump-curves cost: {'ok' if ok else 'FAILED'}")

        bad = subprocess.run([cli, "estimate", "--wav", str(tmp / "missing.wav"), "--scenario", str(tmp / "p.json")],
                             capture_output=True, text=True)
        ok = bad.returncode == 2 and "error" in bad.stderr
        failures += not ok
        print(f"missing input exits with 2: {'ok' if ok else 'FAILED'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
