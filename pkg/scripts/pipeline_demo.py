"""Construct, verify and density-check a frame for an interval-union spectrum.

Example::

    python scripts/pipeline_demo.py --intervals 0 0.3 1.0 1.2 2.5 2.6 --out runs/demo
"""

import argparse
import json
from pathlib import Path

from expframe.cli import main as cli


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--intervals", type=float, nargs="+", default=[0.0, 0.3, 1.0, 1.2, 2.5, 2.6])
    # verification cost grows like m^2, so keep the grid moderate
    p.add_argument("--m", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--out", default="runs/demo")
    args = p.parse_args(argv)
    if len(args.intervals) % 2:
        p.error("--intervals needs an even number of endpoints")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pairs = [args.intervals[i:i + 2] for i in range(0, len(args.intervals), 2)]
    spectrum = json.dumps({"intervals": pairs})
    built = out / "construct.json"
    codes = {
        "construct": cli(["construct", "--input", spectrum, "--m", str(args.m),
                          "--seed", str(args.seed), "--out", str(built)])
    }
    if codes["construct"] == 0:
        for cmd in ("certify", "verify", "density"):
            extra = ["--count", str(args.count)] if cmd == "verify" else []
            codes[cmd] = cli([cmd, "--input", str(built), "--seed", str(args.seed), *extra,
                              "--out", str(out / f"{cmd}.json")])
    doc = json.loads(built.read_text()) if built.exists() else {}
    summary = {
        "exit_codes": codes,
        "grid": doc.get("grid"),
        "J_size": len(doc.get("frequency_set", {}).get("J", [])),
        "certificate": doc.get("certificate"),
    }
    print(json.dumps(summary, indent=2))
    return max(codes.values())


if __name__ == "__main__":
    raise SystemExit(main())
