#!/usr/bin/env python3
"""Run the three reference sweeps and regenerate the comparison figures.

Writes CSVs (and, when the berplots package is installed, PNGs) into
results/.  Pass --frames to trade accuracy for speed; the shipped default
(200 frames/point) takes a minute or two single-worker.
"""
import argparse
import subprocess
import sys
from pathlib import Path

SWEEPS = [("ber-vs-snr", "3a"), ("ber-vs-pdr", "3b"), ("papr-vs-ber", "3c")]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="configs/default.yaml")
    parser.add_argument("--frames", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for command, kind in SWEEPS:
        csv_path = out_dir / f"{command}.csv"
        cmd = [sys.executable, "-m", "crosspilot", command,
               "--config", args.config, "--out", str(csv_path),
               "--workers", str(args.workers)]
        if args.frames is not None:
            cmd += ["--frames", str(args.frames)]
        if args.seed is not None:
            cmd += ["--seed", str(args.seed)]
        print("+", " ".join(cmd))
        subprocess.run(cmd, check=True)

        png_path = out_dir / f"{command}.png"
        render = [sys.executable, "-m", "berplots.cli", "render",
                  "--csv", str(csv_path), "--kind", kind,
                  "--out", str(png_path)]
        try:
            subprocess.run(render, check=True)
        except subprocess.CalledProcessError:
            print(f"  (skipped figure for {command}; install plots/ to render)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
