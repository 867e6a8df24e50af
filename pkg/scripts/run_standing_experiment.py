#!/usr/bin/env python3
"""Scaled-down end-to-end experiment on the standing fixture.

Optimizes two 1.04 s windows (population 24, 40 iterations) and prints the
report, mirroring the acceptance-scale configuration. Expect a few minutes.

Usage: python scripts/run_standing_experiment.py [out_dir] [--threads N]
"""

import argparse
import tempfile
import time
from pathlib import Path

from posesim import pipeline
from posesim.config import config_from_dict
from posesim.pose_core import save_pose_file
from posesim.synthetic import standing_sequence


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", nargs="?", default="out/standing_experiment")
    ap.add_argument("--threads", type=int, default=8)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    workdir = Path(tempfile.mkdtemp(prefix="posesim_standing_"))
    pose_path = workdir / "standing_50.json"
    save_pose_file(standing_sequence(T=50), str(pose_path))

    config = config_from_dict({
        "input": str(pose_path),
        "out_dir": args.out_dir,
        "seed": args.seed,
        "threads": args.threads,
        "optimizer": {"window_s": 1.04, "overlap": 0.0,
                      "iterations": 40, "population": 24},
    })
    start = time.time()
    report = pipeline.run_evaluate(config)[0].report
    print(f"finished in {time.time() - start:.0f}s")
    print(f"  CD      {report.cd_mm:.2f} mm")
    print(f"  PSD_{report.num_frames}  {report.psd} (N={report.psd_n}, "
          f"t_F={report.psd_t_f})")
    print(f"  FS      {report.footskate_pct:.1f} %")
    print(f"  GP      {report.ground_penetration_mm:.2f} mm")
    print(f"  windows {len(report.window_traces)}, diverged={report.diverged}")
    print(f"artifacts in {args.out_dir}")


if __name__ == "__main__":
    main()
