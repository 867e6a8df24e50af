#!/usr/bin/env python3
"""Write the synthetic canonical pose fixtures used by the experiments.

Usage: python scripts/generate_fixtures.py [out_dir]
"""

import sys
from pathlib import Path

from posesim.pose_core import save_pose_file
from posesim.synthetic import (
    scripted_fall_sequence,
    standing_sequence,
    stepping_sequence,
)


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
    out.mkdir(parents=True, exist_ok=True)

    save_pose_file(standing_sequence(T=50), str(out / "standing_50.json"))
    print(f"wrote {out / 'standing_50.json'}")

    fall, contact_frame = scripted_fall_sequence(T=50)
    save_pose_file(fall, str(out / "scripted_fall_50.json"))
    print(f"wrote {out / 'scripted_fall_50.json'} "
          f"(torso contact scripted at frame {contact_frame})")

    save_pose_file(stepping_sequence(T=75), str(out / "stepping_75.json"))
    print(f"wrote {out / 'stepping_75.json'}")


if __name__ == "__main__":
    main()
