#!/usr/bin/env python3
"""Write the built-in 28-DOF humanoid to a model file.

Usage: python scripts/export_default_model.py [path]
"""

import sys

from posesim.humanoid import default_model, save_model_file


def main() -> None:
    path = sys.argv[1] if len(sys.argv) > 1 else "default_model.json"
    save_model_file(default_model(), path)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
