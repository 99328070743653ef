#!/usr/bin/env python3
"""
Source-checkout entrypoint.

Allows running the simulator without installing it:
  python3 mmwave_hbf.py --config experiment.conf --out results.csv
"""

from __future__ import annotations

import os
import sys

_HERE = os.path.dirname(os.path.abspath(__file__))
_SRC = os.path.join(_HERE, "src")
if _SRC not in sys.path:
    sys.path.insert(0, _SRC)

# Acts as a package shim when imported as `mmwave_hbf`, so `src/mmwave_hbf/` is not shadowed.
__path__ = [os.path.join(_SRC, "mmwave_hbf")]


def main(argv: list[str] | None = None) -> int:
    from mmwave_hbf.cli import main as _main

    return _main(argv)


if __name__ == "__main__":
    raise SystemExit(main())
