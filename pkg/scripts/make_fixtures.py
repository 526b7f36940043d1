"""Emit sample camera frames (PGM) and a glyph pattern (JSON) to a directory.

The output is ready for the CLI:

    python3 scripts/make_fixtures.py out/
    python3 -m ambusim recognize out/ambulance_clean.pgm --pattern out/pattern_n50.json
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from ambusim.fixtures import (
    add_salt_pepper,
    ambulance_pattern,
    render_ambulance_frame,
    render_distractor_frame,
)
from ambusim.pgm import dump_pgm


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--noise-seed", type=int, default=7)
    args = parser.parse_args(argv)

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    frames = {
        "ambulance_clean.pgm": render_ambulance_frame((50, 40)),
        "ambulance_noisy.pgm": add_salt_pepper(
            render_ambulance_frame((64, 52)), 0.02, seed=args.noise_seed),
        "distractor_clean.pgm": render_distractor_frame((50, 40)),
        "distractor_noisy.pgm": add_salt_pepper(
            render_distractor_frame((64, 52)), 0.02, seed=args.noise_seed),
    }
    for name, img in frames.items():
        dump_pgm(img, out / name)
        print(f"wrote {out / name}")

    for n in (50, 20):
        pat = ambulance_pattern(n)
        path = out / f"pattern_n{n}.json"
        path.write_text(json.dumps({"points": [list(p) for p in pat.points]}))
        print(f"wrote {path} ({pat.size} points)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
