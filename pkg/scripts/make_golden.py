"""Regenerate tests/golden/minimal_tests.json from the minimax oracle."""

import json
from pathlib import Path

from corruptnet.puzzle import MINIMAX_BOUND, PuzzleInstance, minimal_tests

OUT = Path(__file__).resolve().parent.parent / "tests" / "golden" / "minimal_tests.json"


def main() -> None:
    values = {
        f"{n},{t}": minimal_tests(PuzzleInstance(n, t))
        for n in range(1, MINIMAX_BOUND + 1)
        for t in range(n // 2 + 1, n + 1)
    }
    OUT.write_text(json.dumps(values, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(values)} values to {OUT}")


if __name__ == "__main__":
    main()
