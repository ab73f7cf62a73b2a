"""Run all thirteen acceptance checks and print one PASS/FAIL line each.

    python scripts/run_acceptance.py            # every criterion
    python scripts/run_acceptance.py 4 9 12     # a subset
"""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import test_acceptance as acc  # noqa: E402


def main(argv=None) -> int:
    picks = [int(a) for a in (argv if argv is not None else sys.argv[1:])] or sorted(acc.CRITERIA)
    failed = 0
    for num in picks:
        ok, detail = acc.CRITERIA[num]()
        failed += not acc._report(num, bool(ok), detail)
    print(f"{len(picks) - failed}/{len(picks)} criteria pass")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
