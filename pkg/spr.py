from __future__ import annotations

from sparse_pr.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
