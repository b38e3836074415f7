"""Allow ``python -m ring_analyzer``."""

from ring_analyzer.cli import main

raise SystemExit(main())
