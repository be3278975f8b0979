"""Main entry point for the hemq package."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
