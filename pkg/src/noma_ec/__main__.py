"""Allow `python -m noma_ec ...` as an alias for the noma-ec entry point."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
