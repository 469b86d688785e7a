#!/usr/bin/env python3
"""Entry point for ``python -m spmamba``."""

import sys

from spmamba.cli import main

if __name__ == '__main__':
    sys.exit(main())
