#!/usr/bin/env python3
"""Command-line entry point for NTK spectral density experiments."""

import sys
from pathlib import Path

# Add the parent directory to the path so we can import our modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from modules.cli import main

if __name__ == "__main__":
    exit(main())
