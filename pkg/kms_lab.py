"""
Entry point for the kms-lab command line.

Usage: python kms_lab.py classify --family arms --params n=3
"""

from __future__ import annotations

import sys

from dotenv import load_dotenv

from kmslab.cli import main


if __name__ == "__main__":
    load_dotenv()
    sys.exit(main())
