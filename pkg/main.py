#!/usr/bin/env python3
"""
OvA-INN - Main Entry Point
"""
import os
import sys

# Add src to path
sys.path.append(os.path.dirname(__file__))

from src.cli.app import main


if __name__ == "__main__":
    sys.exit(main())
