#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
app.py
------
Command-line entry point.

    python app.py tables
    python app.py sweep fig5a --out results/fig5a.csv
    python app.py validate default --samples 200000
"""

import sys

from backend.cli import main

if __name__ == "__main__":
    sys.exit(main())
