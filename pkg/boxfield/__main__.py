"""Allow running as: python -m boxfield"""
import sys

from boxfield.cli import main

sys.exit(main())
