#!/usr/bin/env python3
"""
relaydual launcher

Checks the numerical dependencies, then hands over to the command line.
"""

import os
import sys
from typing import List, Optional


def check_dependencies() -> bool:
    """Check if necessary dependencies are installed"""
    import importlib.util

    missing_deps = []
    for module, requirement in (("numpy", "numpy>=1.22"), ("scipy", "scipy>=1.8"), ("yaml", "PyYAML>=6.0")):
        if importlib.util.find_spec(module) is None:
            missing_deps.append(requirement)

    if missing_deps:
        print("❌ Missing dependencies: " + ", ".join(missing_deps), file=sys.stderr)
        print("   pip install " + " ".join(missing_deps), file=sys.stderr)
        return False
    return True


def main(argv: Optional[List[str]] = None) -> int:
    """Console entry point"""
    if not check_dependencies():
        return 2

    current_dir = os.path.dirname(os.path.abspath(__file__))
    if current_dir not in sys.path:
        sys.path.insert(0, current_dir)

    from cli.main_cli import main as cli_main

    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
