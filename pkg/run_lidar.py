"""Run a lidar scenario from the command line, e.g.

    python run_lidar.py monte-carlo --seed 7 --threads 4
"""

import sys

from scripts.cli import main


if __name__ == "__main__":
    sys.exit(main())
