"""
Main entry point for the cmsflow command line
"""
import sys

from src.cli.cli import main
from src.utils.logging import setup_logger

# Set up logger
logger = setup_logger("main")


def run():
    """Console entry point"""
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
