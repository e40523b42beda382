import sys

from src.multiscale_deconv.cli import main

if __name__ == "__main__":
    sys.exit(main())
