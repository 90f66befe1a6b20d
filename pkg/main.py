import sys

from cas4dl.cli import main


if __name__ == "__main__":
    sys.exit(main())
