import sys

from gzap.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
