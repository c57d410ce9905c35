"""dotbench - command-line entry point."""
import sys

from dotbench.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
