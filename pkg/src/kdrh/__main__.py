import sys

from kdrh.cli import main

sys.exit(main())
