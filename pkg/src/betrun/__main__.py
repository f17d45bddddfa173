import sys

from betrun.cli import main

sys.exit(main())
