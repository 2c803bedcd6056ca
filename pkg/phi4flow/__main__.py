import sys

from phi4flow.cli import main

sys.exit(main())
