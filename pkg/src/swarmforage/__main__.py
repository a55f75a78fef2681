import sys

from swarmforage.cli import main

sys.exit(main())
