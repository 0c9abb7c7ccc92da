import sys

from folner_density.cli import main

sys.exit(main())
