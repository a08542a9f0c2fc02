import sys

from dampedq.cli import main

sys.exit(main())
