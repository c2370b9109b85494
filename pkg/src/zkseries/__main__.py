import sys

from zkseries.cli import main

sys.exit(main())
