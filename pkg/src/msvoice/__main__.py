import sys

from msvoice.cli import main

sys.exit(main())
