import sys

from crossloss.cli import main

sys.exit(main())
