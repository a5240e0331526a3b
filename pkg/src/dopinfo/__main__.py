import sys

from dopinfo.cli import main

sys.exit(main())
