import sys

from convsel.specio.cli import main

sys.exit(main())
