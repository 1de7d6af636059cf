import sys

from superfund.cli import main

sys.exit(main())
