import sys

from condquant.cli import main

sys.exit(main())
