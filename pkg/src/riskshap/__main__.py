import sys

from riskshap.cli import main

sys.exit(main())
