import sys

from gloran.bench.cli import main

sys.exit(main())
