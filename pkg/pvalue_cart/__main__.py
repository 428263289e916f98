import sys

from pvalue_cart.cli import main

sys.exit(main())
