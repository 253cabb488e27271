import sys

from nwckit.cli import main

sys.exit(main())
