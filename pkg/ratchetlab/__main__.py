import sys

from ratchetlab.main import main

sys.exit(main())
