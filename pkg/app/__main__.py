import sys

from app.modules.cli.routes.cli import main

sys.exit(main())
