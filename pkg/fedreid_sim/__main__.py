# Copyright 2026 pyfedreid authors. See LICENSE file for details.

import sys

from .cli import main

sys.exit(main())

# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
