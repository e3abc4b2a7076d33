# Sphinx configuration of the pyfedreid API reference.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

extensions = ['sphinx.ext.autodoc']
master_doc = 'index'

project = 'pyfedreid'
copyright = '2026, pyfedreid authors'
version = release = '0.1.0'

html_theme = 'classic'
autodoc_member_order = 'bysource'
