# -*- coding: utf-8 -*-
#
# Sphinx configuration of the gridfreq documentation.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

from gridfreq import __version__  # noqa: E402

project = u'gridfreq'
copyright = u'2026, The gridfreq authors'
author = u'The gridfreq authors'

version = __version__
release = __version__

extensions = [
    'myst_parser',
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
]

source_suffix = {
    '.rst': 'restructuredtext',
    '.md': 'markdown',
}
master_doc = 'index'
language = 'en'
exclude_patterns = [u'_build', 'Thumbs.db', '.DS_Store']

autodoc_member_order = 'bysource'

html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'gridfreqdoc'

man_pages = [
    (master_doc, 'gridfreq', u'gridfreq Documentation', [author], 1),
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
}
