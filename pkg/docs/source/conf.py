# Sphinx configuration for the PyMultiRAT documentation.
# Build with `make clean html` from the `docs` folder.
import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

project = 'PyMultiRAT'
author = 'PyMultiRAT developers'
copyright = '2026, PyMultiRAT developers'
release = 'v0.1.0'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'sphinx_automodapi.automodapi',
    'sphinx_automodapi.smart_resolver',
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'pandas': ('https://pandas.pydata.org/docs', None),
}

templates_path = ['_templates']
exclude_patterns = []
root_doc = 'index'

html_theme = 'furo'
html_static_path = ['_static']

# keep members in source order (classes before helpers within a module)
autodoc_member_order = 'bysource'
numpydoc_show_class_members = False
automodsumm_inherited_members = True

# automodapi lists imported names (numpy, pandas, ...) by default
from sphinx_automodapi import automodsumm  # noqa: E402
from sphinx_automodapi.utils import find_mod_objs  # noqa: E402


def _local_mod_objs(*args, **kwargs):
    return find_mod_objs(args[0], onlylocals=True)


def _only_local_members(app):
    """Restrict automodapi summaries to names defined in each module"""
    automodsumm.find_mod_objs = _local_mod_objs


def setup(app):
    app.connect('builder-inited', _only_local_members)
