# -*- coding: utf-8 -*-
#
# django_review_bench documentation build configuration file.

import os
import sys

cwd = os.getcwd()
parent = os.path.dirname(cwd)
sys.path.append(parent)

import django_review_bench  # noqa: E402

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'django_review_bench'
copyright = u'2026, django_review_bench developers'

version = django_review_bench.__version__
release = django_review_bench.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'django_review_benchdoc'

latex_documents = [
    ('index', 'django_review_bench.tex', u'django_review_bench Documentation',
     u'django_review_bench developers', 'manual'),
]

man_pages = [
    ('index', 'django_review_bench', u'django_review_bench Documentation',
     [u'django_review_bench developers'], 1)
]
