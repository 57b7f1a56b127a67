#!/usr/bin/env python
# -*- coding: utf-8 -*-
import os
import re
import sys

try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup


def get_version(*file_paths):
    """Retrieves the version from django_review_bench/__init__.py"""
    filename = os.path.join(os.path.dirname(__file__), *file_paths)
    version_file = open(filename).read()
    version_match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]",
                              version_file, re.M)
    if version_match:
        return version_match.group(1)
    raise RuntimeError('Unable to find version string.')


version = get_version("django_review_bench", "__init__.py")

if sys.argv[-1] == 'tag':
    print("Tagging the version on git:")
    os.system("git tag -a %s -m 'version %s'" % (version, version))
    os.system("git push --tags")
    sys.exit()

history = open('HISTORY.rst').read().replace('.. :changelog:', '')

setup(
    name='django_review_bench',
    version=version,
    description="""Scores peer reviews along depth, novelty, flaw and constructiveness dimensions with an LLM judge""",
    long_description=history,
    author='django_review_bench developers',
    packages=[
        'django_review_bench',
        'django_review_bench.management',
        'django_review_bench.management.commands',
        'django_review_bench.migrations',
    ],
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=[
        'Django>=3.2',
        'django-model-utils>=4.1.1',
        'channels>=3.0.3',
        'requests>=2.25',
        'requests-ratelimiter>=0.4',
        'jsonschema>=4.0',
        'numpy>=1.21',
        'scipy>=1.7',
        'statsmodels>=0.13',
        'pandas>=1.5',
    ],
    license="MIT",
    zip_safe=False,
    keywords='django_review_bench peer-review evaluation llm-judge',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Framework :: Django :: 3.2',
        'Framework :: Django :: 4.0',
        'Framework :: Django :: 4.1',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],
)
