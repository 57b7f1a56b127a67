#!/usr/bin/env python
# -*- coding: utf-8
import os
import sys

import django
from django.conf import settings
from django.test.utils import get_runner


def run_tests(*args):
    failfast = '--failfast' in args
    test_labels = [a for a in args if not a.startswith('--')] or ['tests']

    os.environ['DJANGO_SETTINGS_MODULE'] = 'tests.settings'
    django.setup()
    TestRunner = get_runner(settings)
    test_runner = TestRunner(failfast=failfast)
    failures = test_runner.run_tests(test_labels)
    sys.exit(bool(failures))


if __name__ == '__main__':
    run_tests(*sys.argv[1:])
