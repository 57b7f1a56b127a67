import os
import webbrowser
from urllib.request import pathname2url

from invoke import task

EXAMPLE_CORPUS = os.path.join('example', 'corpus')


def open_browser(path):
    webbrowser.open("file://" + pathname2url(os.path.abspath(path)))


@task
def clean_build(c):
    """
    Remove build artifacts
    """
    c.run("rm -fr build/ dist/ *.egg-info")


@task
def clean_pyc(c):
    """
    Remove python file artifacts
    """
    c.run("find . -name '*.pyc' -exec rm -f {} +")
    c.run("find . -name '*~' -exec rm -f {} +")


@task
def clean(c):
    clean_build(c)
    clean_pyc(c)


@task
def coverage(c):
    """
    Check code coverage with the default Python
    """
    c.run("coverage run --source django_review_bench runtests.py tests")
    c.run("coverage report -m")
    c.run("coverage html")


@task
def docs(c):
    """
    Build the documentation and open it in the browser
    """
    c.run("rm -f docs/django_review_bench.rst docs/modules.rst")
    c.run("sphinx-apidoc -o docs/ django_review_bench")
    c.run("sphinx-build -E -b html docs docs/_build")
    open_browser(path='docs/_build/html/index.html')


@task
def unittest(c):
    c.run("python runtests.py")


@task
def test_all(c):
    """
    Run tests on every python version with tox
    """
    c.run("tox")


@task
def lint(c):
    c.run("flake8 django_review_bench tests")


@task(help={'cache': 'Judge and retrieval cache directory', 'mode': 'record, replay or passthrough',
            'out': 'Output directory for profiles and the report'})
def bench(c, cache='.review_bench_cache', mode='replay', out='review_bench_out'):
    """
    Score the example corpus and build the report bundle
    """
    c.run(f"python manage.py reviewbench run --corpus {EXAMPLE_CORPUS} --cache {cache} --cache-mode {mode} "
          f"--out {out}")
    c.run(f"python manage.py reviewbench report --profiles {out} --out {os.path.join(out, 'report')}")


@task
def release(c):
    """
    Package and upload a release
    """
    clean(c)
    import django_review_bench
    c.run("python setup.py sdist bdist_wheel")
    c.run("twine upload dist/* --verbose")
    c.run('git tag -a {version} -m "New version: {version}"'.format(version=django_review_bench.__version__))
    c.run("git push --tags")
