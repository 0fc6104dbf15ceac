"""
Used by setup.py.
"""

from __future__ import annotations

import os
import sys

VERSION = "0.1"

_my_dir = os.path.dirname(os.path.abspath(__file__))
# Use realpath to resolve any symlinks. We want the real root-dir, to be able to check the Git revision.
_root_dir = os.path.dirname(os.path.realpath(_my_dir))


def git_rev_version(git_dir=_root_dir):
    """
    :param str git_dir:
    :rtype: str
    """
    from gravdamp.util.basic import git_commit_rev, git_is_dirty

    rev = git_commit_rev(git_dir=git_dir)
    version = VERSION + "+git.%s" % rev
    if git_is_dirty(git_dir=git_dir):
        version += ".dirty"
    return version


def get_version_str(fallback=None):
    """
    :param str|None fallback: returned if the Git revision cannot be determined, otherwise we raise
    :return: VERSION, or with a ``+git`` suffix when it ends in ``+git`` and we run from a Git checkout.
        The format is `SemVer <https://semver.org/>`__ compatible.
    :rtype: str
    """
    if VERSION.endswith("+git") and os.path.exists("%s/.git" % _root_dir):
        try:
            return git_rev_version(git_dir=_root_dir)
        except Exception as exc:
            print("Exception while getting Git version:", exc, file=sys.stderr)
            if fallback is None:
                raise
            return fallback
    return VERSION
