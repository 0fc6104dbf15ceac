"""
The main GravDamp package __init__.
We provide ``__version__`` and ``__long_version__``.

You are supposed to explicitly import the specific sub-module/sub-package.
Just `import gravdamp` is not enough.
"""

import os as _os

from .__setup__ import get_version_str as _get_version_str

__long_version__ = _get_version_str()  # `SemVer <https://semver.org/>`__ compatible
if "+" in __long_version__:
    __version__ = __long_version__[: __long_version__.index("+")]
else:
    __version__ = __long_version__

__root_dir__ = _os.path.dirname(_os.path.dirname(_os.path.abspath(__file__)))
