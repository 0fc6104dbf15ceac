#!/usr/bin/env python3

"""
GravDamp as a tool. Main entry point. Just calls :func:`gravdamp.__main__.main`.
"""

from gravdamp.__main__ import main


if __name__ == "__main__":
    main()
