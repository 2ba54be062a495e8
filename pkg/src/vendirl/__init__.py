# SPDX-FileCopyrightText: 2024-present David Huggins-Daines <dhd@ecolingui.ca>
#
# SPDX-License-Identifier: MIT

try:
    from vendirl.__about__ import __version__
except ImportError:  # no cov (running from an unbuilt checkout)
    __version__ = "0.0.0"

__all__ = ["__version__"]
