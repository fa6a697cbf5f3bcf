# SPDX-License-Identifier: Apache-2.0
"""Secure hybrid beamforming for dual-function radar-communication systems."""

try:
    from ._she import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:  # in-tree build with the extension module on sys.path
    from _she import *  # noqa: F401,F403

__version__ = "0.1.0"
