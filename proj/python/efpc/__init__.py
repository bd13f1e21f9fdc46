# SPDX-License-Identifier: Apache-2.0
from ._efpc import *  # noqa: F401,F403
from ._efpc import __version__  # noqa: F401
