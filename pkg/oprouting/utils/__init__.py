# -----------------------------------------------------------------------------
# MIT License
#
# Copyright (c) 2024 OpRouting Team
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# -----------------------------------------------------------------------------

"""OpRouting utils."""
import datetime
import os

from oprouting.utils.log_config import setup_logging  # noqa: F401
from .static_funcs import mask_of, members, popcount, nearly_equal, parse_float_list, make_iterable_verbose, \
    atomic_write_json, atomic_write_csv, to_builtin  # noqa: F401
from .rng import RandomStreams, SimulationStreams  # noqa: F401


def create_experiment_folder(folder_name='Log'):
    """Create ``<cwd>/<folder_name>/<timestamp>`` and return it with its parent."""
    directory = os.getcwd() + '/' + folder_name + '/'
    stamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S_%f")
    path_of_folder = directory + stamp
    os.makedirs(path_of_folder)
    return path_of_folder, path_of_folder[:path_of_folder.rfind('/')]
