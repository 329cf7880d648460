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

"""Small helpers shared across modules: node-set bitmasks, float ties, atomic file output."""
import json
import os
import tempfile
from typing import Iterable, Tuple, List, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

#: Relative tolerance deciding whether two penalties are "equal".
TIE_RTOL = 1e-12


def mask_of(nodes: Iterable[int]) -> int:
    """Bitmask with bit j set for every node j."""
    mask = 0
    for j in nodes:
        mask |= 1 << int(j)
    return mask


def members(mask: int) -> Tuple[int, ...]:
    """Sorted node indices contained in a bitmask."""
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def nearly_equal(a: float, b: float, rel_tol: float = TIE_RTOL) -> bool:
    """Relative equality in which two zeros compare equal.

    Examples:
        >>> nearly_equal(0.5, 0.5 + 1e-14)
        True
        >>> nearly_equal(0.0, 0.0)
        True
        >>> nearly_equal(0.1, 0.15)
        False
    """
    return abs(a - b) <= rel_tol * max(abs(a), abs(b))


def parse_float_list(text: Union[str, Iterable[float]]) -> List[float]:
    """Parse '1,2.5,3' (or pass through an iterable) into a list of floats."""
    if isinstance(text, str):
        items = [x.strip() for x in text.split(",") if x.strip()]
        return [float(x) for x in items]
    return [float(x) for x in text]


def make_iterable_verbose(iterable_object, verbose, desc="Default", position=None, leave=True) -> Iterable:
    if verbose > 0:
        return tqdm(iterable_object, desc=desc, position=position, leave=leave)
    else:
        return iterable_object


def _atomic_replace(path: str, write) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def atomic_write_json(obj, path: str) -> None:
    """Write JSON through a temporary file and rename, so readers never see half a file."""
    _atomic_replace(path, lambda fh: fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n"))


def atomic_write_csv(df: pd.DataFrame, path: str) -> None:
    """Write a data frame as CSV with 17 significant digits for every float column."""
    _atomic_replace(path, lambda fh: df.to_csv(fh, index=False, float_format="%.17g"))


def to_builtin(obj):
    """Recursively convert numpy scalars and arrays so ``json`` can serialise them."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_builtin(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
