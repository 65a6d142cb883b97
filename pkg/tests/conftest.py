import numpy as np
import pytest

from clw.pl import PLFunc
from clw.signature import Signature, Symbol
from clw.structures import FiniteStructure


@pytest.fixture
def line4():
    """Interval net {0, 1/4, ..., 1} with P(x) = x, h = snapped x/2, c = 1."""
    ident = PLFunc.identity()
    sig = Signature("line", (Symbol("P", 1, ident),), (Symbol("h", 1, PLFunc.linear(2)),), ("c",))
    x = np.arange(5) / 4
    d = np.abs(np.subtract.outer(np.arange(5), np.arange(5))) / 4
    return FiniteStructure(sig, [str(v) for v in x], d, {"P": x.copy()},
                           {"h": np.array([0, 0, 1, 1, 2])}, {"c": 4})
