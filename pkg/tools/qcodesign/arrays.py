"""Array aliases used across modules."""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]
BitArray = NDArray[np.int8]

# Joint controller + certificate parameters, controller gains first.
DesignVector = FloatArray
Bitstring = BitArray

RhsFunction = Callable[[float, FloatArray], FloatArray]
ClosedLoop = Callable[[float, FloatArray], Tuple[FloatArray, FloatArray]]
Objective = Callable[[FloatArray], float]
