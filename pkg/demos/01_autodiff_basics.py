"""A tour of the reverse-mode autodiff core.

Builds a few small expressions, runs backward(), and checks the results
against derivatives worked out by hand. Run directly:

    python3 demos/01_autodiff_basics.py
"""

import numpy as np

from opunet.tensor import Tensor, add, backward, mul, no_grad, power, tanh, tensor_sum

# ----------------------------------------------------------------------
# 1. a scalar chain: y = tanh(a * x + b)
# ----------------------------------------------------------------------
x = Tensor(np.array([0.3], dtype=np.float64), requires_grad=True)
a = Tensor(np.array([2.0], dtype=np.float64))
b = Tensor(np.array([-0.1], dtype=np.float64))

y = tanh(add(mul(a, x), b))
loss = tensor_sum(y)
backward(loss)

# dy/dx = a * (1 - tanh^2(a x + b))
by_hand = 2.0 * (1.0 - np.tanh(2.0 * 0.3 - 0.1) ** 2)
print(f"dy/dx autodiff {x.grad[0]:+.10f}   by hand {by_hand:+.10f}")

# ----------------------------------------------------------------------
# 2. fan-out: the same tensor used twice accumulates both contributions
# ----------------------------------------------------------------------
x = Tensor(np.array([1.5], dtype=np.float64), requires_grad=True)
backward(tensor_sum(mul(x, x)))          # d(x^2)/dx = 2x
print(f"d(x*x)/dx at 1.5 -> {x.grad[0]} (expect 3.0)")

x.zero_grad()
backward(tensor_sum(power(x, 3)))        # d(x^3)/dx = 3x^2
print(f"d(x^3)/dx at 1.5 -> {x.grad[0]} (expect 6.75)")

# ----------------------------------------------------------------------
# 3. gradients flow through whole arrays at once
# ----------------------------------------------------------------------
rng = np.random.default_rng(0)
w = Tensor(rng.standard_normal((4, 4)), requires_grad=True, dtype=np.float64)
v = Tensor(rng.standard_normal((4, 4)), requires_grad=False, dtype=np.float64)
backward(tensor_sum(mul(w, v)))
print("grad of sum(w*v) wrt w equals v:", np.allclose(w.grad, v.data))

# ----------------------------------------------------------------------
# 4. no_grad() turns recording off for inference
# ----------------------------------------------------------------------
with no_grad():
    silent = mul(w, v)
print("inside no_grad, results carry no graph:", silent._parents == ())
