"""
The autodiff core
=================

A small reverse-mode tape over numpy arrays: conv1d, batch norm, pooling,
linear layers and cross-entropy, with Adam.  Each op's backward pass is
checked against central differences in float64.
"""

import numpy as np

from smartwear.nncore import Tensor
from smartwear.nncore import functional as F
from smartwear.nncore.gradcheck import gradcheck

rng = np.random.default_rng(0)
x, w, b = rng.standard_normal((2, 3, 20)), rng.standard_normal((4, 3, 5)), rng.standard_normal(4)

err, _ = gradcheck(lambda x, w, b: F.relu(F.conv1d(x, w, b, stride=2, pad=2)), [x, w, b])
print(f"conv1d + relu gradcheck: max relative error {err:.1e}")

err, _ = gradcheck(lambda x, g, be: F.max_pool1d(F.batch_norm(x, g, be), 3, 2, 1),
                   [x, rng.uniform(0.5, 2, 3), rng.standard_normal(3)])
print(f"batch norm + max pool gradcheck: max relative error {err:.1e}")

# backward by hand: d loss / d logits is (softmax - onehot) / N
logits = Tensor(rng.standard_normal((4, 6)), requires_grad=True)
loss = F.cross_entropy(logits, np.array([1, 2, 3, 6]))
loss.backward()
print(f"loss {float(loss.data):.4f}; gradient rows sum to {np.round(logits.grad.sum(axis=1), 6)}")
