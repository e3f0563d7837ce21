"""Central finite-difference comparison against backward-pass gradients."""
import numpy as np

# Relative-error denominator floor: gradients below this magnitude are
# dominated by finite-difference noise, not by backward-pass bugs.
DENOM_FLOOR = 1e-3


def grad_check(f, inputs, epsilon=1e-5):
    """Worst relative error between analytic and central-difference grads.

    ``f`` rebuilds and returns the scalar loss Tensor from the given input
    Tensors on every call, so in-place perturbation of ``inputs[i].data`` is
    visible to it.
    """
    for t in inputs:
        t.zero_grad()
    out = f()
    out.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy()
                for t in inputs]
    worst = 0.0
    for t, an in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        aflat = an.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + epsilon
            hi = float(f().data)
            flat[i] = saved - epsilon
            lo = float(f().data)
            flat[i] = saved
            fd = (hi - lo) / (2.0 * epsilon)
            err = abs(fd - aflat[i]) / max(abs(fd), abs(aflat[i]), DENOM_FLOOR)
            if err > worst:
                worst = err
    return worst
