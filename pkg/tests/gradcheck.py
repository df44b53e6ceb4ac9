"""Central-finite-difference gradient checking for torch modules."""

import numpy as np
import torch

FD_STEP = 1e-5
REL_TOL = 1e-4
#: absolute agreement below which both values count as numerical zero; a
#: finite-difference step that straddles a ReLU kink produces spurious
#: step-scale values where the true gradient is 0
ABS_FLOOR = 1e-5


def max_rel_error(module, scalar_fn, step=FD_STEP, entries_per_tensor=5, seed=0):
    """Compare autograd gradients of ``scalar_fn()`` against central differences.

    ``scalar_fn`` must be a deterministic function of the module parameters
    (no dropout, no RNG). Checks up to `entries_per_tensor` random entries of
    every parameter tensor; returns the worst relative error seen.
    """
    params = [p for p in module.parameters() if p.requires_grad]
    loss = scalar_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.data.view(-1)
        g_flat = torch.zeros_like(flat) if g is None else g.reshape(-1)
        n = flat.numel()
        picks = rng.choice(n, size=min(entries_per_tensor, n), replace=False)
        for idx in picks:
            orig = flat[idx].item()
            flat[idx] = orig + step
            f_plus = scalar_fn().item()
            flat[idx] = orig - step
            f_minus = scalar_fn().item()
            flat[idx] = orig
            fd = (f_plus - f_minus) / (2 * step)
            analytic = g_flat[idx].item()
            if abs(analytic - fd) < ABS_FLOOR:
                continue
            rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6)
            worst = max(worst, rel)
    return worst
