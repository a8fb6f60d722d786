"""Pure numpy fallback for the compiled moment kernel."""

import numpy as np


def weighted_tensor_power_sum(rhos, weights, t):
    """out[s] = sum_i weights[i] * rhos[s, i]^{(x) t}."""
    rhos = np.asarray(rhos, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    n_states, n_members = rhos.shape[:2]
    if t == 1:
        return np.einsum("i,siab->sab", weights, rhos)
    power = rhos
    for _ in range(t - 2):
        dim = power.shape[-1]
        power = np.einsum("siab,sicd->siacbd", power, rhos).reshape(
            n_states, n_members, 2 * dim, 2 * dim
        )
    dim = power.shape[-1]
    out = np.einsum("i,siab,sicd->sacbd", weights, power, rhos)
    return out.reshape(n_states, 2 * dim, 2 * dim)
