"""Deterministic second-chaos variance of V_N against its limit constant.

Prints the normalized ratio (tends to 1), the diagonal share (tends to 0)
and the scaled higher-chaos bound for a few H.
"""
import numpy as np

from hermite_fields import chaos_oracle as co
from hermite_fields import derive_exponents

Ns = [32, 64, 128, 256, 512]
for H in (0.6, 0.7, 0.9):
    p = derive_exponents(2, H)
    print(f"H={H}  c1={p.c1_H:.6f}")
    scaled = []
    for N in Ns:
        rep = co.variance_report(N, p)
        scaled.append(co.rate_scale(N, p) * co.higher_chaos_bound(N, p, 0))
        print(f"  N={N:4d}  ratio={rep.normalized_ratio:.5f}  diagonal={rep.diagonal_ratio:.5f}  "
              f"Var V_N={rep.vn_variance:.4e}  scaled bound={scaled[-1]:.4e}")
    slope = np.polyfit(np.log(Ns), np.log(scaled), 1)[0]
    print(f"  scaled higher-chaos slope {slope:.4f}")
