"""Per-axis Hurst estimation on a two-parameter Rosenblatt-type sheet."""
import numpy as np

from hermite_fields import derive_exponents, estimate_hurst, simulate_hermite_rank
from hermite_fields.harness import replica_seed

params = derive_exponents(2, (0.7, 0.6))
levels = [128, 256, 512, 1024]
est = np.array([estimate_hurst(simulate_hermite_rank(params, (1024, 1024), replica_seed(3, 0, r)), levels)
                for r in range(20)])
print("true H     ", params.H)
print("mean H_hat ", est.mean(axis=0).round(4))
print("sd H_hat   ", est.std(axis=0, ddof=1).round(4))
