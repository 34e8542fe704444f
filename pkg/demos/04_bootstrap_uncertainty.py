"""Credible intervals for the memory metrics by multinomial resampling.

Shot noise propagates through the whole reconstruction (inversion plus
projection) into the metrics, so every bootstrap trial reruns that pipeline
on counts redrawn from the observed frequencies.  Twice the spread of the
trial values is the 95% credible interval.  The trial mean generally sits
above the point estimate: the divergence estimator is biased upward by shot
noise, and the resampling exposes that bias (reported, not silently folded
in).
"""

from multitime import (STRONG_COUPLING_PARAMS, bootstrap_ci, markovian_reference,
                       model_process_matrix, negativity, sample_counts, sqrt_jsd)

w = model_process_matrix(STRONG_COUPLING_PARAMS)
exact = {"sqrt_jsd": sqrt_jsd(w, markovian_reference(w)), "negativity": negativity(w)}

counts = sample_counts(w, shots=2 ** 14, seed=7)
print(f"sampled {counts.total_shots():.0f} shots across 324 settings\n")

for metric in ("sqrt_jsd", "negativity"):
    result = bootstrap_ci(counts, metric, trials=300, resample_shots=8000, seed=1)
    print(f"{metric:10s}: {result.point:.4f} +/- {result.ci95:.4f} "
          f"(bootstrap bias {result.bias:+.4f}, exact value {exact[metric]:.4f})")
print("\nnote how the reported bias accounts for most of the gap between the"
      "\npoint estimate and the exact value for sqrt_jsd")
