"""Run every wave-kernel identity and inequality check and print a table."""
from levywave.wave_kernel import kernel_suite

reps = kernel_suite(seed=0, sweep_scale=0.2)
w = max(len(r.check) for r in reps)
for r in reps:
    print(f"{r.check:<{w}}  {'ok ' if r.passed else 'BAD'}  ratio={r.ratio:.4g}  {r.params}")
print(f"{sum(r.passed for r in reps)}/{len(reps)} passed")
