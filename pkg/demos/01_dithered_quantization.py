"""
Why dither a quantizer
======================

A coarse uniform quantizer leaves an error that depends on its input. Adding
a uniform dither of one cell width before quantizing makes that error look
like independent uniform noise, whatever the input was. This script shows
both sides on a few inputs.
"""

import numpy as np

from dithercs import QuantizationScheme, observe, quantization_error_diagnostics, quantize_uniform

delta = 0.3

# %% The quantizer maps every real to the midpoint of its cell.
print("Q(0.00) =", quantize_uniform(0.0, delta))
print("Q(0.29) =", quantize_uniform(0.29, delta))
print("Q(-0.01) =", quantize_uniform(-0.01, delta))

# %% Without dither, a constant input gives a constant error.
ybar = np.full(100_000, 0.37)
plain = QuantizationScheme("uniform", delta, dithered=False)
y, tau = observe(ybar, plain, seed=1)
print("\nundithered error values:", np.unique(np.round(y - ybar, 12)))

# %% With dither the error spreads over the whole cell with variance delta^2/12.
dithered = QuantizationScheme("uniform", delta, dithered=True)
rng = np.random.default_rng(0)
for name, ybar in [("constant", np.full(100_000, 0.37)),
                   ("gaussian", rng.standard_normal(100_000)),
                   ("ramp", np.linspace(-4, 4, 100_000))]:
    y, tau = observe(ybar, dithered, seed=2)
    st = quantization_error_diagnostics(ybar, y, tau, delta)
    print(f"{name:>9}: mean={st['mean']:+.1e} var={st['variance']:.5f} "
          f"(target {delta**2 / 12:.5f}) KS={st['ks_distance']:.4f} corr={st['input_correlation']:+.4f}")
