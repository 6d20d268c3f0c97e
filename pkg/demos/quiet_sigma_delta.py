"""An asymmetric second-order Sigma-Delta scheme goes quiet on zero input.

Plain second-order schemes keep toggling forever when the input is silent.
The asymmetric rule instead settles into a constant output after a short
transient, from every starting state we try.
"""
import numpy as np

from adq import sigma_delta as sd
from adq.quantizers import ScalarQuantizerSpec

rng = np.random.default_rng(1)
starts = rng.uniform(-20, 20, (8, 2))
for u0, v0 in starts:
    rep = sd.trapping_diagnostics(0.2, 0.98, (u0, v0), max_steps=100_000)
    print(f"start ({u0:6.2f}, {v0:6.2f}): settled={rep.settled}, trapped by step {rep.entry_index}")

plain = sd.SdConfig(quantizer=ScalarQuantizerSpec.tri(0.5))
trace = sd.sd_run(plain, 0.0, (0.3, 0.0), steps=200_000)
tone = sd.idle_tone_detect(trace.b, 100)
print(f"\nplain scheme from (0.3, 0): {sd.quietness_test(trace).status}, idle tone of period {tone.period}")
