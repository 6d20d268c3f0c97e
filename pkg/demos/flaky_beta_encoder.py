"""A beta encoder keeps working when its comparator is unreliable near zero.

We encode a few numbers with a comparator that answers adversarially inside a
band of width 0.2, decode with the true base, and compare the error to the
robust bound.  Then we recover an unknown base of a golden-ratio encoder from
the bits of two numbers alone.
"""
import numpy as np
from scipy.optimize import brentq

from adq.beta_encoder import BetaEncoderConfig, beta_decode, beta_encode, robust_error_bound
from adq.gamma_recovery import RecoveryConfig, recover_gamma
from adq.gre import GreConfig, gamma_of_leaks, gre_encode
from adq.quantizers import FlakyMode, ScalarQuantizerSpec

rng = np.random.default_rng(0)
x = np.array([-0.9, -0.31, 0.0, 0.42, 0.77])

print("beta = 1.8, comparator unreliable on [-0.2, 0.2]")
for kind in ("plus", "minus", "coin"):
    cfg = BetaEncoderConfig(1.8, 24, quantizer=ScalarQuantizerSpec.flaky(0.2, FlakyMode(kind)))
    bits, _ = beta_encode(x, cfg, rng)
    err = np.abs(x - beta_decode(bits, 1 / 1.8, 24)).max()
    print(f"  {kind:>5}: worst error {err:.2e}  (bound {robust_error_bound(1.8, 0.2, 24):.2e})")

# Two integrators that both leak a little give an effective base we do not
# know.  Encoding x and -x with the same hardware is enough to find it.
lam = brentq(lambda l: gamma_of_leaks(l, l) - 0.625, 0.5, 1.0)
gamma = float(gamma_of_leaks(lam, lam))
cfg = GreConfig(alpha=1.8, nu=0.3, mode=FlakyMode.coin(), lam1=lam, lam2=lam, N=80)
b, _ = gre_encode(0.31, cfg, rng)
c, _ = gre_encode(-0.31, cfg, rng)
estimate, certificate, _ = recover_gamma(b, c, RecoveryConfig(), N=48)
print(f"\ntrue base {gamma:.12f}, recovered {estimate:.12f}, error {abs(estimate - gamma):.1e}")
print("certificate:", certificate)
