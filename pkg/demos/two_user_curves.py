#!/usr/bin/env python3
"""
Sweep the two-user uplink over transmit SNR and print the per-user
effective-capacity curves, NOMA vs orthogonal access, from the closed
forms, with a Monte Carlo spot check at 10 dB.

Settings mirror the library defaults: P = (0.2, 0.8), beta = -1 for
both users, Rayleigh block fading with unit-mean gains.
"""

from noma_ec.asymptotics import LemmaConfig, user_ec
from noma_ec.channel import sample_ordered
from noma_ec.engine import DelayProfile, RateSpec, ec_monte_carlo
from noma_ec.rates import PowerAllocation, TransmitSnr

CFG = LemmaConfig()  # p1=0.2, beta1=beta2=-1, 'consistent' OMA exponent
SEED = 12345
SAMPLES = 10**6

print(f"{'rho_dB':>7} {'NOMA u1':>9} {'NOMA u2':>9} {'OMA u1':>9} {'OMA u2':>9}"
      f" {'gap u1':>9} {'gap u2':>9}")
for db in range(-10, 31, 2):
    rho = TransmitSnr.from_db(float(db))
    n1 = user_ec("noma", 1, CFG, rho)
    n2 = user_ec("noma", 2, CFG, rho)
    o1 = user_ec("oma", 1, CFG, rho)
    o2 = user_ec("oma", 2, CFG, rho)
    print(f"{db:>7} {n1:>9.5f} {n2:>9.5f} {o1:>9.5f} {o2:>9.5f}"
          f" {n1 - o1:>+9.5f} {n2 - o2:>+9.5f}")

print()
print(f"Monte Carlo spot check at 10 dB ({SAMPLES:.0e} samples, seed {SEED}):")
batch = sample_ordered(2, SAMPLES, SEED)
rho = TransmitSnr.from_db(10.0)
delay = DelayProfile.from_beta(-1.0)
power = PowerAllocation.two_user(CFG.p1)
for user in (1, 2):
    closed = user_ec("noma", user, CFG, rho)
    est = ec_monte_carlo(RateSpec("noma", user, power=power), delay, rho, batch)
    sigmas = abs(closed - est.value) / est.std_error
    print(f"  user {user}: closed {closed:.6f}  MC {est.value:.6f} "
          f"(se {est.std_error:.2e}, {sigmas:.2f} sigma apart)")

print()
print("Note the opposite sign changes of the two gaps: at low SNR NOMA")
print("pays the strong user and costs the weak one; past ~18-21 dB the")
print("roles swap, with each gap crossing zero within ~2.5 dB of the other.")
