"""How long the channel stays busy after a success, a collision or a frame error.

Run: python demos/01_channel_times.py
"""
from dcfsat import AccessMode, MacTimingParams, channel_times, phy_overhead

params = MacTimingParams()
print(f"PHY preamble + header: {phy_overhead(params):.0f} us at 1 us/symbol")

for mode in AccessMode:
    t = channel_times(mode, params)
    print(f"{mode.value:>7}: success {t.t_s:7.1f} us, collision {t.t_c:7.1f} us, error {t.t_e:7.1f} us")

# RTS/CTS pays more on every success but a collision only costs an RTS plus DIFS.
# Shrinking the payload shows where the crossover sits.
for octets in (2312, 1500, 500, 100):
    p = params.replace(payload_octets=octets)
    b, r = channel_times(AccessMode.BASIC, p), channel_times(AccessMode.RTSCTS, p)
    print(f"payload {octets:4d}: basic T_c {b.t_c:7.1f} us vs rts/cts T_c {r.t_c:5.1f} us")
