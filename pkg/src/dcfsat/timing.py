"""Frame airtimes and channel-busy durations for 802.11b DCF (long preamble)."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass


class AccessMode(str, enum.Enum):
    BASIC = "basic"
    RTSCTS = "rtscts"

    @classmethod
    def parse(cls, value: "str | AccessMode") -> "AccessMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("/", "").replace("-", "").replace("_", "")
        for mode in cls:
            if mode.value == key:
                return mode
        raise ValueError(f"unknown access mode {value!r} (expected 'basic' or 'rtscts')")


@dataclass(frozen=True)
class MacTimingParams:
    """PHY/MAC timing inputs. Times in microseconds, rate in bits per microsecond.

    The defaults are the 11 Mbps 802.11b values with the PLCP preamble and
    header sent at 1 Mbps (one microsecond per symbol).
    """

    channel_rate: float = 11.0
    phy_preamble_symbols: int = 144
    phy_header_symbols: int = 48
    symbol_duration: float = 1.0
    mac_header_octets: int = 34
    ack_octets: int = 14
    rts_octets: int = 20
    cts_octets: int = 14
    sifs: float = 10.0
    difs: float = 50.0
    slot_sigma: float = 20.0
    payload_octets: int = 2312

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if field.name == "payload_octets":
                # a zero payload is allowed for overhead-only what-if runs
                if value < 0:
                    raise ValueError(f"payload_octets must be >= 0, got {value}")
            elif not value > 0:
                raise ValueError(f"{field.name} must be strictly positive, got {value}")

    def replace(self, **changes) -> "MacTimingParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChannelTimes:
    t_s: float
    t_c: float
    t_e: float
    access_mode: AccessMode
    payload_airtime: float


def frame_airtime(octets: float, params: MacTimingParams) -> float:
    """Duration of ``octets`` sent at the data channel rate."""
    if octets < 0:
        raise ValueError(f"octets must be >= 0, got {octets}")
    return 8.0 * octets / params.channel_rate


def phy_overhead(params: MacTimingParams) -> float:
    return (params.phy_preamble_symbols + params.phy_header_symbols) * params.symbol_duration


def _control_frame(octets: int, params: MacTimingParams) -> float:
    return phy_overhead(params) + frame_airtime(octets, params)


def channel_times(mode: "AccessMode | str", params: MacTimingParams | None = None) -> ChannelTimes:
    """Busy-period durations T_s, T_c and T_e (= T_s) for one access mode.

    Basic:   T_s = PHY + MAC_hdr + L + SIFS + ACK + DIFS,  T_c = PHY + MAC_hdr + L + DIFS
    RTS/CTS: T_s = RTS + SIFS + CTS + SIFS + PHY + MAC_hdr + L + SIFS + ACK + DIFS,
             T_c = RTS + DIFS
    """
    mode = AccessMode.parse(mode)
    params = params or MacTimingParams()
    phy = phy_overhead(params)
    mac_hdr = frame_airtime(params.mac_header_octets, params)
    payload = frame_airtime(params.payload_octets, params)
    ack = _control_frame(params.ack_octets, params)

    data = phy + mac_hdr + payload
    if mode is AccessMode.BASIC:
        t_s = data + params.sifs + ack + params.difs
        t_c = data + params.difs
    else:
        rts = _control_frame(params.rts_octets, params)
        cts = _control_frame(params.cts_octets, params)
        t_s = rts + params.sifs + cts + params.sifs + data + params.sifs + ack + params.difs
        t_c = rts + params.difs
    return ChannelTimes(t_s=t_s, t_c=t_c, t_e=t_s, access_mode=mode, payload_airtime=payload)


# Published busy-period durations for the default parameters, microseconds.
TABLE1_REFERENCE = {
    (AccessMode.BASIC, "t_s"): 2160.4,
    (AccessMode.BASIC, "t_c"): 1948.2,
    (AccessMode.RTSCTS, "t_s"): 2589.1,
    (AccessMode.RTSCTS, "t_c"): 256.5,
}
TABLE1_TOLERANCE_US = 0.1
