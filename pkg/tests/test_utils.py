import math

import pytest

from utils import (
    angle_scale,
    db_to_linear,
    dbm_to_watt,
    ebn0_to_system_gain,
    linear_to_db,
    parse_quantity,
    phase_resolution_power,
    rate_to_snr_threshold,
    snr_threshold_to_rate,
    watt_to_dbm,
)


class TestDecibels:
    def test_db_round_trip(self):
        assert float(db_to_linear(10.0)) == pytest.approx(10.0)
        assert float(linear_to_db(100.0)) == pytest.approx(20.0)

    def test_dbm(self):
        assert float(dbm_to_watt(0.0)) == pytest.approx(1e-3)
        assert float(dbm_to_watt(30.0)) == pytest.approx(1.0)
        assert float(watt_to_dbm(1e-3)) == pytest.approx(0.0, abs=1e-12)

    def test_non_positive_rejected(self):
        with pytest.raises(ValueError):
            linear_to_db(0.0)


class TestRateThreshold:
    def test_one_bit_per_hertz(self):
        assert rate_to_snr_threshold(5e6, 5e6) == pytest.approx(1.0)

    @pytest.mark.parametrize("rate", [1e3, 2.5e6, 1.7e7])
    def test_round_trip(self, rate):
        gamma = rate_to_snr_threshold(rate, 5e6)
        assert snr_threshold_to_rate(gamma, 5e6) == pytest.approx(rate, rel=1e-9)

    def test_bandwidth_must_be_positive(self):
        with pytest.raises(ValueError):
            rate_to_snr_threshold(1e6, 0.0)


class TestCaptionMapping:
    def test_ebn0_to_system_gain(self):
        assert ebn0_to_system_gain(0.0, 1e-17) == pytest.approx(1e-17)
        assert ebn0_to_system_gain(20.0, 1e-17) == pytest.approx(1e-15)

    def test_angle_scale(self):
        assert angle_scale("rad") == 1.0
        assert angle_scale("deg") == pytest.approx(180.0 / math.pi)
        with pytest.raises(ValueError):
            angle_scale("grad")


class TestPhaseResolutionPower:
    def test_quoted_bit_depths(self):
        assert phase_resolution_power(1) == pytest.approx(1e-3 * 10**0.5)
        assert phase_resolution_power(6) == pytest.approx(78e-3)
        assert phase_resolution_power(None) == pytest.approx(1e-3 * 10**4.5)

    def test_unknown_depth(self):
        with pytest.raises(ValueError, match="bits"):
            phase_resolution_power(3)


class TestParseQuantity:
    @pytest.mark.parametrize(
        "text, dimension, expected",
        [
            ("5 MHz", "frequency", 5e6),
            ("0 dBm", "power", 1e-3),
            ("-30 dBW", "power", 1e-3),
            ("10 dB", "ratio", 10.0),
            ("1e-17 W/Hz", "power_density", 1e-17),
            ("-170 dBm/Hz", "power_density", 1e-20),
            ("2 km", "length", 2000.0),
            ("360 kJ", "energy", 3.6e5),
            ("1.225 kg/m^3", "density", 1.225),
        ],
    )
    def test_units(self, text, dimension, expected):
        assert parse_quantity(text, dimension) == pytest.approx(expected)

    def test_bare_number_only_for_ratios(self):
        assert parse_quantity(3, "ratio") == 3.0
        with pytest.raises(ValueError, match="missing unit"):
            parse_quantity(3, "length")
        with pytest.raises(ValueError, match="missing unit"):
            parse_quantity("350", "length")

    @pytest.mark.parametrize("text", ["5 m", "5 MHzz", "abc", "0 dBm/Hz"])
    def test_foreign_or_malformed_unit(self, text):
        with pytest.raises(ValueError):
            parse_quantity(text, "power")

    def test_bool_rejected(self):
        with pytest.raises(ValueError):
            parse_quantity(True, "ratio")
