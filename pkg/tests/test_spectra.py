import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mdsd import constants
from mdsd.spectra import (
    AtmosphereState,
    CatalogParseError,
    PartitionModel,
    SpectralLine,
    absorption_coefficient,
    absorption_cross_section,
    absorption_db_per_km,
    beer_lambert_loss,
    doppler_halfwidth,
    gaussian_line_shape,
    line_intensity_at,
    mars_atmosphere,
    molecular_volume_density,
    parse_line_catalog,
    parse_partition_table,
)

from conftest import FIXTURE_LINES, make_par_record

POWER_LAW = PartitionModel(mode="power-law", beta=1.0)


def co2_line(wavenumber=33.3564, intensity=3.1e-22, e_lower=100.0):
    return SpectralLine(
        molecule_id=2,
        isotopologue_id=1,
        center_frequency=100.0 * constants.SPEED_OF_LIGHT * wavenumber,
        reference_intensity=intensity * constants.HITRAN_INTENSITY_TO_SI,
        lower_state_energy=e_lower,
        molar_mass=0.0440095,
    )


class TestParseCatalog:
    def test_empty_input(self):
        assert parse_line_catalog("", {2}, (1e11, 2e12)) == []

    def test_single_co2_record_frequency(self):
        rec = make_par_record(2, 1, 33.3564, 3.1e-22, 100.0)
        lines = parse_line_catalog(rec, {2}, (1e11, 2e12))
        assert len(lines) == 1
        # f = 100 * c * nu, evaluated independently
        expected = 100.0 * 2.99792458e8 * 33.3564
        assert lines[0].center_frequency == pytest.approx(expected, rel=1e-12)
        assert lines[0].center_frequency == pytest.approx(1.0e12, rel=1e-4)

    def test_gas_filter_excludes_other_molecules(self):
        rec = make_par_record(1, 1, 33.3564, 3.1e-22, 100.0)  # H2O
        assert parse_line_catalog(rec, {2}, (1e11, 2e12)) == []

    def test_frequency_window(self):
        rec = make_par_record(2, 1, 33.3564, 3.1e-22, 100.0)
        assert parse_line_catalog(rec, {2}, (2e12, 3e12)) == []

    def test_wrong_width_raises_with_index(self):
        good = make_par_record(2, 1, 33.3564, 3.1e-22, 100.0)
        bad = good[:120]
        with pytest.raises(CatalogParseError) as exc:
            parse_line_catalog(good + "\n" + bad, {2}, (1e11, 2e12))
        assert exc.value.record_index == 1

    def test_non_numeric_field_raises(self):
        rec = make_par_record(2, 1, 33.3564, 3.1e-22, 100.0)
        rec = rec[:5] + "x" + rec[6:]
        with pytest.raises(CatalogParseError):
            parse_line_catalog(rec, {2}, (1e11, 2e12))

    def test_intensity_converted_to_si(self):
        rec = make_par_record(2, 1, 33.3564, 3.1e-22, 100.0)
        (line,) = parse_line_catalog(rec, {2}, (1e11, 2e12))
        assert line.reference_intensity == pytest.approx(
            3.1e-22 * 2.99792458e8 * 1e-2, rel=1e-6
        )

    def test_catalog_order_preserved(self, co2_catalog_text):
        lines = parse_line_catalog(co2_catalog_text, {2}, (1e11, 2e12))
        freqs = [ln.center_frequency for ln in lines]
        assert freqs == sorted(freqs)  # fixture happens to be sorted
        assert len(lines) == 5


class TestLineIntensity:
    def test_identity_at_reference_temperature(self):
        line = co2_line()
        s = line_intensity_at(line, 296.0, POWER_LAW)
        assert s == pytest.approx(line.reference_intensity, rel=1e-12)

    def test_zero_lower_state_energy_reduction(self):
        line = co2_line(e_lower=0.0)
        T = 210.0
        x = constants.PLANCK * line.center_frequency / constants.BOLTZMANN
        expected = (
            line.reference_intensity
            * (296.0 / T)
            * (1 - math.exp(-x / T))
            / (1 - math.exp(-x / 296.0))
        )
        assert line_intensity_at(line, T, POWER_LAW) == pytest.approx(expected, rel=1e-12)

    def test_worked_ratio_at_210K(self):
        # hand evaluation with hc/k = 1.4388 cm K gives S(210)/S_ref = 1.577
        line = co2_line()
        ratio = line_intensity_at(line, 210.0, POWER_LAW) / line.reference_intensity
        assert ratio == pytest.approx(1.577, rel=2e-3)

    def test_nonpositive_temperature_raises(self):
        with pytest.raises(ValueError):
            line_intensity_at(co2_line(), -5.0, POWER_LAW)


class TestDopplerHalfwidth:
    def test_co2_1thz_210K(self):
        line = co2_line()
        # independent evaluation: (f/c) sqrt(2 R T ln2 / M)
        expected = (line.center_frequency / 2.99792458e8) * math.sqrt(
            2.0 * 8.31446261815324 * 210.0 * math.log(2.0) / 0.0440095
        )
        a_d = doppler_halfwidth(line, 210.0)
        assert a_d == pytest.approx(expected, rel=1e-9)
        assert a_d == pytest.approx(7.82e5, rel=1e-3)

    def test_sqrt_temperature_scaling(self):
        line = co2_line()
        assert doppler_halfwidth(line, 4 * 210.0) == pytest.approx(
            2 * doppler_halfwidth(line, 210.0), rel=1e-12
        )

    def test_linear_in_frequency(self):
        a1 = doppler_halfwidth(co2_line(33.3564), 210.0)
        a2 = doppler_halfwidth(co2_line(2 * 33.3564), 210.0)
        assert a2 == pytest.approx(2 * a1, rel=1e-12)


class TestGaussianLineShape:
    def test_peak_value(self):
        a_d = 7.82e5
        peak = gaussian_line_shape(1e12, 1e12, a_d)
        assert peak == pytest.approx(math.sqrt(math.log(2) / math.pi) / a_d, rel=1e-12)
        assert peak == pytest.approx(6.01e-7, rel=2e-3)

    def test_half_width_at_half_maximum(self):
        a_d = 7.82e5
        f0 = 1e12
        assert gaussian_line_shape(f0 + a_d, f0, a_d) == pytest.approx(
            gaussian_line_shape(f0, f0, a_d) / 2, rel=1e-12
        )

    def test_unit_integral(self):
        a_d = 7.82e5
        f0 = 1e12
        integral, _ = quad(lambda f: gaussian_line_shape(f, f0, a_d), f0 - 20 * a_d, f0 + 20 * a_d)
        assert integral == pytest.approx(1.0, abs=1e-6)

    def test_symmetry(self):
        a_d = 5e5
        f0 = 1e12
        assert gaussian_line_shape(f0 + 3e5, f0, a_d) == gaussian_line_shape(f0 - 3e5, f0, a_d)


class TestCrossSectionAndDensity:
    def test_composition_at_peak(self):
        line = co2_line()
        T = 210.0
        s = line_intensity_at(line, T, POWER_LAW)
        a_d = doppler_halfwidth(line, T)
        sigma = absorption_cross_section(line, T, line.center_frequency, POWER_LAW)
        assert sigma == pytest.approx(s * math.sqrt(math.log(2) / math.pi) / a_d, rel=1e-12)

    def test_volume_density_mars(self):
        atm = mars_atmosphere(210.0, 610.0)
        q = molecular_volume_density(atm, 2, 1)
        expected = 610.0 / (8.31446261815324 * 210.0) * 0.9532 * 6.02214076e23
        assert q == pytest.approx(expected, rel=1e-9)
        assert q == pytest.approx(2.01e23, rel=5e-3)

    def test_zero_mixing_ratio(self):
        atm = AtmosphereState(210.0, 610.0, {(2, 1): 0.0})
        assert molecular_volume_density(atm, 2, 1) == 0.0

    def test_pressure_linearity(self):
        a1 = mars_atmosphere(210.0, 610.0)
        a2 = mars_atmosphere(210.0, 1220.0)
        assert molecular_volume_density(a2, 2, 1) == pytest.approx(
            2 * molecular_volume_density(a1, 2, 1), rel=1e-12
        )

    def test_unknown_species_raises(self):
        atm = mars_atmosphere()
        with pytest.raises(KeyError):
            molecular_volume_density(atm, 6, 1)


def brute_force_k(atm, catalog, f, beta=1.0):
    """Independent term-by-term evaluation of the absorption coefficient."""
    c = 2.99792458e8
    h = 6.62607015e-34
    kb = 1.380649e-23
    na = 6.02214076e23
    r_gas = na * kb
    t0 = 296.0
    total = 0.0
    for line in catalog:
        q_mix = atm.composition.get((line.molecule_id, line.isotopologue_id))
        if q_mix is None:
            continue
        q_ratio = (t0 / atm.temperature) ** beta
        c2 = h * c * 100.0 / kb
        boltz = math.exp(-c2 * line.lower_state_energy * (1 / atm.temperature - 1 / t0))
        x = h * line.center_frequency / kb
        stim = (1 - math.exp(-x / atm.temperature)) / (1 - math.exp(-x / t0))
        s_t = line.reference_intensity * q_ratio * boltz * stim
        a_d = (line.center_frequency / c) * math.sqrt(
            2 * r_gas * atm.temperature * math.log(2) / line.molar_mass
        )
        if abs(f - line.center_frequency) > 20 * a_d:
            continue
        shape = math.sqrt(math.log(2) / (math.pi * a_d**2)) * math.exp(
            -((f - line.center_frequency) ** 2) * math.log(2) / a_d**2
        )
        density = atm.pressure / (r_gas * atm.temperature) * q_mix * na
        total += (atm.pressure / 101325.0) * (273.15 / atm.temperature) * density * s_t * shape
    return total


class TestAbsorptionCoefficient:
    def test_empty_catalog(self):
        assert absorption_coefficient(mars_atmosphere(), [], 1e12, POWER_LAW) == 0.0

    def test_single_line_at_center(self):
        line = co2_line()
        atm = mars_atmosphere(210.0, 610.0)
        k = absorption_coefficient(atm, [line], line.center_frequency, POWER_LAW)
        sigma = absorption_cross_section(line, 210.0, line.center_frequency, POWER_LAW)
        q = molecular_volume_density(atm, 2, 1)
        expected = (610.0 / 101325.0) * (273.15 / 210.0) * q * sigma
        assert k == pytest.approx(expected, rel=1e-12)

    def test_five_line_fixture_matches_oracle(self, co2_catalog_text):
        catalog = parse_line_catalog(co2_catalog_text, {2}, (1e11, 2e12))
        atm = mars_atmosphere(210.0, 610.0)
        center = catalog[2].center_frequency
        for f in [center, center + 5e5, center - 2e6, catalog[0].center_frequency + 1e6]:
            k = absorption_coefficient(atm, catalog, f, POWER_LAW)
            assert k == pytest.approx(brute_force_k(atm, catalog, f), rel=1e-12)
            assert k > 0

    def test_far_wing_is_cut_off(self):
        line = co2_line()
        atm = mars_atmosphere()
        f = line.center_frequency + 21 * doppler_halfwidth(line, atm.temperature)
        assert absorption_coefficient(atm, [line], f, POWER_LAW) == 0.0

    def test_additivity_over_catalog_partition(self, co2_catalog_text):
        catalog = parse_line_catalog(co2_catalog_text, {2}, (1e11, 2e12))
        atm = mars_atmosphere()
        f = 1e12
        k_all = absorption_coefficient(atm, catalog, f, POWER_LAW)
        k_split = absorption_coefficient(atm, catalog[:2], f, POWER_LAW) + absorption_coefficient(
            atm, catalog[2:], f, POWER_LAW
        )
        assert k_all == pytest.approx(k_split, rel=1e-12)

    def test_pressure_linearity(self, co2_catalog_text):
        catalog = parse_line_catalog(co2_catalog_text, {2}, (1e11, 2e12))
        k1 = absorption_coefficient(mars_atmosphere(210.0, 400.0), catalog, 1e12, POWER_LAW)
        k2 = absorption_coefficient(mars_atmosphere(210.0, 800.0), catalog, 1e12, POWER_LAW)
        assert k2 == pytest.approx(4 * k1, rel=1e-12)  # quadratic: (p/p0) * Q(p)


class TestBeerLambert:
    def test_lossless(self):
        assert beer_lambert_loss(0.0, 1000.0) == (1.0, 0.0)
        assert beer_lambert_loss(1e-5, 0.0) == (1.0, 0.0)

    def test_worked_example_both_forms_agree(self):
        k, d = 1e-5, 1000.0
        factor, loss_db = beer_lambert_loss(k, d)
        assert factor == pytest.approx(math.exp(k * d), rel=1e-12)
        assert loss_db == pytest.approx(0.04343, rel=1e-3)
        assert loss_db == pytest.approx(absorption_db_per_km(k), rel=1e-12)

    def test_db_per_km_identity(self):
        for k in [1e-7, 3.7e-5, 2e-3]:
            direct = 10.0 * math.log10(math.exp(k * 1000.0))
            assert absorption_db_per_km(k) == pytest.approx(direct, rel=1e-12)


class TestAtmosphereValidation:
    def test_temperature_window(self):
        with pytest.raises(ValueError):
            AtmosphereState(100.0, 610.0, {})
        with pytest.raises(ValueError):
            AtmosphereState(350.0, 610.0, {})

    def test_mixing_ratio_sum(self):
        with pytest.raises(ValueError):
            AtmosphereState(210.0, 610.0, {(2, 1): 0.8, (22, 1): 0.3})


class TestPartitionModel:
    def test_table_interpolation(self):
        model = parse_partition_table(
            "# comment\n2_1 200.0 100.0\n2_1 296.0 148.0\n2_1 300.0 150.0\n"
        )
        # Q(296)/Q(248) with linear interpolation
        q_248 = 100.0 + (148.0 - 100.0) * (248.0 - 200.0) / (296.0 - 200.0)
        assert model.q_ratio(248.0, key="2_1") == pytest.approx(148.0 / q_248, rel=1e-12)

    def test_power_law_fallback(self):
        assert POWER_LAW.q_ratio(148.0) == pytest.approx(2.0, rel=1e-12)

    def test_bad_table_rejected(self):
        with pytest.raises(ValueError):
            PartitionModel(mode="table", table={"2_1": [(300.0, 1.0), (200.0, 2.0)]})


@settings(max_examples=30, deadline=None)
@given(
    wavenumber=st.floats(min_value=10.0, max_value=100.0),
    e_lower=st.floats(min_value=0.0, max_value=500.0),
    beta=st.floats(min_value=0.5, max_value=2.0),
)
def test_intensity_identity_at_reference_for_any_line(wavenumber, e_lower, beta):
    line = co2_line(wavenumber=wavenumber, e_lower=e_lower)
    model = PartitionModel(mode="power-law", beta=beta)
    assert line_intensity_at(line, 296.0, model) == pytest.approx(
        line.reference_intensity, rel=1e-12
    )
