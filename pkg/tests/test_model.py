import math

import pytest
from hypothesis import given, strategies as st

from gridfreq import (
    AreaParams,
    GridModel,
    TieLine,
    inertia_constant,
    kinetic_energy,
    load_damping_per_hz,
    m_from_h,
    stored_energy,
    validate,
)
from gridfreq.errors import (
    DanglingTieEndpoint,
    DisconnectedGraph,
    DuplicateArea,
    DuplicateTie,
    InvalidTie,
    NonPositiveBasePower,
    NonPositiveFrequency,
    NonPositiveParameter,
)

from conftest import make_area, make_primary, make_secondary, two_area_model


# --- kinetic energy / inertia constant -----------------------------------------

def test_kinetic_energy_zero_cases():
    assert kinetic_energy(0.0, 50.0) == 0.0
    assert kinetic_energy(1.0, 0.0) == 0.0


def test_kinetic_energy_hand_value():
    # 0.5 * 1000 * (2*pi*50)^2, evaluated independently
    expected = 0.5 * 1000.0 * (2.0 * math.pi * 50.0) ** 2
    assert expected == pytest.approx(49348022.00544679, rel=1e-12)
    assert kinetic_energy(1000.0, 50.0) == pytest.approx(expected, rel=1e-14)


def test_kinetic_energy_rejects_negative():
    with pytest.raises(NonPositiveParameter):
        kinetic_energy(-1.0, 50.0)
    with pytest.raises(NonPositiveParameter):
        kinetic_energy(1.0, -50.0)


def test_inertia_constant_examples():
    assert inertia_constant(6.0 * 230e9, 230e9) == pytest.approx(6.0, rel=1e-14)
    assert stored_energy(6.0, 115e9) == pytest.approx(690e9, rel=1e-14)
    assert inertia_constant(0.0, 230e9) == 0.0


def test_inertia_constant_rejects_bad_base():
    with pytest.raises(NonPositiveBasePower):
        inertia_constant(1.0, 0.0)
    with pytest.raises(NonPositiveBasePower):
        stored_energy(1.0, -5.0)


@given(
    h=st.floats(min_value=0.0, max_value=20.0, allow_nan=False),
    s=st.floats(min_value=1e-3, max_value=1e12, allow_nan=False),
)
def test_inertia_energy_round_trip(h, s):
    assert inertia_constant(stored_energy(h, s), s) == pytest.approx(h, rel=1e-12, abs=1e-15)


# --- m_from_h -------------------------------------------------------------------

def test_m_from_h_hand_value():
    # 2*6*115000 / (2*pi*50) = 13800/pi
    expected = 13800.0 / math.pi
    assert expected == pytest.approx(4392.676429336311, rel=1e-12)
    assert m_from_h(6.0, 115000.0, 50.0) == pytest.approx(expected, rel=1e-14)


def test_m_from_h_zero_and_linearity():
    assert m_from_h(0.0, 115000.0, 50.0) == 0.0
    assert m_from_h(12.0, 115000.0, 50.0) == pytest.approx(
        2.0 * m_from_h(6.0, 115000.0, 50.0), rel=1e-14
    )


def test_m_from_h_rejects_bad_frequency():
    with pytest.raises(NonPositiveFrequency):
        m_from_h(6.0, 115000.0, 0.0)


@given(
    h=st.floats(min_value=0.0, max_value=20.0),
    s=st.floats(min_value=1.0, max_value=1e6),
    scale=st.floats(min_value=0.1, max_value=10.0),
)
def test_m_from_h_scales_with_h_times_s(h, s, scale):
    base = m_from_h(h, s, 50.0)
    assert m_from_h(h * scale, s, 50.0) == pytest.approx(scale * base, rel=1e-12, abs=1e-12)


# --- validate -------------------------------------------------------------------

def test_validate_two_area_table(table1_two_area):
    model = table1_two_area
    assert [a.id for a in model.areas] == ["I", "II"]
    assert model.area_index == {"I": 0, "II": 1}
    assert model.ties[0].coupling == 23000.0


def test_validate_single_area_no_ties():
    model = validate(GridModel(f0=50.0, areas=[make_area("only")]))
    assert len(model.areas) == 1 and not model.ties


def test_validate_zero_inertia_area_is_legal():
    model = validate(GridModel(f0=50.0, areas=[make_area("inv", H=0.0)]))
    assert model.areas[0].H == 0.0


def test_validate_resolves_droop_default():
    area = make_area("I", primary=make_primary(reserve=1500.0))
    model = validate(GridModel(f0=50.0, areas=[area]))
    # full reserve activates at a 0.2 Hz deviation
    assert model.areas[0].primary.droop_bias == pytest.approx(0.2 / 1500.0, rel=1e-14)


def test_validate_resolves_coupling_default():
    model = validate(GridModel(
        f0=50.0,
        areas=[make_area("I"), make_area("II")],
        ties=[TieLine("I", "II", rating=2875.0)],
    ))
    assert model.ties[0].coupling == 2875.0


def test_validate_resolves_frequency_bias_default():
    area = make_area(
        "I", primary=make_primary(reserve=1500.0, droop_bias=1.0 / 1500.0),
        secondary=make_secondary(),
    )
    model = validate(GridModel(f0=50.0, areas=[area]))
    expected = 1500.0 + load_damping_per_hz(1.5, 115000.0)
    assert model.areas[0].secondary.frequency_bias == pytest.approx(expected, rel=1e-14)


def test_validate_is_idempotent(table1_two_area):
    again = validate(table1_two_area)
    assert again is table1_two_area
    assert again == table1_two_area


def test_validate_duplicate_area():
    with pytest.raises(DuplicateArea):
        validate(GridModel(f0=50.0, areas=[make_area("I"), make_area("I")]))


def test_validate_dangling_tie_names_area():
    with pytest.raises(DanglingTieEndpoint, match="ghost"):
        validate(GridModel(
            f0=50.0, areas=[make_area("I"), make_area("II")],
            ties=[TieLine("I", "II", rating=1.0), TieLine("I", "ghost", rating=1.0)],
        ))


def test_validate_self_tie():
    with pytest.raises(InvalidTie):
        validate(GridModel(f0=50.0, areas=[make_area("I")],
                           ties=[TieLine("I", "I", rating=1.0)]))


def test_validate_duplicate_tie_pair():
    with pytest.raises(DuplicateTie):
        validate(GridModel(
            f0=50.0, areas=[make_area("I"), make_area("II")],
            ties=[TieLine("I", "II", rating=1.0), TieLine("II", "I", rating=2.0)],
        ))


def test_validate_disconnected_graph():
    with pytest.raises(DisconnectedGraph):
        validate(GridModel(
            f0=50.0,
            areas=[make_area("I"), make_area("II"), make_area("III")],
            ties=[TieLine("I", "II", rating=1.0)],
        ))


@pytest.mark.parametrize(
    "field,kwargs",
    [
        ("S_B", dict(S_B=0.0)),
        ("k_load", dict(k_load=0.0)),
        ("H", dict(H=-1.0)),
    ],
)
def test_validate_nonpositive_parameters_name_the_field(field, kwargs):
    with pytest.raises(NonPositiveParameter, match=field):
        validate(GridModel(f0=50.0, areas=[make_area("I", **kwargs)]))


def test_validate_bad_f0():
    with pytest.raises(NonPositiveFrequency):
        validate(GridModel(f0=0.0, areas=[make_area("I")]))


def test_validate_primary_activation_must_exceed_delay():
    bad = make_primary(delay=5.0, full_activation_time=5.0)
    with pytest.raises(NonPositiveParameter, match="full_activation_time"):
        validate(GridModel(f0=50.0, areas=[make_area("I", primary=bad)]))


def test_validate_nonpositive_tie_rating():
    with pytest.raises(NonPositiveParameter, match="rating"):
        validate(GridModel(
            f0=50.0, areas=[make_area("I"), make_area("II")],
            ties=[TieLine("I", "II", rating=0.0)],
        ))


def test_load_damping_per_hz_convention():
    # 1.5 percent of 230 GW per Hz
    assert load_damping_per_hz(1.5, 230000.0) == pytest.approx(3450.0, rel=1e-14)
