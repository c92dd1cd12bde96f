import pytest

from gridfreq import (
    AreaParams,
    GridModel,
    PrimaryControlParams,
    SecondaryControlParams,
    TieLine,
    validate,
)


def make_primary(reserve=1500.0, delay=5.0, full_activation_time=30.0, droop_bias=None):
    return PrimaryControlParams(
        reserve=reserve, delay=delay, full_activation_time=full_activation_time,
        droop_bias=droop_bias,
    )


def make_secondary(reserve=14000.0, activation_delay=30.0, ace_filter_time=15.0):
    return SecondaryControlParams(
        reserve=reserve, C_p=0.17, T_N=120.0, response_time=120.0,
        activation_delay=activation_delay, ace_filter_time=ace_filter_time,
    )


def make_area(area_id="I", H=6.0, S_B=115000.0, k_load=1.5, primary=None, secondary=None):
    return AreaParams(id=area_id, H=H, S_B=S_B, k_load=k_load,
                      primary=primary, secondary=secondary)


def one_area_model(H=6.0, fast=False):
    """Continental-scale single area with the standard control chain."""
    primary = make_primary(
        reserve=3000.0,
        delay=0.0 if fast else 5.0,
        full_activation_time=5.0 if fast else 30.0,
        droop_bias=0.5 / 3000.0,
    )
    secondary = make_secondary(reserve=28000.0)
    area = make_area("CE", H=H, S_B=230000.0, primary=primary, secondary=secondary)
    return validate(GridModel(f0=50.0, areas=[area]))


def two_area_model(h2=6.0, coupling=23000.0):
    """Two equal areas on a stiff corridor, controls per the standard chain."""
    def area(aid, H):
        return make_area(
            aid, H=H,
            primary=make_primary(droop_bias=1.0 / 1500.0),
            secondary=make_secondary(),
        )
    return validate(GridModel(
        f0=50.0,
        areas=[area("I", 6.0), area("II", h2)],
        ties=[TieLine("I", "II", rating=2875.0, coupling=coupling)],
    ))


def bare_two_area_model(h1=6.0, h2=6.0, coupling=2875.0):
    """Two areas, one tie, no controllers (autonomous swing dynamics)."""
    return validate(GridModel(
        f0=50.0,
        areas=[make_area("I", H=h1), make_area("II", H=h2)],
        ties=[TieLine("I", "II", rating=2875.0, coupling=coupling)],
    ))


@pytest.fixture
def table1_two_area():
    return two_area_model()
