"""Chart-module tests.

The box checks are pinned against an independent wedge-product oracle
(contact_oracle_box assembles the full 1-form triple product rather
than reading off a single derivative); the constructions are tested by
re-running their defining checks plus bit-identity on the declared
coincidence strata.  Analytic expectations frozen below were derived by
hand: the volume coefficient for dz + f dx is -df/dy, the leaf map for
f = -c(1-z^2) is tanh(artanh z0 - 2 pi c).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsgate.charts import (
    ANNULUS,
    BOX,
    CYLINDER,
    INNER_CONTACT,
    OUTER_CONTACT,
    SlopeGrid,
    check_box,
    check_cylinder,
    contact_oracle_box,
    extend_cell,
    holonomy_map,
    parse_grid,
    print_grid,
    purify_box,
    purify_cylinder,
    sample_annulus,
    sample_box,
    sample_cylinder,
)
from bsgate.errors import ChartError

SMALL = (17, 17, 17)


# -- grid construction --------------------------------------------------------

def test_grid_rejects_unknown_kind():
    with pytest.raises(ChartError, match="kind"):
        SlopeGrid("sphere", (), np.zeros((3, 3, 3)))


def test_grid_shape_and_bounds_rules():
    with pytest.raises(ChartError, match="3-dimensional"):
        SlopeGrid(BOX, (), np.zeros((3, 3)))
    with pytest.raises(ChartError, match="2-dimensional"):
        SlopeGrid(ANNULUS, (), np.zeros((3, 3, 3)))
    with pytest.raises(ChartError, match="radial bound"):
        SlopeGrid(CYLINDER, (), np.zeros((3, 3, 3)))
    with pytest.raises(ChartError, match="no bounds"):
        SlopeGrid(BOX, (1.0,), np.zeros((3, 3, 3)))
    with pytest.raises(ChartError, match="at least 2"):
        SlopeGrid(BOX, (), np.zeros((3, 1, 3)))


def test_h_only_on_cylinders():
    with pytest.raises(ChartError, match="carry h"):
        SlopeGrid(BOX, (), np.zeros((3, 3, 3)), np.zeros((3, 3, 3)))
    with pytest.raises(ChartError, match="shape"):
        SlopeGrid(CYLINDER, (1.0,), np.zeros((3, 3, 3)), np.zeros((3, 3, 4)))


def test_grids_are_immutable():
    g = sample_box(lambda x, y, z: x, shape=(3, 3, 3))
    with pytest.raises(ValueError):
        g.values[0, 0, 0] = 5.0


# -- box checks ---------------------------------------------------------------

def test_constant_field_is_confoliation_without_contact():
    rep = check_box(sample_box(lambda x, y, z: -1.0 + 0 * x, SMALL))
    assert rep.is_confoliation
    assert not rep.contact_mask.any()
    assert rep.max_violation == 0.0


def test_linear_field_is_contact_everywhere():
    rep = check_box(sample_box(lambda x, y, z: -1.0 - y, SMALL))
    assert rep.is_confoliation and rep.is_contact
    assert rep.max_violation == 0.0


def test_rising_field_fails_with_unit_violation():
    rep = check_box(sample_box(lambda x, y, z: y, SMALL))
    assert not rep.is_confoliation
    assert rep.max_violation == pytest.approx(1.0, abs=1e-12)


def test_check_box_degenerate_axis():
    with pytest.raises(ChartError, match="3 samples along y"):
        check_box(SlopeGrid(BOX, (), np.zeros((5, 2, 5))))
    with pytest.raises(ChartError, match="box grid"):
        check_box(sample_annulus(lambda t, z: 0 * t, (4, 5)))


def test_oracle_linear_field_coefficient_is_one():
    coef = contact_oracle_box(sample_box(lambda x, y, z: -1.0 - y, SMALL))
    assert np.abs(coef - 1.0).max() <= 1e-12


def test_oracle_constant_field_coefficient_is_zero():
    coef = contact_oracle_box(sample_box(lambda x, y, z: 0.7 + 0 * x, SMALL))
    assert np.abs(coef).max() <= 1e-12


def test_oracle_cubic_field_tracks_three_y_squared():
    # second-order differences of y^3 carry an O(h^2) bias, largest at
    # the one-sided rows; 2 h^2 bounds it on this grid
    g = sample_box(lambda x, y, z: -y ** 3, (65, 65, 65))
    coef = contact_oracle_box(g)
    y = g.axes()[1][None, :, None]
    h = g.spacings()[1]
    assert np.abs(coef - 3.0 * y ** 2).max() <= 2.0 * h * h + 1e-12


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_oracle_equals_negated_derivative_on_the_interior(seed):
    # both code paths reduce to the same central stencil away from the
    # y edges, so agreement there is exact for arbitrary samples
    f = np.random.RandomState(seed).uniform(-2, 2, size=(7, 7, 7))
    g = SlopeGrid(BOX, (), f)
    coef = contact_oracle_box(g)
    dfdy = np.gradient(g.values, g.spacings()[1], axis=1, edge_order=1)
    assert np.array_equal(coef[:, 1:-1, :], -dfdy[:, 1:-1, :])


# -- cylinder checks ----------------------------------------------------------

def test_cylinder_pure_field():
    g = sample_cylinder(lambda r, t, z: -r ** 2, (17, 16, 17),
                        h_fn=lambda r, t, z: -1.0 + 0 * r)
    rep = check_cylinder(g)
    assert rep.is_confoliation and rep.is_contact
    assert rep.max_violation == 0.0


def test_cylinder_quartic_field_misses_axis_contact():
    g = sample_cylinder(lambda r, t, z: -r ** 4, (17, 16, 17),
                        h_fn=lambda r, t, z: -r ** 2)
    rep = check_cylinder(g)
    assert rep.is_confoliation
    assert rep.contact_mask[1:].all()
    assert not rep.contact_mask[0].any()  # h(0) = 0: open condition fails


def test_cylinder_rising_field_fails():
    g = sample_cylinder(lambda r, t, z: r ** 2, (17, 16, 17),
                        h_fn=lambda r, t, z: 1.0 + 0 * r)
    rep = check_cylinder(g)
    assert not rep.is_confoliation
    assert rep.max_violation == pytest.approx(2.0, abs=0.1)


def test_cylinder_reduction_consistency_is_checked():
    g = sample_cylinder(lambda r, t, z: -r ** 2, (17, 16, 17),
                        h_fn=lambda r, t, z: -2.0 + 0 * r)
    rep = check_cylinder(g)
    assert not rep.is_confoliation
    assert rep.max_violation == pytest.approx(1.0, abs=1e-12)


def test_cylinder_requires_h():
    g = sample_cylinder(lambda r, t, z: -r ** 2, (9, 8, 9))
    with pytest.raises(ChartError, match="reduced samples h"):
        check_cylinder(g)


# -- purify_box ---------------------------------------------------------------

def _staircase(x, y, z):
    return -1.0 - np.maximum(0.0, y - 0.5) ** 3


def test_purify_box_postconditions():
    g = sample_box(_staircase, (33, 33, 33))
    out = purify_box(g, 0.5, 0.75, 0.1)
    rep = check_box(out)
    assert rep.is_confoliation
    x, y, z = out.axes()
    window = ((np.abs(x)[:, None, None] < 0.9)
              & np.ones((1, y.size, 1), bool)
              & (np.abs(z)[None, None, :] < 1.0))
    assert rep.contact_mask[window].all()
    assert not np.array_equal(out.values, g.values)


def test_purify_box_strata_bit_identical():
    g = sample_box(_staircase, (33, 33, 33))
    out = purify_box(g, 0.5, 0.75, 0.1)
    x, y, z = g.axes()
    keep_x = np.abs(x) >= 0.9
    j1 = int(np.argmin(np.abs(y - 0.75)))
    assert np.array_equal(out.values[keep_x], g.values[keep_x])
    assert np.array_equal(out.values[:, j1:, :], g.values[:, j1:, :])
    assert np.array_equal(out.values[:, :, 0], g.values[:, :, 0])
    assert np.array_equal(out.values[:, :, -1], g.values[:, :, -1])


def test_purify_box_identity_is_admissible():
    # already contact: the blend rewrites nothing it should not
    g = sample_box(lambda x, y, z: -y, (33, 33, 33))
    rep = check_box(purify_box(g, 0.5, 0.75, 0.1))
    assert rep.is_confoliation
    assert rep.contact_mask[:, :, 1:-1].all()


def test_purify_box_guards():
    g = sample_box(_staircase, (33, 33, 33))
    with pytest.raises(ChartError, match="0 < y0 < y1 < 1"):
        purify_box(g, 0.75, 0.5, 0.1)
    with pytest.raises(ChartError, match="0 < delta < 1"):
        purify_box(g, 0.5, 0.75, 0.0)
    with pytest.raises(ChartError, match="sample grid"):
        purify_box(g, 0.5, 0.7501, 0.1)
    flat = sample_box(lambda x, y, z: 0.0 * x, (33, 33, 33))
    with pytest.raises(ChartError, match="not contact at cell"):
        purify_box(flat, 0.5, 0.75, 0.1)
    rising = sample_box(lambda x, y, z: y, (33, 33, 33))
    with pytest.raises(ChartError, match="not a confoliation"):
        purify_box(rising, 0.5, 0.75, 0.1)


# -- purify_cylinder ----------------------------------------------------------

def _band(r, t, z):
    # -r^2 inside r0 = 0.5, then its tangent line, frozen flat past 0.75
    outer = -(r - 0.25)
    return np.where(r <= 0.5, -r ** 2, np.maximum(outer, -0.5))


def _band_h(r, t, z):
    out = np.full_like(r, -1.0)
    mask = r > 0
    out[mask] = _band(r[mask], 0, 0) / r[mask] ** 2
    return out


def test_purify_cylinder_extends_contact_to_the_band():
    g = sample_cylinder(_band, (33, 16, 33), h_fn=_band_h)
    assert check_cylinder(g).is_confoliation
    assert not check_cylinder(g).is_contact
    out = purify_cylinder(g, 0.5, INNER_CONTACT)
    rep = check_cylinder(out)
    assert rep.is_confoliation
    assert rep.contact_mask[:, :, 1:-1].all()


def test_purify_cylinder_rims_bit_identical_and_edge_drift_small():
    g = sample_cylinder(_band, (33, 16, 33), h_fn=_band_h)
    out = purify_cylinder(g, 0.5, INNER_CONTACT)
    for arr, ref in ((out.values, g.values), (out.h, g.h)):
        assert np.array_equal(arr[:, :, 0], ref[:, :, 0])
        assert np.array_equal(arr[:, :, -1], ref[:, :, -1])
    # the strictifying margin is 100 tol scaled by max |f|
    assert np.abs(out.values - g.values).max() <= 2e-7


def test_purify_cylinder_outer_mode_rescues_the_axis():
    g = sample_cylinder(lambda r, t, z: -r ** 4, (33, 16, 33),
                        h_fn=lambda r, t, z: -r ** 2)
    assert not check_cylinder(g).contact_mask[0].any()
    out = purify_cylinder(g, 0.5, OUTER_CONTACT)
    rep = check_cylinder(out)
    assert rep.is_confoliation
    assert rep.contact_mask[:, :, 1:-1].all()


def test_purify_cylinder_guards():
    g = sample_cylinder(_band, (33, 16, 33), h_fn=_band_h)
    with pytest.raises(ChartError, match="mode"):
        purify_cylinder(g, 0.5, "sideways")
    with pytest.raises(ChartError, match="0 < r0 < R"):
        purify_cylinder(g, 1.5, INNER_CONTACT)
    rising = sample_cylinder(lambda r, t, z: r ** 2, (33, 16, 33),
                             h_fn=lambda r, t, z: 1.0 + 0 * r)
    with pytest.raises(ChartError, match="not a confoliation"):
        purify_cylinder(rising, 0.5, INNER_CONTACT)
    with pytest.raises(ChartError, match="not contact at cell"):
        purify_cylinder(g, 0.5, OUTER_CONTACT)  # band is flat outside


# -- extend_cell --------------------------------------------------------------

def test_extend_cell_postconditions():
    ann = sample_annulus(lambda t, z: -(1 - z ** 2), (16, 33))
    out = extend_cell(ann, 0.5, 1.0, 33)
    rep = check_cylinder(out)
    assert rep.is_confoliation
    r = out.axes()[0]
    i0 = int(np.argmin(np.abs(r - 0.5)))
    assert np.array_equal(
        out.values[i0:], np.broadcast_to(ann.values, (33 - i0, 16, 33)))
    assert rep.contact_mask[1:i0, :, 1:-1].all()
    assert rep.contact_mask[0, :, 1:-1].all()


def test_extend_cell_reduced_limit_near_the_axis():
    # the two smallest radial lines must carry h = f / r0^2 exactly
    ann = sample_annulus(lambda t, z: -(1 - z ** 2) * (2 + np.sin(t)),
                         (16, 33))
    out = extend_cell(ann, 0.5, 1.0, 33)
    want = ann.values / 0.25
    assert np.array_equal(out.h[0], want)
    assert np.array_equal(out.h[1], want)
    i0 = int(np.argmin(np.abs(out.axes()[0] - 0.5)))
    assert check_cylinder(out).contact_mask[:i0, :, 1:-1].all()


def test_extend_cell_guards():
    flatish = sample_annulus(lambda t, z: 0.0 * t, (8, 9))
    with pytest.raises(ChartError, match="strictly negative"):
        extend_cell(flatish, 0.5, 1.0, 9)
    lifted = sample_annulus(lambda t, z: -(1 - z ** 2) - 0.1, (8, 9))
    with pytest.raises(ChartError, match="vanish"):
        extend_cell(lifted, 0.5, 1.0, 9)
    ok = sample_annulus(lambda t, z: -(1 - z ** 2), (8, 9))
    with pytest.raises(ChartError, match="0 < r0 < R"):
        extend_cell(ok, 2.0, 1.0, 9)
    with pytest.raises(ChartError, match="3 radial"):
        extend_cell(ok, 0.5, 1.0, 2)


# -- holonomy -----------------------------------------------------------------

def test_holonomy_constant_field_is_exact():
    ann = sample_annulus(lambda t, z: -0.05 + 0 * t, (16, 65))
    z1 = holonomy_map(ann, 0.0, 1e-3)
    assert abs(z1 - (-0.1 * math.pi)) <= 1e-12


def test_holonomy_matches_separable_closed_form():
    ann = sample_annulus(lambda t, z: -0.1 * (1 - z ** 2), (64, 2049))
    z1 = holonomy_map(ann, 0.5, 1e-3)
    assert abs(z1 - math.tanh(math.atanh(0.5) - 0.2 * math.pi)) <= 1e-6
    assert z1 < 0.5


def test_holonomy_flat_annulus_has_none():
    ann = sample_annulus(lambda t, z: 0.0 * t, (16, 17))
    assert holonomy_map(ann, 0.3, 1e-3) == 0.3


def test_holonomy_guards():
    ann = sample_annulus(lambda t, z: -(1 - z ** 2), (16, 17))
    with pytest.raises(ChartError, match="step"):
        holonomy_map(ann, 0.0, 0.0)
    with pytest.raises(ChartError, match="z0"):
        holonomy_map(ann, 1.0, 1e-2)
    with pytest.raises(ChartError, match="nonpositive"):
        holonomy_map(sample_annulus(lambda t, z: 0.1 + 0 * t, (8, 9)),
                     0.0, 1e-2)
    with pytest.raises(ChartError, match="annulus"):
        holonomy_map(sample_box(lambda x, y, z: 0 * x, (5, 5, 5)), 0.0, 1e-2)


@given(st.floats(0.05, 0.8), st.floats(0.0, 1.0), st.floats(-0.8, 0.8),
       st.floats(0.0, 0.5))
@settings(max_examples=25, deadline=None)
def test_holonomy_comparison_principle(amp, shrink, z0, sway):
    # f <= g <= 0 pointwise must give z1(f) <= z1(g)
    def field(t, z, s=1.0):
        return -s * amp * (1 - z ** 2) * (1 + sway * np.sin(t))

    lower = sample_annulus(field, (16, 65))
    upper = sample_annulus(lambda t, z: field(t, z, 1.0 - shrink), (16, 65))
    assert (holonomy_map(lower, z0, 2e-2)
            <= holonomy_map(upper, z0, 2e-2) + 1e-12)


def test_holonomy_displacement_sign_tracks_the_field():
    neg = sample_annulus(lambda t, z: -0.2 * (1 - z ** 2), (16, 65))
    assert holonomy_map(neg, 0.25, 1e-2) < 0.25
    zero = sample_annulus(lambda t, z: 0.0 * t, (16, 65))
    assert holonomy_map(zero, 0.25, 1e-2) == 0.25


# -- text form ----------------------------------------------------------------

def test_grid_round_trips_all_kinds():
    box = sample_box(lambda x, y, z: x * y - z, (5, 4, 3))
    cyl = sample_cylinder(lambda r, t, z: -r ** 2 * (1 + 0.1 * np.sin(t)),
                          (5, 4, 3), radius=2.0,
                          h_fn=lambda r, t, z: -(1 + 0.1 * np.sin(t)))
    ann = sample_annulus(lambda t, z: -(1 - z * z), (4, 5))
    for g in (box, cyl, ann):
        back = parse_grid(print_grid(g))
        assert back.kind == g.kind
        assert back.bounds == g.bounds
        assert np.array_equal(back.values, g.values)
        if g.h is None:
            assert back.h is None
        else:
            assert np.array_equal(back.h, g.h)


def test_grid_header_is_fixed_form():
    g = sample_box(lambda x, y, z: 0 * x, (3, 3, 5))
    head = print_grid(g).splitlines()[:4]
    assert head == [
        "bsgate-grid box 0",
        "bounds -1 1 -1 1 -1 1",
        "shape 3 3 5",
        "spacing 1 1 0.5",
    ]


def test_grid_parse_errors():
    g = sample_box(lambda x, y, z: 0 * x, (3, 3, 3))
    text = print_grid(g)
    with pytest.raises(ChartError, match="4-line header"):
        parse_grid("just one line")
    with pytest.raises(ChartError, match="not a grid file"):
        parse_grid(text.replace("bsgate-grid", "other-magic"))
    with pytest.raises(ChartError, match="h flag"):
        parse_grid(text.replace("box 0", "box 2"))
    with pytest.raises(ChartError, match="sample lines"):
        parse_grid(text + "0\n")
    with pytest.raises(ChartError, match="bad sample value"):
        parse_grid(text[:-2] + "x\n")
    with pytest.raises(ChartError, match="spacing line disagrees"):
        parse_grid(text.replace("spacing 1 1 1", "spacing 1 1 2"))
