import pytest

from routekit import fabric as fab
from routekit import netlist as nl


def test_builtin_2d_defaults():
    spec = fab.builtin_fabric("2d")
    assert spec.pin_access_layers == 1
    assert spec.footprint_scale == 1.0
    assert spec.num_layers == 8
    assert not spec.via_stack_exclusive


def test_builtin_tmi_defaults():
    spec = fab.builtin_fabric("tmi")
    assert spec.pin_access_layers == 1
    assert spec.footprint_scale == pytest.approx(0.5)
    assert spec.num_layers == 8


def test_builtin_s3dc_defaults():
    spec = fab.builtin_fabric("s3dc")
    assert spec.pin_access_layers == 5
    assert spec.via_stack_exclusive
    assert spec.num_layers == 13
    assert spec.access_layer_ids == (2, 3, 4, 5, 6)
    # footprint lands in the published 0.10-0.11 band and keeps
    # footprint * access layers above the monolithic-3D footprint
    assert 0.09 <= spec.footprint_scale <= 0.115
    assert spec.footprint_scale * spec.pin_access_layers > 0.5


def test_builtin_is_referentially_transparent():
    assert fab.builtin_fabric("s3dc") == fab.builtin_fabric("s3dc")
    assert fab.builtin_fabric("2d") == fab.builtin_fabric(fab.FabricKind.PLANAR_2D)


def test_layer_indices_contiguous_and_alternating():
    spec = fab.builtin_fabric("s3dc")
    for i, layer in enumerate(spec.layers, start=1):
        assert layer.index == i
        assert layer.direction == ("h" if i % 2 == 1 else "v")


def test_kind_aliases():
    assert fab.normalize_kind("TransistorMonolithic3D") is fab.FabricKind.TMI
    assert fab.normalize_kind("SkybridgeS3DC") is fab.FabricKind.S3DC
    assert fab.normalize_kind("Planar2D") is fab.FabricKind.PLANAR_2D
    with pytest.raises(fab.FabricConfigError, match="unknown fabric kind"):
        fab.normalize_kind("quantum")


# --- cell masters


def test_s3dc_nand3_access_layers():
    counts = fab.NAND3_ACCESS_COUNTS[fab.FabricKind.S3DC]
    master = fab.make_cell_master(
        "s3dc",
        [("A", "input", counts["A"]), ("B", "input", counts["B"]),
         ("C", "input", counts["C"]), ("OUT", "output", counts["OUT"])],
        name="NAND3",
    )
    pin_a = master.pin("A")
    assert len(pin_a.accesses) == 5
    assert len({layer for layer, _, _ in pin_a.accesses}) == 5
    # accesses of one pin share a nanowire position
    assert len({(x, y) for _, x, y in pin_a.accesses}) == 1
    # cell-wide the full set of pin-access layers is used
    used = {layer for pin in master.pins for layer, _, _ in pin.accesses}
    assert used == {2, 3, 4, 5, 6}


def test_tmi_nand3_pin_b_two_accesses_on_m1():
    counts = fab.NAND3_ACCESS_COUNTS[fab.FabricKind.TMI]
    master = fab.make_cell_master(
        "tmi",
        [("A", "input", counts["A"]), ("B", "input", counts["B"]),
         ("C", "input", counts["C"]), ("OUT", "output", counts["OUT"])],
        name="NAND3",
    )
    pin_b = master.pin("B")
    assert len(pin_b.accesses) == 2
    assert all(layer == 1 for layer, _, _ in pin_b.accesses)


def test_planar_masters_keep_every_access_on_m1():
    counts = fab.NAND3_ACCESS_COUNTS[fab.FabricKind.PLANAR_2D]
    master = fab.make_cell_master(
        "2d", [(p, "input", c) for p, c in counts.items()], name="NAND3"
    )
    assert all(layer == 1 for pin in master.pins for layer, _, _ in pin.accesses)


def test_single_pin_master_access_at_center():
    master = fab.make_cell_master("2d", [("P", "input", 1)], name="tap")
    (layer, x, y) = master.pin("P").accesses[0]
    assert layer == 1
    # even dimensions have no exact center site; the access sits on one of
    # the innermost sites
    assert abs(x - (master.width - 1) / 2) <= 0.5
    assert abs(y - (master.height - 1) / 2) <= 0.5


def test_footprints_track_technology():
    assert fab.make_cell_master("2d", [("P", "input", 1)]).area_sites == 16
    assert fab.make_cell_master("tmi", [("P", "input", 1)]).area_sites == 8
    assert fab.make_cell_master("s3dc", [("P", "input", 1)]).area_sites == 9


def test_master_rejects_access_outside_cell():
    with pytest.raises(fab.FabricConfigError, match="outside"):
        fab.CellMaster(
            name="bad", width=2, height=2,
            pins=(fab.PinDef("p", "input", ((1, 5, 0),)),),
        )


def test_pin_requires_access():
    with pytest.raises(fab.FabricConfigError):
        fab.PinDef("p", "input", ())


def test_bind_masters_rebuilds_geometry():
    d = nl.parse_netlist("master NAND3 pins A B C OUT\ncell c1 NAND3\n")
    spec = fab.builtin_fabric("s3dc")
    bound = fab.bind_masters(d, spec)
    master = bound.masters["NAND3"]
    assert (master.width, master.height) == (3, 3)
    assert master.pin("A").direction == "input"
    assert master.pin("OUT").direction == "output"
    assert len(master.pin("A").accesses) == fab.default_access_count(spec.kind, "input")
    # original untouched
    assert d.masters["NAND3"].width == 1


# --- config loading


def test_load_empty_config_equals_builtin():
    assert fab.load_fabric("kind Planar2D\n") == fab.builtin_fabric("2d")


def test_load_overrides_one_layer_capacity():
    spec = fab.load_fabric("kind s3dc\nlayer 5 cap 12\n")
    base = fab.builtin_fabric("s3dc")
    assert spec.layers[4].capacity == 12
    assert [l.capacity for l in spec.layers[:4]] == [l.capacity for l in base.layers[:4]]
    assert spec.layers[4].direction == base.layers[4].direction


def test_load_appends_contiguous_layer():
    spec = fab.load_fabric("kind 2d\nlayer 9 dir h cap 6\n")
    assert spec.num_layers == 9
    assert spec.layers[8].capacity == 6


def test_load_rejects_layer_gap():
    with pytest.raises(fab.FabricConfigError, match="contiguity"):
        fab.load_fabric("kind 2d\nlayer 12 cap 5\n")


def test_load_rejects_negative_capacity():
    with pytest.raises(fab.FabricConfigError, match="negative capacity"):
        fab.load_fabric("kind 2d\nlayer 3 cap -2\n")


def test_load_rejects_unknown_kind():
    with pytest.raises(fab.FabricConfigError, match="unknown fabric kind"):
        fab.load_fabric("kind warpcore\n")


def test_load_requires_kind():
    with pytest.raises(fab.FabricConfigError, match="kind"):
        fab.load_fabric("vdd 0.9\n")


def test_load_rejects_multilayer_pins_on_planar():
    with pytest.raises(fab.FabricConfigError):
        fab.load_fabric("kind 2d\npin_layers 5\n")


def test_load_cellpower_table():
    spec = fab.load_fabric("kind 2d\ncellpower NAND3 1.2 0.08 900\n")
    entry = spec.cell_energy["NAND3"]
    assert entry.internal_fj == pytest.approx(1.2)
    assert entry.pin_cap_ff == pytest.approx(0.08)
    assert entry.drive_res_ohm == pytest.approx(900)


def test_load_vdd_and_site():
    spec = fab.load_fabric("kind tmi\nvdd 0.72\nsite 80\n")
    assert spec.supply_voltage == pytest.approx(0.72)
    assert spec.site_dim_nm == pytest.approx(80)


def test_load_custom_access_layers():
    spec = fab.load_fabric("kind s3dc\naccess_layers 3 4 5 6 7\n")
    assert spec.access_layer_ids == (3, 4, 5, 6, 7)
    assert spec.pin_access_layers == 5
    with pytest.raises(fab.FabricConfigError):
        fab.load_fabric("kind s3dc\naccess_layers 2 3\n")  # count must match N


def test_load_reports_line_numbers():
    with pytest.raises(fab.FabricConfigError, match="line 2"):
        fab.load_fabric("kind 2d\nlayer x cap 5\n")
